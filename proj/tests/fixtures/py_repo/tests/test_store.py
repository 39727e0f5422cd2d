from mypkg.store import Store


def test_add_row_respects_limit():
    store = Store()
    store.add_row(5)
    assert store.row_count() == 1


def test_row_count_empty():
    store = Store()
    assert store.row_count() == 0
