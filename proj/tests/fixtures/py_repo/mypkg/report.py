from .store import Store
from .transforms import square_rows, total


def build_report(values):
    store = Store()
    for value in values:
        store.add_row(value)
    squared = square_rows(store.rows)
    return {"count": store.row_count(), "total": total(squared)}
