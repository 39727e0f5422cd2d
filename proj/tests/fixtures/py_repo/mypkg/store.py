from .config import make_config


class Store:
    def __init__(self):
        self.rows = []
        self.config = make_config()

    def add_row(self, row):
        if len(self.rows) < self.config["limit"]:
            self.rows.append(row)

    def row_count(self):
        return len(self.rows)
