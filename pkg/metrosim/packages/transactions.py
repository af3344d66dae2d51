"""Optional per-transaction CSV logs.

Enabled with ``--transactions``; each market appends its rows here and the
run writes them next to its series file.
"""

import csv
import os
from typing import List

PURCHASE_HEADER = ("month", "family", "firm", "money_spent", "units", "tax_paid")
HOUSE_SALE_HEADER = ("month", "house", "buyer", "seller", "price")
HIRE_HEADER = ("month", "firm", "citizen", "criterion")


class TransactionLog:
    def __init__(self):
        self.purchases: List[tuple] = []
        self.house_sales: List[tuple] = []
        self.hires: List[tuple] = []

    def purchase(self, month, family, firm, money_spent, units, tax_paid):
        self.purchases.append((month, family, firm, money_spent, units, tax_paid))

    def house_sale(self, month, house, buyer, seller, price):
        self.house_sales.append((month, house, buyer, seller, price))

    def hire(self, month, firm, citizen, criterion):
        self.hires.append((month, firm, citizen, criterion))

    def write(self, directory: str) -> List[str]:
        written = []
        for name, header, rows in (
            ("purchases.csv", PURCHASE_HEADER, self.purchases),
            ("house_sales.csv", HOUSE_SALE_HEADER, self.house_sales),
            ("hires.csv", HIRE_HEADER, self.hires),
        ):
            path = os.path.join(directory, name)
            with open(path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                writer.writerows((_fmt(v) for v in row) for row in rows)
            written.append(path)
        return written


def _fmt(value):
    if isinstance(value, float):
        return repr(float(value))
    return value
