"""Agent storage.

Agents live in struct-of-arrays stores indexed by id: the id of an agent is
its row. Rows are never reused; a dead citizen or a dissolved family keeps
its row with ``alive`` cleared. Every phase of the month works on whole
columns at once.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .geo import WorldSpec

logger = logging.getLogger(__name__)

NOBODY = -1
FEMALE, MALE = 0, 1


class _Store:
    columns: Dict[str, type] = {}

    def __init__(self, **arrays):
        for name, dtype in self.columns.items():
            setattr(self, name, np.asarray(arrays.get(name, np.empty(0, dtype=dtype)), dtype=dtype))

    @classmethod
    def empty(cls):
        return cls()

    def __len__(self):
        first = next(iter(self.columns))
        return len(getattr(self, first))

    def _extend(self, values: dict) -> np.ndarray:
        n = len(self)
        count = max(np.size(v) for v in values.values())
        for name, dtype in self.columns.items():
            new = np.broadcast_to(np.asarray(values[name], dtype=dtype), (count,))
            setattr(self, name, np.concatenate([getattr(self, name), new]))
        return np.arange(n, n + count)

    def state(self, prefix: str) -> dict:
        return {f"{prefix}.{name}": getattr(self, name) for name in self.columns}

    @classmethod
    def from_state(cls, prefix: str, data) -> "_Store":
        return cls(**{name: data[f"{prefix}.{name}"] for name in cls.columns})


class Citizens(_Store):
    columns = {
        "gender": np.int8,
        "age": np.int32,  # months
        "qualification": np.int8,
        "family": np.int64,
        "employer": np.int64,
        "money": np.float64,
        "income": np.float64,  # credited this month
        "alive": np.bool_,
    }

    def append(self, gender, age, qualification, family) -> np.ndarray:
        return self._extend({
            "gender": gender,
            "age": age,
            "qualification": qualification,
            "family": family,
            "employer": NOBODY,
            "money": 0.0,
            "income": 0.0,
            "alive": True,
        })

    def age_years(self) -> np.ndarray:
        return self.age // 12

    def working_age(self, low: int, high: int) -> np.ndarray:
        years = self.age_years()
        return self.alive & (years > low) & (years < high)


class Families(_Store):
    columns = {
        "savings": np.float64,
        "residence": np.int64,
        "alive": np.bool_,
    }

    def append(self, savings, residence=NOBODY) -> np.ndarray:
        return self._extend({"savings": savings, "residence": residence, "alive": True})


class Houses(_Store):
    columns = {
        "x": np.float64,
        "y": np.float64,
        "municipality": np.int64,
        "size": np.float64,
        "quality": np.float64,
        "owner": np.int64,  # NOBODY: municipal vacant pool
        "occupant": np.int64,
        "for_sale": np.bool_,
    }

    def append(self, x, y, municipality, size, quality, owner, occupant) -> np.ndarray:
        return self._extend({
            "x": x,
            "y": y,
            "municipality": municipality,
            "size": size,
            "quality": quality,
            "owner": owner,
            "occupant": occupant,
            "for_sale": False,
        })

    def vacant(self) -> np.ndarray:
        return self.occupant == NOBODY


class Firms(_Store):
    columns = {
        "x": np.float64,
        "y": np.float64,
        "municipality": np.int64,
        "cash": np.float64,
        "stock": np.float64,
        "price": np.float64,
        "wage_base": np.float64,
        "revenue_quarter": np.float64,
        "costs_quarter": np.float64,
        "sales_month": np.float64,  # units
        "revenue_month": np.float64,
        "production_month": np.float64,
        "profit_month": np.float64,
    }

    def append(self, x, y, municipality, cash, price, wage_base) -> np.ndarray:
        return self._extend({
            "x": x,
            "y": y,
            "municipality": municipality,
            "cash": cash,
            "stock": 0.0,
            "price": price,
            "wage_base": wage_base,
            "revenue_quarter": 0.0,
            "costs_quarter": 0.0,
            "sales_month": 0.0,
            "revenue_month": 0.0,
            "production_month": 0.0,
            "profit_month": 0.0,
        })


@dataclass
class MonthLedger:
    """Per-month flows, reset at the start of every month."""

    gdp: np.ndarray
    taxes: np.ndarray
    production: float = 0.0
    commute_km: float = 0.0
    commute_trips: int = 0
    births: int = 0
    deaths: int = 0
    dissolved: int = 0
    retirements: int = 0
    house_sales: int = 0
    hires: int = 0
    fires: int = 0

    @classmethod
    def zeros(cls, n_municipalities: int) -> "MonthLedger":
        return cls(gdp=np.zeros(n_municipalities), taxes=np.zeros(n_municipalities))


@dataclass
class World:
    spec: WorldSpec
    citizens: Citizens
    families: Families
    houses: Houses
    firms: Firms
    government: "Government"  # noqa: F821
    median_qualification: float
    month_index: int = 0
    housing_sink: float = 0.0
    ledger: MonthLedger = field(init=False)
    transactions: Optional["TransactionLog"] = None  # noqa: F821

    def __post_init__(self):
        self.ledger = MonthLedger.zeros(self.n_municipalities)

    @property
    def n_municipalities(self) -> int:
        return len(self.spec.municipalities)

    def family_municipality(self) -> np.ndarray:
        """Municipality of each family's residence; NOBODY for dissolved families."""
        fam = self.families
        muni = self.houses.municipality[np.where(fam.alive, fam.residence, 0)] if len(self.houses) else np.zeros(len(fam), dtype=np.int64)
        return np.where(fam.alive, muni, NOBODY)

    def citizen_municipality(self) -> np.ndarray:
        fam = np.where(self.citizens.alive, self.citizens.family, 0)
        muni = self.houses.municipality[self.families.residence[fam]] if len(self.families) else np.zeros(0, dtype=np.int64)
        return np.where(self.citizens.alive, muni, NOBODY)

    def family_sizes(self) -> np.ndarray:
        alive = self.citizens.alive
        return np.bincount(self.citizens.family[alive], minlength=len(self.families))

    def population_by_municipality(self) -> np.ndarray:
        muni = self.citizen_municipality()
        return np.bincount(muni[muni >= 0], minlength=self.n_municipalities)

    def total_money(self) -> float:
        """Money held by citizens, families, firms and government."""
        return float(
            self.citizens.money[self.citizens.alive].sum()
            + self.families.savings[self.families.alive].sum()
            + self.firms.cash.sum()
            + self.government.balance()
        )

    def money_balance(self) -> float:
        """Total money plus everything sunk by pool-house sales; constant over a run."""
        return self.total_money() + self.housing_sink


def save_world(world: World, path: str) -> None:
    arrays = {}
    arrays.update(world.citizens.state("citizens"))
    arrays.update(world.families.state("families"))
    arrays.update(world.houses.state("houses"))
    arrays.update(world.firms.state("firms"))
    arrays.update(world.government.state())
    arrays["world.scalars"] = np.array([world.month_index, world.housing_sink, world.median_qualification])
    with open(path, "wb") as f:
        np.savez_compressed(f, **arrays)
    logger.info("world snapshot written to %s", path)


def load_world(path: str, spec: WorldSpec, mode=None) -> World:
    """Read a snapshot written by ``save_world``.

    With ``mode`` the government continues in that mode whatever mode the
    snapshot was saved in.
    """
    from .government import Government

    with np.load(path) as data:
        month, sink, median_q = data["world.scalars"]
        world = World(
            spec=spec,
            citizens=Citizens.from_state("citizens", data),
            families=Families.from_state("families", data),
            houses=Houses.from_state("houses", data),
            firms=Firms.from_state("firms", data),
            government=Government.from_state(data),
            median_qualification=float(median_q),
            month_index=int(month),
            housing_sink=float(sink),
        )
    if world.n_municipalities != len(world.government.qli):
        raise ValueError(f"snapshot {path} does not match the world spec")
    if mode is not None:
        world.government.switch_mode(mode, world.population_by_municipality())
    logger.info("world snapshot loaded from %s", path)
    return world


__all__: List[str] = [
    "Citizens",
    "Families",
    "Firms",
    "Houses",
    "MonthLedger",
    "NOBODY",
    "World",
    "load_world",
    "save_world",
]
