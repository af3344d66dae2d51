"""Municipal governments.

Taxes are credited at the location of the selling firm. In individual mode
each municipality keeps its own ledger and raises its own QLI by its
per-capita collection. In unified mode one ledger serves the whole region
and every municipality receives the same per-capita increment.

Every month a share of the treasury is spent, by default on goods bought
from the firms of the municipality, so money collected as tax comes back
into circulation over the following months.
"""

import logging

import numpy as np

from .markets.goods import public_purchases
from .simconfig import GovernmentMode, SimConfig, Spending

logger = logging.getLogger(__name__)


class Government:
    def __init__(self, mode, qli: np.ndarray):
        self.mode = GovernmentMode(mode)
        self.qli = np.asarray(qli, dtype=float).copy()
        if np.any(self.qli <= 0):
            raise ValueError("QLI must be positive")
        n = len(self.qli)
        # treasury[m] in individual mode, shared in unified mode
        self.treasury = np.zeros(n)
        self.shared = 0.0
        self.collected = np.zeros(n)
        self.shared_collected = 0.0
        # by location, whatever the mode; for statistics
        self.taxes_this_month = np.zeros(n)

    @property
    def unified(self) -> bool:
        return self.mode is GovernmentMode.UNIFIED

    def collect_tax(self, municipality_id: int, amount: float) -> None:
        if amount < 0:
            raise ValueError(f"negative tax amount {amount}")
        if amount == 0:
            return
        self.taxes_this_month[municipality_id] += amount
        if self.unified:
            self.shared_collected += amount
            self.shared += amount
        else:
            self.collected[municipality_id] += amount
            self.treasury[municipality_id] += amount

    def collect_taxes(self, amounts: np.ndarray) -> None:
        """Credit a vector of per-municipality amounts (one goods-market clearing)."""
        amounts = np.asarray(amounts, dtype=float)
        if np.any(amounts < 0):
            raise ValueError("negative tax amount")
        self.taxes_this_month += amounts
        if self.unified:
            total = float(amounts.sum())
            self.shared_collected += total
            self.shared += total
        else:
            self.collected += amounts
            self.treasury += amounts

    def receive_estate(self, municipality_id: int, amount: float) -> None:
        """Savings of a family that died out. Spent with the taxes, not counted as tax."""
        if self.unified:
            self.shared += amount
        else:
            self.treasury[municipality_id] += amount

    def monthly_collection(self) -> np.ndarray:
        if self.unified:
            return np.full(len(self.qli), self.shared_collected)
        return self.collected.copy()

    def apply_qli_update(self, populations: np.ndarray, qli_gain: float) -> np.ndarray:
        """Turn the month's collection into QLI and reset the collection."""
        populations = np.asarray(populations, dtype=float)
        if self.unified:
            total_pop = populations.sum()
            if total_pop > 0:
                self.qli += qli_gain * self.shared_collected / total_pop
            self.shared_collected = 0.0
        else:
            populated = populations > 0
            self.qli[populated] += qli_gain * self.collected[populated] / populations[populated]
            self.collected[:] = 0.0
        return self.qli

    def budget(self, rate: float) -> np.ndarray:
        """Money to spend this month: ``rate`` of each municipal treasury, or
        of the pooled treasury (a single entry) in unified mode."""
        return rate * (np.array([self.shared]) if self.unified else self.treasury)

    def spend(self, world, config: SimConfig) -> np.ndarray:
        """Spend ``config.spending_rate`` of the treasury.

        Depending on ``config.spending`` the money buys goods from firms or is
        paid to residents equally per capita. Returns the amount spent in each
        municipality: where the selling firms are, or where the residents live.
        Whatever is not spent stays in the treasury for the following months.
        """
        n = len(self.qli)
        if config.spending is Spending.RETAINED or config.spending_rate == 0:
            return np.zeros(n)
        budget = self.budget(config.spending_rate)
        if config.spending is Spending.PURCHASES:
            paid = public_purchases(world, budget, pooled=self.unified)
            location = world.firms.municipality
        else:
            paid, location = self._transfers(world, budget)
        group = np.zeros(len(location), dtype=np.int64) if self.unified else location
        used = np.bincount(group, weights=paid, minlength=len(budget))
        if self.unified:
            self.shared -= float(used.sum())
        else:
            self.treasury -= used
        spent = np.bincount(location, weights=paid, minlength=n)
        logger.debug("month %d: public spending %.4f", world.month_index, float(spent.sum()))
        return spent

    def _transfers(self, world, budget: np.ndarray):
        """Per-capita payments to residents. A municipality without residents pays nothing."""
        c = world.citizens
        muni = world.citizen_municipality()
        residents = np.flatnonzero(muni >= 0)
        where = muni[residents]
        pops = np.bincount(where, minlength=len(self.qli))
        if self.unified:
            total = pops.sum()
            paid = np.full(len(residents), budget[0] / total if total > 0 else 0.0)
        else:
            per_capita = np.divide(budget, pops, out=np.zeros(len(self.qli)), where=pops > 0)
            paid = per_capita[where]
        c.money[residents] += paid
        c.income[residents] += paid
        return paid, where

    def balance(self) -> float:
        return float(self.treasury.sum() + self.shared)

    def switch_mode(self, mode, populations: np.ndarray) -> None:
        """Reorganise the ledgers for another mode without changing the money held.

        Pooling adds the municipal treasuries up; splitting shares the pooled
        treasury out by population.
        """
        mode = GovernmentMode(mode)
        if mode is self.mode:
            return
        if mode is GovernmentMode.UNIFIED:
            self.shared += float(self.treasury.sum())
            self.shared_collected += float(self.collected.sum())
            self.treasury[:] = 0.0
            self.collected[:] = 0.0
        else:
            pops = np.asarray(populations, dtype=float)
            weights = pops / pops.sum() if pops.sum() > 0 else np.full(len(self.qli), 1.0 / len(self.qli))
            self.treasury += self.shared * weights
            self.collected += self.shared_collected * weights
            self.shared = 0.0
            self.shared_collected = 0.0
        logger.info("government switched to %s mode", mode.value)
        self.mode = mode

    def state(self) -> dict:
        return {
            "government.mode": np.array([self.mode.value]),
            "government.qli": self.qli,
            "government.treasury": self.treasury,
            "government.shared": np.array([self.shared]),
        }

    @classmethod
    def from_state(cls, data) -> "Government":
        gov = cls(str(data["government.mode"][0]), data["government.qli"])
        gov.treasury = data["government.treasury"].copy()
        gov.shared = float(data["government.shared"][0])
        return gov
