"""Goods market.

Each family draws a consumption budget from its pooled cash, picks one firm
from a random sample of the market (nearest or cheapest, even odds) and buys
as much as the budget and the firm's stock allow. Tax is paid to the
government of the firm's municipality. Families are served in id order.
Governments spend their treasuries at the same firms.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..geo import distances
from ..packages.streams import Phase, stream
from ..simconfig import SimConfig

logger = logging.getLogger(__name__)

NEAREST_SHARE = 0.5


@dataclass(frozen=True)
class GoodsPurchase:
    family_id: int
    firm_id: int
    money_spent: float
    units: float
    tax_paid: float


def decide_consumption(cash, beta: float, u) -> np.ndarray:
    """Budget ``cash * beta * U`` with ``U`` in (0, 1].

    ``u`` is a draw from [0, 1) (scalar or array); ``1 - u`` maps it onto
    (0, 1].
    """
    return np.asarray(cash, dtype=float) * beta * (1.0 - np.asarray(u, dtype=float))


def _argbest(values: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """Row-wise id of the smallest value, ties to the lower id."""
    best = values.min(axis=1, keepdims=True)
    big = np.iinfo(np.int64).max
    return np.where(values == best, ids, big).min(axis=1)


def choose_firms(fx, fy, price, home_x, home_y, market_size: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized firm choice for a block of families (in id order).

    Each family flips a coin: heads picks the nearest firm of its sample,
    tails the cheapest. A sample as large as the market is the whole market.
    """
    n_fam, n_firms = len(home_x), len(fx)
    criterion = rng.random(n_fam)
    if market_size >= n_firms:
        sample = np.broadcast_to(np.arange(n_firms), (n_fam, n_firms))
    else:
        sample = rng.integers(0, n_firms, (n_fam, market_size))
    nearest = criterion < NEAREST_SHARE
    dist = distances(home_x[:, None], home_y[:, None], fx[sample], fy[sample])
    by_distance = _argbest(dist, sample)
    by_price = _argbest(price[sample], sample)
    return np.where(nearest, by_distance, by_price)


def choose_firm(home, firms_xy, prices, market_size: int, rng: np.random.Generator) -> int:
    """Firm choice for a single family at ``home``."""
    fx = np.asarray([p[0] for p in firms_xy], dtype=float)
    fy = np.asarray([p[1] for p in firms_xy], dtype=float)
    chosen = choose_firms(fx, fy, np.asarray(prices, dtype=float), np.array([home[0]]), np.array([home[1]]), market_size, rng)
    return int(chosen[0])


def execute_purchase(world, family_id: int, firm_id: int, spend: float, tax_rate: float) -> GoodsPurchase:
    """One purchase, applied to ``world``."""
    if spend < 0:
        raise ValueError("spend must be non-negative")
    if not 0 <= tax_rate < 1:
        raise ValueError("tax_rate must be in [0, 1)")
    f = world.firms
    price = f.price[firm_id]
    units = min(f.stock[firm_id], spend / price)
    gross = units * price
    tax = gross * tax_rate
    _settle(world, np.array([family_id]), np.array([firm_id]), np.array([units]), np.array([gross]), np.array([tax]))
    return GoodsPurchase(int(family_id), int(firm_id), float(gross), float(units), float(tax))


def allocate_stock(stock: np.ndarray, price: np.ndarray, firm_of: np.ndarray, spend: np.ndarray) -> np.ndarray:
    """Units each buyer obtains when buyers are served in array order.

    Equivalent to running :func:`execute_purchase` buyer by buyer: a buyer
    receives ``min(wanted, stock left)``, so within one firm the units served
    are the increments of ``min(cumulative wanted, stock)``.
    """
    if len(spend) == 0:
        return np.zeros(0)
    wanted = spend / price[firm_of]
    order = np.argsort(firm_of, kind="stable")
    firm_sorted = firm_of[order]
    cum = np.cumsum(wanted[order])
    starts = np.flatnonzero(np.r_[True, firm_sorted[1:] != firm_sorted[:-1]])
    offset = np.repeat(cum[starts] - wanted[order][starts], np.diff(np.r_[starts, len(order)]))
    cum_in_firm = cum - offset
    capped = np.minimum(cum_in_firm, stock[firm_sorted])
    before = np.minimum(cum_in_firm - wanted[order], stock[firm_sorted])
    units = np.empty_like(wanted)
    units[order] = np.maximum(capped - before, 0.0)
    return units


def _settle(world, fam_ids, firm_ids, units, gross, tax) -> None:
    f = world.firms
    n_firms = len(f)
    n_muni = world.n_municipalities
    world.families.savings[fam_ids] -= gross
    f.stock -= np.bincount(firm_ids, weights=units, minlength=n_firms)
    np.maximum(f.stock, 0.0, out=f.stock)
    net = np.bincount(firm_ids, weights=gross - tax, minlength=n_firms)
    f.cash += net
    f.revenue_month += net
    f.revenue_quarter += np.bincount(firm_ids, weights=gross, minlength=n_firms)
    f.sales_month += np.bincount(firm_ids, weights=units, minlength=n_firms)
    muni = f.municipality[firm_ids]
    world.government.collect_taxes(np.bincount(muni, weights=tax, minlength=n_muni))
    world.ledger.gdp += np.bincount(muni, weights=gross, minlength=n_muni)


def public_purchases(world, budgets: np.ndarray, pooled: bool) -> np.ndarray:
    """Government buying. Returns the amount paid to each firm.

    ``budgets`` holds one amount per municipality, spent at the firms located
    there, or with ``pooled`` a single amount spent at every firm of the
    region. Firms sell in proportion to the value of their stock, at their
    price and free of tax; a budget larger than the stock on offer is only
    partly spent. Public purchases are not counted in GDP.
    """
    f = world.firms
    budgets = np.asarray(budgets, dtype=float)
    value = f.stock * f.price
    group = np.zeros(len(f), dtype=np.int64) if pooled else f.municipality
    offered = np.bincount(group, weights=value, minlength=len(budgets))
    spent = np.minimum(budgets, offered[: len(budgets)])
    share = np.divide(value, offered[group], out=np.zeros(len(f)), where=offered[group] > 0)
    paid = spent[group] * share
    units = np.minimum(paid / f.price, f.stock)
    f.stock -= units
    f.cash += paid
    f.revenue_month += paid
    f.revenue_quarter += paid
    f.sales_month += units
    return paid


def clear_goods_market(world, config: SimConfig, seed: int) -> Optional[float]:
    """Run the month's goods market. Returns the gross value sold."""
    f = world.firms
    fam = world.families
    fam_ids = np.flatnonzero(fam.alive)
    if len(f) == 0 or len(fam_ids) == 0:
        return 0.0
    rng = stream(seed, world.month_index, Phase.GOODS)
    budget = decide_consumption(fam.savings[fam_ids], config.beta, rng.random(len(fam_ids)))
    home = fam.residence[fam_ids]
    chosen = choose_firms(f.x, f.y, f.price, world.houses.x[home], world.houses.y[home], config.market_sample_size, rng)

    units = allocate_stock(f.stock, f.price, chosen, budget)
    gross = units * f.price[chosen]
    tax = gross * config.tax_rate
    _settle(world, fam_ids, chosen, units, gross, tax)

    if world.transactions is not None:
        for row in zip(fam_ids, chosen, gross, units, tax):
            if row[3] > 0:
                world.transactions.purchase(world.month_index, int(row[0]), int(row[1]), *map(float, row[2:]))
    total = float(gross.sum())
    logger.debug("month %d: goods market sold %.4f", world.month_index, total)
    return total
