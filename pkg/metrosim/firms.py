"""Firm production, pricing, payroll and profit sharing.

A worker of qualification q produces ``alpha * q`` units per business day
and earns ``wage_base * q`` per month.
"""

import logging

import numpy as np

from .simconfig import SimConfig
from .world import NOBODY

logger = logging.getLogger(__name__)


def staff(world):
    """Citizen ids with a job, and their employers."""
    c = world.citizens
    ids = np.flatnonzero(c.alive & (c.employer != NOBODY))
    return ids, c.employer[ids]


def staff_qualification(world):
    """Per firm: sum of staff qualification and headcount."""
    ids, employer = staff(world)
    n = len(world.firms)
    q = world.citizens.qualification[ids].astype(float)
    return np.bincount(employer, weights=q, minlength=n), np.bincount(employer, minlength=n)


def produce(world, alpha: float) -> np.ndarray:
    """One business day of production. Returns units added per firm."""
    qsum, _ = staff_qualification(world)
    added = alpha * qsum
    world.firms.stock += added
    world.firms.production_month += added
    world.ledger.production += float(added.sum())
    return added


def monthly_payroll(world) -> np.ndarray:
    qsum, _ = staff_qualification(world)
    return world.firms.wage_base * qsum


def cash_reserve(world, config: SimConfig) -> np.ndarray:
    return config.reserve_months * monthly_payroll(world)


def paying_wages(world) -> np.ndarray:
    """Wage each firm is seen to pay when firms are ranked for hiring."""
    qsum, heads = staff_qualification(world)
    mean_q = np.divide(qsum, heads, out=np.full(len(qsum), float(world.median_qualification)), where=heads > 0)
    return world.firms.wage_base * mean_q


def update_price(world, config: SimConfig) -> np.ndarray:
    """Banded price rule driven by stock measured in months of current sales."""
    f = world.firms
    low = config.stock_low_months * f.sales_month
    high = config.stock_high_months * f.sales_month
    price = f.price.copy()
    price[f.stock < low] *= 1.0 + config.markup_step
    price[f.stock > high] *= 1.0 - config.markup_step
    f.price = np.maximum(price, config.price_floor)
    return f.price


def pay_wages(world) -> np.ndarray:
    """Pay the month's wages. Returns the total paid per firm.

    A firm that cannot cover its payroll pays its staff in descending
    qualification order (ties by lower id) and stops at the first wage its
    remaining cash cannot cover. Unpaid wages are not owed.
    """
    c = world.citizens
    f = world.firms
    ids, employer = staff(world)
    wages = f.wage_base[employer] * c.qualification[ids]
    payroll = np.bincount(employer, weights=wages, minlength=len(f))

    covered = f.cash >= payroll
    paid_each = np.where(covered[employer], wages, 0.0)
    for firm in np.flatnonzero(~covered & (payroll > 0)):
        mine = np.flatnonzero(employer == firm)
        order = mine[np.lexsort((ids[mine], -c.qualification[ids[mine]]))]
        cash = f.cash[firm]
        for k in order:
            if wages[k] > cash:
                break
            paid_each[k] = wages[k]
            cash -= wages[k]

    paid = np.bincount(employer, weights=paid_each, minlength=len(f))
    c.money[ids] += paid_each
    c.income[ids] += paid_each
    f.cash -= paid
    f.costs_quarter += paid
    f.profit_month -= paid
    shortfall = int((~covered & (payroll > 0)).sum())
    if shortfall:
        logger.debug("month %d: %d firms paid a partial payroll", world.month_index, shortfall)
    return paid


def book_profits(world) -> np.ndarray:
    """Close the month's profit: sales revenue net of tax minus wages paid."""
    f = world.firms
    f.profit_month += f.revenue_month
    return f.profit_month


def distribute_profits(world, config: SimConfig) -> np.ndarray:
    """Quarter-end profit sharing. Returns the payment made to each citizen.

    A firm with positive quarterly profit and cash above its reserve splits
    the surplus over the reserve among its staff in proportion to
    qualification. Quarterly accumulators reset for every firm.
    """
    c = world.citizens
    f = world.firms
    ids, employer = staff(world)
    q = c.qualification[ids].astype(float)
    qsum = np.bincount(employer, weights=q, minlength=len(f))
    reserve = config.reserve_months * f.wage_base * qsum
    eligible = (f.revenue_quarter - f.costs_quarter > 0) & (f.cash > reserve) & (qsum > 0)
    surplus = np.where(eligible, f.cash - reserve, 0.0)

    share = np.divide(q, qsum[employer], out=np.zeros(len(ids)), where=qsum[employer] > 0)
    each = surplus[employer] * share
    payments = np.zeros(len(c.alive))
    payments[ids] = each
    c.money[ids] += each
    c.income[ids] += each
    f.cash -= np.bincount(employer, weights=each, minlength=len(f))
    f.revenue_quarter[:] = 0.0
    f.costs_quarter[:] = 0.0
    return payments
