"""Simulation clock and the monthly order of events.

A month runs, in order: the business-day loop (production and commuting),
demographics, payroll, family cash pooling, the goods market, the tax
ledger, QLI update and public spending, profits and prices (profit sharing
at quarter end), the labor market, the housing market and finally the
indicator rows. Years carry no action of their own.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import firms
from .demography import step_demographics
from .geo import WorldSpec, distances, generate_world
from .markets.goods import clear_goods_market
from .markets.housing import run_housing_market
from .markets.labor import run_labor_market
from .packages.transactions import TransactionLog
from .simconfig import SimConfig
from .stats import MonthlyRow, monthly_rows
from .world import NOBODY, MonthLedger, World

logger = logging.getLogger(__name__)

START_YEAR = 2000


@dataclass(frozen=True)
class Clock:
    month_index: int

    def __post_init__(self):
        if self.month_index < 0:
            raise ValueError("month_index must be non-negative")

    @property
    def is_quarter_end(self) -> bool:
        return self.month_index % 3 == 2

    @property
    def is_year_end(self) -> bool:
        return self.month_index % 12 == 11

    @property
    def year(self) -> int:
        return START_YEAR + self.month_index // 12

    def tick(self) -> "Clock":
        return Clock(self.month_index + 1)


@dataclass
class TimeSeries:
    run_id: str
    rows: List[MonthlyRow] = field(default_factory=list)
    production: List[float] = field(default_factory=list)
    money_balance: List[float] = field(default_factory=list)
    world: Optional[World] = None

    @property
    def months(self) -> int:
        return len(self.production)


def _start_month(world: World) -> None:
    world.ledger = MonthLedger.zeros(world.n_municipalities)
    world.government.taxes_this_month[:] = 0.0
    world.citizens.income[:] = 0.0
    f = world.firms
    for column in (f.sales_month, f.revenue_month, f.production_month, f.profit_month):
        column[:] = 0.0


def commute_distances(world: World) -> np.ndarray:
    """Residence-to-employer distance of every employed citizen."""
    c = world.citizens
    employed = np.flatnonzero(c.alive & (c.employer != NOBODY))
    home = world.families.residence[c.family[employed]]
    work = c.employer[employed]
    h, f = world.houses, world.firms
    return distances(h.x[home], h.y[home], f.x[work], f.y[work])


def business_days(world: World, config: SimConfig) -> None:
    commute = commute_distances(world)
    for _ in range(config.business_days):
        firms.produce(world, config.alpha)
        world.ledger.commute_km += float(commute.sum())
        world.ledger.commute_trips += len(commute)


def pool_family_cash(world: World) -> None:
    """Members hand their money over to the family budget."""
    c = world.citizens
    alive = np.flatnonzero(c.alive)
    world.families.savings += np.bincount(c.family[alive], weights=c.money[alive], minlength=len(world.families))
    c.money[alive] = 0.0


def _log_events(world: World) -> None:
    e = world.ledger
    logger.debug(
        "month %d: %d births, %d deaths, %d families dissolved, %d retired, %d hired, %d fired, %d houses sold",
        world.month_index,
        e.births,
        e.deaths,
        e.dissolved,
        e.retirements,
        e.hires,
        e.fires,
        e.house_sales,
    )


def run_month(world: World, config: SimConfig, seed: Optional[int] = None, run_id: str = "") -> List[MonthlyRow]:
    seed = config.seed if seed is None else seed
    clock = Clock(world.month_index)
    gov = world.government
    _start_month(world)

    business_days(world, config)
    step_demographics(world, config, seed)
    firms.pay_wages(world)
    pool_family_cash(world)
    clear_goods_market(world, config, seed)
    world.ledger.taxes = gov.taxes_this_month.copy()
    gov.apply_qli_update(world.population_by_municipality(), config.qli_gain)
    gov.spend(world, config)
    firms.book_profits(world)
    firms.update_price(world, config)
    if clock.is_quarter_end:
        firms.distribute_profits(world, config)
    run_labor_market(world, config, seed)
    run_housing_market(world, config, seed)
    _log_events(world)

    rows = monthly_rows(world, config, run_id)
    world.month_index += 1
    return rows


def run_simulation(
    spec: WorldSpec,
    config: SimConfig,
    run_id: Optional[str] = None,
    world: Optional[World] = None,
    progress: Optional[Callable[[int, MonthlyRow], None]] = None,
    transactions: bool = False,
) -> TimeSeries:
    """Generate (or take) a world and run it for ``config.months`` months.

    ``progress`` is called at the end of every simulated year with the year
    and that month's aggregate row.
    """
    config.validate()
    if run_id is None:
        run_id = f"{config.government_mode.value}-s{config.seed}"
    if world is None:
        world = generate_world(spec, config)
    if transactions:
        world.transactions = TransactionLog()

    series = TimeSeries(run_id=run_id, world=world)
    for _ in range(config.months):
        clock = Clock(world.month_index)
        rows = run_month(world, config, config.seed, run_id)
        series.rows.extend(rows)
        series.production.append(world.ledger.production)
        series.money_balance.append(world.money_balance())
        if progress is not None and clock.is_year_end:
            progress(clock.year, rows[-1])
    logger.info("run %s finished after %d months", run_id, config.months)
    return series
