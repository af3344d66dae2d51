"""Model indicators and the series file.

One :class:`MonthlyRow` per municipality per month plus an ``AGGREGATE``
row. The aggregate is consistent with the municipal rows: population and
money flows add up and QLI is population weighted.
"""

import csv
import logging
from dataclasses import astuple, dataclass, fields
from typing import Iterable, List, Mapping, Sequence, Union

import numpy as np

from .geo import distances
from .markets.housing import house_prices
from .simconfig import GiniBase, SimConfig
from .world import NOBODY

logger = logging.getLogger(__name__)

AGGREGATE = "AGGREGATE"

HEADER = (
    "run_id",
    "month",
    "municipality",
    "population",
    "families",
    "qli",
    "taxes",
    "gdp",
    "unemployment",
    "gini",
    "mean_house_price",
    "mean_goods_price",
    "mean_commute_km",
    "vacancy_rate",
)


class SeriesWriteError(OSError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"cannot write {path}: {reason}")
        self.path = path


@dataclass(frozen=True)
class MonthlyRow:
    run_id: str
    month: int
    municipality: Union[int, str]
    population: int
    families: int
    qli: float
    taxes: float
    gdp: float
    unemployment: float
    gini: float
    mean_house_price: float
    mean_goods_price: float
    mean_commute_km: float
    vacancy_rate: float

    @property
    def is_aggregate(self) -> bool:
        return self.municipality == AGGREGATE


def gini(values) -> float:
    """Mean absolute pairwise difference over twice the mean.

    Computed from the sorted values, which gives the same number as the
    pairwise sum without the quadratic table.
    """
    v = np.sort(np.asarray(values, dtype=float))
    n = len(v)
    if n == 0:
        raise ValueError("gini of an empty list")
    if np.any(v < 0):
        raise ValueError("gini needs non-negative values")
    total = v.sum()
    if total == 0:
        return 0.0
    ranks = np.arange(1, n + 1)
    # sum_i sum_j |v_i - v_j| == 2 * sum_i (2i - n - 1) v_(i)
    return float(np.sum((2 * ranks - n - 1) * v) / (n * total))


def weighted_mean_qli(qli, populations) -> float:
    qli = np.asarray(qli, dtype=float)
    pops = np.asarray(populations, dtype=float)
    total = pops.sum()
    if total <= 0:
        raise ValueError("weighted QLI of an empty population")
    return float(np.dot(qli, pops) / total)


def weighted_qli(world) -> float:
    return weighted_mean_qli(world.government.qli, world.population_by_municipality())


def gdp_month(world) -> float:
    """Gross (pre-tax) value of this month's goods sales."""
    return float(world.ledger.gdp.sum())


def unemployment_rate(world, config: SimConfig) -> float:
    c = world.citizens
    workforce = c.working_age(config.labor_age_min, config.labor_age_max)
    n = int(workforce.sum())
    if n == 0:
        return 0.0
    return float((workforce & (c.employer == NOBODY)).sum() / n)


def family_wealth(world) -> np.ndarray:
    """Savings, members' money and market value of owned houses, per family."""
    fam = world.families
    c = world.citizens
    n = len(fam)
    wealth = fam.savings.copy()
    wealth += np.bincount(c.family[c.alive], weights=c.money[c.alive], minlength=n)
    owned = np.flatnonzero(world.houses.owner != NOBODY)
    if len(owned):
        wealth += np.bincount(world.houses.owner[owned], weights=house_prices(world, owned), minlength=n)
    return wealth


def family_income(world) -> np.ndarray:
    c = world.citizens
    return np.bincount(c.family[c.alive], weights=c.income[c.alive], minlength=len(world.families))


def _safe_gini(values) -> float:
    return gini(np.maximum(values, 0.0)) if len(values) else 0.0


def _mean(values) -> float:
    return float(np.mean(values)) if len(values) else 0.0


def monthly_rows(world, config: SimConfig, run_id: str) -> List[MonthlyRow]:
    """Indicator rows for the month just simulated."""
    c = world.citizens
    fam = world.families
    h = world.houses
    f = world.firms
    n_muni = world.n_municipalities
    gov = world.government

    citizen_muni = world.citizen_municipality()
    family_muni = world.family_municipality()
    pops = np.bincount(citizen_muni[citizen_muni >= 0], minlength=n_muni)
    n_families = np.bincount(family_muni[family_muni >= 0], minlength=n_muni)

    workforce = c.working_age(config.labor_age_min, config.labor_age_max)
    unemployed = workforce & (c.employer == NOBODY)
    employed = np.flatnonzero(c.alive & (c.employer != NOBODY))
    home = fam.residence[c.family[employed]]
    work = c.employer[employed]
    commute = distances(h.x[home], h.y[home], f.x[work], f.y[work])
    commute_muni = citizen_muni[employed]

    base = family_wealth(world) if config.gini_base is GiniBase.WEALTH else family_income(world)
    prices = house_prices(world)
    vacant = h.vacant()

    rows = []
    for m in range(n_muni):
        in_m = citizen_muni == m
        wf = int((workforce & in_m).sum())
        fam_m = family_muni == m
        houses_m = h.municipality == m
        rows.append(MonthlyRow(
            run_id=run_id,
            month=world.month_index,
            municipality=m,
            population=int(pops[m]),
            families=int(n_families[m]),
            qli=float(gov.qli[m]),
            taxes=float(world.ledger.taxes[m]),
            gdp=float(world.ledger.gdp[m]),
            unemployment=float((unemployed & in_m).sum() / wf) if wf else 0.0,
            gini=_safe_gini(base[fam_m]),
            mean_house_price=_mean(prices[houses_m]),
            mean_goods_price=_mean(f.price[f.municipality == m]),
            mean_commute_km=_mean(commute[commute_muni == m]),
            vacancy_rate=float(vacant[houses_m].mean()) if houses_m.any() else 0.0,
        ))

    wf = int(workforce.sum())
    total_pop = int(pops.sum())
    rows.append(MonthlyRow(
        run_id=run_id,
        month=world.month_index,
        municipality=AGGREGATE,
        population=total_pop,
        families=int(n_families.sum()),
        qli=weighted_mean_qli(gov.qli, pops) if total_pop else float(gov.qli.mean()),
        taxes=float(world.ledger.taxes.sum()),
        gdp=gdp_month(world),
        unemployment=float(unemployed.sum() / wf) if wf else 0.0,
        gini=_safe_gini(base[fam.alive]),
        mean_house_price=_mean(prices),
        mean_goods_price=_mean(f.price),
        mean_commute_km=_mean(commute),
        vacancy_rate=float(vacant.mean()) if len(vacant) else 0.0,
    ))
    return rows


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_series(rows: Iterable[MonthlyRow], path: str) -> None:
    try:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(HEADER)
            for row in rows:
                writer.writerow([_cell(v) for v in astuple(row)])
    except OSError as e:
        raise SeriesWriteError(path, e.strerror or str(e)) from e
    logger.debug("series written to %s", path)


def read_series(path: str) -> List[MonthlyRow]:
    types = {f.name: f.type for f in fields(MonthlyRow)}
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        for record in csv.DictReader(f):
            values = {}
            for name, raw in record.items():
                if name == "municipality":
                    values[name] = raw if raw == AGGREGATE else int(raw)
                elif types[name] in (int, "int"):
                    values[name] = int(raw)
                elif types[name] in (float, "float"):
                    values[name] = float(raw)
                else:
                    values[name] = raw
            rows.append(MonthlyRow(**values))
    return rows


def aggregate_rows(rows: Sequence[MonthlyRow]) -> List[MonthlyRow]:
    return [r for r in rows if r.is_aggregate]


def gdp_per_capita_growth(rows: Sequence[MonthlyRow]) -> float:
    """Mean year-over-year growth of annual GDP per capita.

    Only complete years count; fewer than two complete years gives 0.
    """
    agg = aggregate_rows(rows)
    per_capita = []
    for start in range(0, len(agg) - 11, 12):
        year = agg[start:start + 12]
        pop = np.mean([r.population for r in year])
        per_capita.append(sum(r.gdp for r in year) / pop if pop else 0.0)
    growth = [b / a - 1.0 for a, b in zip(per_capita, per_capita[1:]) if a > 0]
    return float(np.mean(growth)) if growth else 0.0


def mean_unemployment(rows: Sequence[MonthlyRow], from_month: int = 48) -> float:
    """Mean aggregate unemployment from ``from_month`` on (year 5 onward by default)."""
    values = [r.unemployment for r in aggregate_rows(rows) if r.month >= from_month]
    if not values:
        values = [r.unemployment for r in aggregate_rows(rows)]
    return _mean(values)


def write_summary(summary: Mapping[str, object], path: str) -> None:
    """``key = value`` lines, in insertion order."""
    try:
        with open(path, "w", encoding="utf-8") as f:
            for key, value in summary.items():
                f.write(f"{key} = {_cell(value)}\n")
    except OSError as e:
        raise SeriesWriteError(path, e.strerror or str(e)) from e
