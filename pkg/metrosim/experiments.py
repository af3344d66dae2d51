"""Ensembles, the government-mode comparison and one-at-a-time sweeps."""

import csv
import dataclasses
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as sps

from .geo import WorldSpec, citizen_targets
from .scheduler import TimeSeries, run_simulation
from .simconfig import SWEEPABLE, GovernmentMode, SimConfig
from .stats import (
    SeriesWriteError,
    aggregate_rows,
    family_wealth,
    gdp_per_capita_growth,
    mean_unemployment,
    write_series,
    write_summary,
)

logger = logging.getLogger(__name__)

LAST_YEAR = 12


class EnsembleRunError(RuntimeError):
    def __init__(self, seed: int, reason: str):
        super().__init__(f"run with seed {seed} failed: {reason}")
        self.seed = seed


@dataclass(frozen=True)
class RunRecord:
    run_id: str
    seed: int
    mode: str
    overrides: Tuple[Tuple[str, str], ...]
    final_weighted_qli: float
    last_year_weighted_qli: float
    final_gini: float
    mean_gini: float
    gdp_per_capita_growth: float
    mean_unemployment: float
    cumulative_gdp: float
    total_production: float
    family_wealth: float
    firm_wealth: float
    housing_sink: float
    # trajectories, one entry per month
    weighted_qli_path: Tuple[float, ...] = field(default=(), repr=False)
    municipal_qli_path: Tuple[Tuple[float, ...], ...] = field(default=(), repr=False)

    def summary(self) -> Dict[str, object]:
        out = dataclasses.asdict(self)
        del out["weighted_qli_path"], out["municipal_qli_path"]
        out["overrides"] = ",".join(f"{k}={v}" for k, v in self.overrides) or "-"
        return out


def record_from_series(series: TimeSeries, config: SimConfig, overrides: Mapping[str, object] = ()) -> RunRecord:
    agg = aggregate_rows(series.rows)
    weighted = tuple(r.qli for r in agg)
    municipal: Dict[int, List[float]] = {}
    for r in series.rows:
        if not r.is_aggregate:
            municipal.setdefault(r.month, []).append(r.qli)
    world = series.world
    return RunRecord(
        run_id=series.run_id,
        seed=config.seed,
        mode=config.government_mode.value,
        overrides=tuple((k, str(v)) for k, v in dict(overrides).items()),
        final_weighted_qli=weighted[-1],
        last_year_weighted_qli=float(np.mean(weighted[-LAST_YEAR:])),
        final_gini=agg[-1].gini,
        mean_gini=float(np.mean([r.gini for r in agg])),
        gdp_per_capita_growth=gdp_per_capita_growth(series.rows),
        mean_unemployment=mean_unemployment(series.rows),
        cumulative_gdp=float(sum(r.gdp for r in agg)),
        total_production=float(sum(series.production)),
        family_wealth=float(family_wealth(world)[world.families.alive].sum()),
        firm_wealth=float(world.firms.cash.sum()),
        housing_sink=float(world.housing_sink),
        weighted_qli_path=weighted,
        municipal_qli_path=tuple(tuple(municipal[m]) for m in sorted(municipal)),
    )


def save_run(series: TimeSeries, record: RunRecord, config: SimConfig, directory: str) -> str:
    """Write ``series.csv``, ``summary.txt`` and the resolved config under ``directory/run_id``."""
    from .config import write_config_snapshot

    run_dir = os.path.join(directory, series.run_id)
    try:
        os.makedirs(run_dir, exist_ok=True)
    except OSError as e:
        raise SeriesWriteError(run_dir, e.strerror or str(e)) from e
    write_series(series.rows, os.path.join(run_dir, "series.csv"))
    write_summary(record.summary(), os.path.join(run_dir, "summary.txt"))
    write_config_snapshot(config, os.path.join(run_dir, "config.ini"))
    if series.world is not None and series.world.transactions is not None:
        series.world.transactions.write(run_dir)
    return run_dir


def execute_run(
    spec: WorldSpec,
    config: SimConfig,
    run_id: str,
    overrides: Mapping[str, object] = (),
    output_dir: Optional[str] = None,
    transactions: bool = False,
) -> RunRecord:
    """One full run; module level so worker processes can pickle it."""
    series = run_simulation(spec, config, run_id=run_id, transactions=transactions)
    record = record_from_series(series, config, overrides)
    if output_dir is not None:
        save_run(series, record, config, output_dir)
    return record


@dataclass
class EnsembleResult:
    records: List[RunRecord]

    def __len__(self):
        return len(self.records)

    @property
    def seeds(self) -> List[int]:
        return [r.seed for r in self.records]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def mean(self, name: str) -> float:
        return float(self.column(name).mean())

    def mean_weighted_qli_path(self) -> np.ndarray:
        return np.mean([r.weighted_qli_path for r in self.records], axis=0)

    def mean_municipal_qli_path(self) -> np.ndarray:
        """Array of shape (months, municipalities)."""
        return np.mean([r.municipal_qli_path for r in self.records], axis=0)


def run_ensemble(
    spec: WorldSpec,
    base_config: SimConfig,
    n_runs: int,
    overrides: Optional[Mapping[str, object]] = None,
    workers: int = 1,
    output_dir: Optional[str] = None,
    seeds: Optional[Sequence[int]] = None,
    run_prefix: str = "",
    transactions: bool = False,
) -> EnsembleResult:
    """Run ``n_runs`` simulations on seeds ``base_seed + 0 .. n_runs - 1``.

    Records come back sorted by seed whatever the worker count or the order
    in which runs finish. The first failing run aborts the ensemble.
    """
    if n_runs < 1:
        raise ValueError("an ensemble needs at least one run")
    overrides = dict(overrides or {})
    config = base_config.with_overrides(overrides)
    if seeds is None:
        seeds = [base_config.seed + i for i in range(n_runs)]
    if len(set(seeds)) != len(seeds):
        raise ValueError("ensemble seeds must be distinct")

    jobs = []
    for seed in seeds:
        run_config = dataclasses.replace(config, seed=seed)
        run_id = f"{run_prefix}{run_config.government_mode.value}-s{seed}"
        jobs.append((seed, (spec, run_config, run_id, overrides, output_dir, transactions)))

    records = []
    if workers <= 1 or len(jobs) == 1:
        for seed, args in jobs:
            try:
                records.append(execute_run(*args))
            except Exception as e:
                logger.error("run with seed %d failed", seed, exc_info=True)
                raise EnsembleRunError(seed, str(e)) from e
            logger.debug("seed %d done", seed)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(execute_run, *args): seed for seed, args in jobs}
            for future in as_completed(futures):
                seed = futures[future]
                try:
                    records.append(future.result())
                except Exception as e:
                    for other in futures:
                        other.cancel()
                    logger.error("run with seed %d failed", seed, exc_info=True)
                    raise EnsembleRunError(seed, str(e)) from e
                logger.debug("seed %d done", seed)
    records.sort(key=lambda r: r.seed)
    return EnsembleResult(records)


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p_value: float
    critical: float
    reject_at_5pct: bool


def welch_t(sample_a: Sequence[float], sample_b: Sequence[float], alpha: float = 0.05) -> WelchResult:
    """Two-sided Welch test of equal means (mean of a minus mean of b)."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise ValueError("each sample needs at least two values")
    va, vb = a.var(ddof=1) / len(a), b.var(ddof=1) / len(b)
    if va == 0 or vb == 0:
        raise ValueError("each sample needs a nonzero variance")
    t = (a.mean() - b.mean()) / np.sqrt(va + vb)
    df = (va + vb) ** 2 / (va**2 / (len(a) - 1) + vb**2 / (len(b) - 1))
    critical = float(sps.t.ppf(1 - alpha / 2, df))
    p = float(2 * sps.t.sf(abs(t), df))
    return WelchResult(float(t), float(df), p, critical, bool(abs(t) > critical))


@dataclass
class PolicyReport:
    individual: EnsembleResult
    unified: EnsembleResult
    matched: bool
    welch: Optional[WelchResult]
    statistic: str = "mean weighted QLI over the final 12 months"

    @property
    def arms(self) -> Dict[str, EnsembleResult]:
        return {GovernmentMode.INDIVIDUAL.value: self.individual, GovernmentMode.UNIFIED.value: self.unified}

    def summary(self) -> Dict[str, object]:
        out: Dict[str, object] = {
            "statistic": self.statistic,
            "seeds": "matched" if self.matched else "unmatched",
            "runs_per_arm": len(self.individual),
            "individual_mean": self.individual.mean("last_year_weighted_qli"),
            "unified_mean": self.unified.mean("last_year_weighted_qli"),
        }
        if self.welch is None:
            out["welch"] = "undefined (zero variance)"
        else:
            out["t_unified_minus_individual"] = self.welch.t
            out["df"] = self.welch.df
            out["p_value"] = self.welch.p_value
            out["reject_equal_means_at_5pct"] = self.welch.reject_at_5pct
        return out


def policy_experiment(
    spec: WorldSpec,
    config: SimConfig,
    n_per_arm: int,
    workers: int = 1,
    matched: bool = True,
    output_dir: Optional[str] = None,
) -> PolicyReport:
    """Individual versus unified governments on the same (or offset) seeds."""
    if n_per_arm < 2:
        raise ValueError("the policy experiment needs at least two runs per arm")
    seeds = [config.seed + i for i in range(n_per_arm)]
    unified_seeds = seeds if matched else [s + n_per_arm for s in seeds]
    individual = run_ensemble(
        spec, config, n_per_arm, {"government_mode": "individual"}, workers, output_dir, seeds=seeds
    )
    unified = run_ensemble(
        spec, config, n_per_arm, {"government_mode": "unified"}, workers, output_dir, seeds=unified_seeds
    )
    try:
        welch = welch_t(unified.column("last_year_weighted_qli"), individual.column("last_year_weighted_qli"))
    except ValueError:
        logger.warning("Welch test undefined: an arm has zero variance")
        welch = None
    report = PolicyReport(individual, unified, matched, welch)
    if output_dir is not None:
        write_policy_report(report, output_dir)
    return report


def write_policy_report(report: PolicyReport, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    paths = {
        "trajectories": os.path.join(directory, "policy-trajectories.csv"),
        "municipal": os.path.join(directory, "policy-municipal-qli.csv"),
        "runs": os.path.join(directory, "policy-runs.csv"),
    }
    try:
        with open(paths["trajectories"], "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(("month", "individual", "unified"))
            paths_by_arm = [report.individual.mean_weighted_qli_path(), report.unified.mean_weighted_qli_path()]
            for month, values in enumerate(zip(*paths_by_arm)):
                writer.writerow((month, *map(repr, map(float, values))))

        with open(paths["municipal"], "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(("arm", "month", "municipality", "qli"))
            for arm, ensemble in report.arms.items():
                for month, qlis in enumerate(ensemble.mean_municipal_qli_path()):
                    for m, q in enumerate(qlis):
                        writer.writerow((arm, month, m, repr(float(q))))

        with open(paths["runs"], "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(("arm", "seed", "last_year_weighted_qli", "final_weighted_qli", "final_gini"))
            for arm, ensemble in report.arms.items():
                for r in ensemble.records:
                    writer.writerow((arm, r.seed, repr(r.last_year_weighted_qli), repr(r.final_weighted_qli), repr(r.final_gini)))
    except OSError as e:
        raise SeriesWriteError(directory, e.strerror or str(e)) from e
    write_summary(report.summary(), os.path.join(directory, "policy-summary.txt"))


SWEEP_COLUMNS = (
    "cumulative_gdp",
    "total_production",
    "mean_gini",
    "final_gini",
    "mean_unemployment",
    "gdp_per_capita_growth",
    "family_wealth",
    "firm_wealth",
)


@dataclass
class SweepTable:
    parameter: str
    values: List[object]
    ensembles: List[EnsembleResult]

    @property
    def headers(self) -> List[str]:
        return [self.parameter, *SWEEP_COLUMNS]

    def rows(self) -> List[list]:
        return [[value, *(e.mean(c) for c in SWEEP_COLUMNS)] for value, e in zip(self.values, self.ensembles)]


def sensitivity_sweep(
    spec: WorldSpec,
    config: SimConfig,
    parameter: str,
    values: Sequence[object],
    n_runs: int = 1,
    workers: int = 1,
    output_dir: Optional[str] = None,
) -> SweepTable:
    """One ensemble per value of ``parameter``, every other setting fixed.

    All values share the same seed list.
    """
    if parameter not in SWEEPABLE:
        raise ValueError(f"unknown sweep parameter {parameter!r}")
    if not values:
        raise ValueError("a sweep needs at least one value")
    ensembles = []
    for value in values:
        ensembles.append(
            run_ensemble(
                spec, config, n_runs, {parameter: value}, workers, output_dir, run_prefix=f"{parameter}={value}-"
            )
        )
    table = SweepTable(parameter, list(values), ensembles)
    if output_dir is not None:
        path = os.path.join(output_dir, f"sweep-{parameter}.csv")
        try:
            with open(path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(table.headers)
                for row in table.rows():
                    writer.writerow([row[0], *map(repr, row[1:])])
        except OSError as e:
            raise SeriesWriteError(path, e.strerror or str(e)) from e
    return table


@dataclass(frozen=True)
class BenchResult:
    agents: int
    seconds: float


def benchmark(spec: WorldSpec, config: SimConfig, agent_counts: Sequence[int]) -> List[BenchResult]:
    """Time one run per requested agent count (approximate, via sample_fraction)."""
    population = sum(m.target_population for m in spec.municipalities)
    results = []
    for count in agent_counts:
        fraction = min(1.0, count / population)
        run_config = config.with_overrides({"sample_fraction": fraction})
        start = time.perf_counter()
        run_simulation(spec, run_config, run_id=f"bench-{count}")
        elapsed = time.perf_counter() - start
        agents = sum(citizen_targets(spec, fraction))
        logger.info("bench: %d agents, %d months, %.2fs", agents, run_config.months, elapsed)
        results.append(BenchResult(agents, elapsed))
    return results


def scaling_ratios(results: Sequence[BenchResult]) -> List[float]:
    """Time ratio over agent ratio between consecutive benchmark points."""
    return [
        (b.seconds / a.seconds) / (b.agents / a.agents)
        for a, b in zip(results, results[1:])
        if a.seconds > 0 and a.agents > 0
    ]
