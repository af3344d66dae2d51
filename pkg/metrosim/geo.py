"""Municipalities, coordinates and synthetic world generation.

Boundaries are axis-aligned rectangles on a planar kilometre grid. Urban
agents are placed uniformly in a municipality's urban zone, rural agents
anywhere in its region. Firms are placed in urban zones only.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .packages.streams import Phase, stream
from .simconfig import ConfigError, SimConfig

logger = logging.getLogger(__name__)

QUALIFICATION_LEVELS = 21
PYRAMID_TOLERANCE = 1e-9


class Coord(tuple):
    """Planar position in kilometres."""

    __slots__ = ()

    def __new__(cls, x: float, y: float):
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"non-finite coordinate ({x}, {y})")
        return super().__new__(cls, (float(x), float(y)))

    @property
    def x(self) -> float:
        return self[0]

    @property
    def y(self) -> float:
        return self[1]


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Euclidean distance in kilometres. Raises ValueError on non-finite input."""
    a, b = Coord(*a), Coord(*b)
    return math.hypot(a.x - b.x, a.y - b.y)


def distances(x0, y0, x1, y1) -> np.ndarray:
    """Vectorized :func:`distance` over broadcastable coordinate arrays."""
    return np.hypot(np.subtract(x0, x1), np.subtract(y0, y1))


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate rectangle {self}")

    def contains(self, other: "Rect") -> bool:
        return self.x0 <= other.x0 and self.y0 <= other.y0 and other.x1 <= self.x1 and other.y1 <= self.y1

    def overlaps(self, other: "Rect") -> bool:
        return self.x0 < other.x1 and other.x0 < self.x1 and self.y0 < other.y1 and other.y0 < self.y1

    def inside(self, x, y) -> np.ndarray:
        x, y = np.asarray(x), np.asarray(y)
        return (x >= self.x0) & (x <= self.x1) & (y >= self.y0) & (y <= self.y1)

    def sample(self, rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
        return rng.uniform(self.x0, self.x1, n), rng.uniform(self.y0, self.y1, n)


@dataclass(frozen=True)
class Municipality:
    id: int
    name: str
    region: Rect
    urban_zone: Rect
    initial_qli: float
    target_population: int
    target_firms: int
    urban_fraction: float


@dataclass
class WorldSpec:
    """Declarative geography and demography of a synthetic world.

    ``age_groups`` holds inclusive ``(low, high)`` year bounds; the two
    pyramid arrays hold the share of each group within its gender.
    Mortality is a monthly death probability per completed year of age and
    gender, fertility a monthly birth probability per year of age of the
    mother. Ages past the end of a table use its last entry for mortality
    and zero for fertility.
    """

    municipalities: List[Municipality]
    age_groups: List[Tuple[int, int]]
    pyramid_female: np.ndarray
    pyramid_male: np.ndarray
    mortality_female: np.ndarray
    mortality_male: np.ndarray
    fertility: np.ndarray
    qualification_weights: np.ndarray
    house_size_range: Tuple[float, float] = (30.0, 150.0)
    house_quality_range: Tuple[float, float] = (1.0, 5.0)
    sample_fraction: float = 0.01
    female_share: float = 0.51
    name: str = "world"

    def validate(self) -> "WorldSpec":
        if not self.municipalities:
            raise ConfigError("municipalities", "at least one municipality is required")
        ids = [m.id for m in self.municipalities]
        if sorted(ids) != list(range(len(ids))):
            raise ConfigError("municipalities", "ids must be 0..n-1")
        for m in self.municipalities:
            where = f"municipalities.{m.name}"
            if not 0 < m.initial_qli <= 1:
                raise ConfigError(f"{where}.initial_qli", "must be in (0, 1]")
            if not 0 <= m.urban_fraction <= 1:
                raise ConfigError(f"{where}.urban_fraction", "must be in [0, 1]")
            if not m.region.contains(m.urban_zone):
                raise ConfigError(f"{where}.urban_zone", "must lie inside the region")
            if m.target_population < 0 or m.target_firms < 0:
                raise ConfigError(where, "targets must be non-negative")
        for i, a in enumerate(self.municipalities):
            for b in self.municipalities[i + 1 :]:
                if a.region.overlaps(b.region):
                    raise ConfigError("municipalities", f"regions of {a.name} and {b.name} overlap")

        if len(self.age_groups) != len(self.pyramid_female) or len(self.age_groups) != len(self.pyramid_male):
            raise ConfigError("age_pyramid", "one share per age group and gender is required")
        for lo, hi in self.age_groups:
            if not 0 <= lo <= hi:
                raise ConfigError("age_pyramid", f"bad age group {lo}-{hi}")
        for gender, shares in (("female", self.pyramid_female), ("male", self.pyramid_male)):
            if np.any(shares < 0) or abs(shares.sum() - 1.0) > PYRAMID_TOLERANCE:
                raise ConfigError(f"age_pyramid.{gender}", "shares must be non-negative and sum to 1")
        for name in ("mortality_female", "mortality_male", "fertility"):
            table = getattr(self, name)
            if len(table) == 0 or np.any(table < 0) or np.any(table > 1):
                raise ConfigError(name, "probabilities must lie in [0, 1]")
        if not 0 <= self.female_share <= 1:
            raise ConfigError("female_share", "must be in [0, 1]")
        w = self.qualification_weights
        if len(w) != QUALIFICATION_LEVELS or np.any(w < 0) or w.sum() <= 0:
            raise ConfigError("qualification", f"{QUALIFICATION_LEVELS} non-negative weights with a positive sum are required")
        for name in ("house_size_range", "house_quality_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ConfigError(name, "requires 0 < min <= max")
        if not 0 < self.sample_fraction <= 1:
            raise ConfigError("sample_fraction", "must be in (0, 1]")
        return self


def citizen_targets(spec: WorldSpec, sample_fraction: float) -> List[int]:
    return [int(round(m.target_population * sample_fraction)) for m in spec.municipalities]


def firm_targets(spec: WorldSpec, sample_fraction: float) -> List[int]:
    return [max(1, int(round(m.target_firms * sample_fraction))) for m in spec.municipalities]


def house_count(families: int, vacancy: float) -> int:
    # the epsilon keeps exact quotients from rounding up
    return max(families, int(math.ceil(families / (1.0 - vacancy) - 1e-9)))


def generate_world(spec: WorldSpec, config: SimConfig, seed: Optional[int] = None):
    """Build the month-0 world. A pure function of (spec, config, seed)."""
    from .demography import generate_population
    from .government import Government
    from .world import Firms, Houses, World

    spec.validate()
    config.validate()
    seed = config.seed if seed is None else seed
    fraction = config.sample_fraction or spec.sample_fraction
    counts = citizen_targets(spec, fraction)
    for m, n in zip(spec.municipalities, counts):
        if n == 0:
            raise ConfigError("sample_fraction", f"produces no families in {m.name}")

    population = generate_population(spec, counts, config, seed)
    citizens, families = population.citizens, population.families
    n_families = len(families.savings)

    houses = Houses.empty()
    firms = Firms.empty()
    firm_counts = firm_targets(spec, fraction)
    median_q = population.median_qualification
    firm_cash = config.initial_firm_cash
    if firm_cash is None:
        firm_cash = 12 * config.wage_base * median_q

    residence = np.full(n_families, -1, dtype=np.int64)
    for m in spec.municipalities:
        rng = stream(seed, 0, Phase.GENERATION, 1000 + m.id)
        fam_ids = np.flatnonzero(population.family_municipality == m.id)
        n_fam = len(fam_ids)
        n_houses = house_count(n_fam, config.vacancy)

        urban = np.zeros(n_houses, dtype=bool)
        n_urban_fam = int(round(m.urban_fraction * n_fam))
        urban[rng.permutation(n_fam)[:n_urban_fam]] = True
        urban[n_fam:] = rng.random(n_houses - n_fam) < m.urban_fraction
        ux, uy = m.urban_zone.sample(rng, n_houses)
        rx, ry = m.region.sample(rng, n_houses)
        x = np.where(urban, ux, rx)
        y = np.where(urban, uy, ry)

        size = rng.uniform(*spec.house_size_range, n_houses)
        quality = rng.uniform(*spec.house_quality_range, n_houses)
        owner = np.empty(n_houses, dtype=np.int64)
        occupant = np.full(n_houses, -1, dtype=np.int64)
        owner[:n_fam] = fam_ids
        occupant[:n_fam] = fam_ids
        owner[n_fam:] = fam_ids[rng.integers(0, n_fam, n_houses - n_fam)]
        ids = houses.append(x, y, np.full(n_houses, m.id), size, quality, owner, occupant)
        residence[fam_ids] = ids[:n_fam]

        n_firms = firm_counts[m.id]
        fx, fy = m.urban_zone.sample(rng, n_firms)
        d = config.wage_dispersion
        wage_base = config.wage_base * rng.uniform(1.0 - d, 1.0 + d, n_firms)
        firms.append(fx, fy, np.full(n_firms, m.id), firm_cash, config.initial_price, wage_base)
        logger.debug("generated %s: %d families, %d houses, %d firms", m.name, n_fam, n_houses, n_firms)

    families.residence = residence
    government = Government(
        config.government_mode,
        np.array([m.initial_qli for m in spec.municipalities], dtype=float),
    )
    world = World(
        spec=spec,
        citizens=citizens,
        families=families,
        houses=houses,
        firms=firms,
        government=government,
        median_qualification=median_q,
    )
    logger.info(
        "world generated: %d citizens, %d families, %d houses, %d firms",
        citizens.alive.sum(),
        n_families,
        len(houses),
        len(firms),
    )
    return world
