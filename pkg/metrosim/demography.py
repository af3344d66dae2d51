"""Synthetic population and the monthly demographic step."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .packages.streams import Phase, stream
from .simconfig import ConfigError, SimConfig
from .world import FEMALE, MALE, NOBODY, Citizens, Families

logger = logging.getLogger(__name__)

ADULT_AGE = 18
MAX_TABLE_AGE = 100


def gompertz_mortality(base: float, growth: float, max_age: int = MAX_TABLE_AGE) -> np.ndarray:
    """Monthly death probability per year of age from an annual Gompertz hazard."""
    ages = np.arange(max_age + 1)
    annual = np.clip(base * np.exp(growth * ages), 0.0, 1.0)
    return 1.0 - (1.0 - annual) ** (1.0 / 12.0)


def gaussian_fertility(total_fertility: float, peak: float, spread: float, low: int = 15, high: int = 49) -> np.ndarray:
    """Monthly birth probability per year of age of the mother.

    The annual schedule is a Gaussian bump over ``[low, high]`` scaled so
    that it sums to ``total_fertility`` births per woman.
    """
    ages = np.arange(high + 1)
    weights = np.exp(-0.5 * ((ages - peak) / spread) ** 2)
    weights[:low] = 0.0
    weights /= weights.sum()
    return np.clip(total_fertility * weights / 12.0, 0.0, 1.0)


@dataclass
class Population:
    citizens: Citizens
    families: Families
    family_municipality: np.ndarray
    median_qualification: float


def _normalized(weights: np.ndarray, field: str) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if not np.isfinite(total) or total <= 0 or np.any(weights < 0):
        raise ConfigError(field, "weights cannot be normalized")
    return weights / total


def sample_ages(rng: np.random.Generator, groups: Sequence[tuple], shares: np.ndarray, n: int) -> np.ndarray:
    """Ages in months, uniform within age groups drawn by ``shares``."""
    if n == 0:
        return np.zeros(0, dtype=np.int32)
    p = _normalized(shares, "age_pyramid")
    picked = rng.choice(len(groups), size=n, p=p)
    low = np.array([g[0] for g in groups]) * 12
    span = (np.array([g[1] for g in groups]) + 1) * 12 - low
    offset = np.floor(rng.random(n) * span[picked]).astype(np.int64)
    return (low[picked] + offset).astype(np.int32)


def generate_population(spec, counts: Sequence[int], config: SimConfig, seed: int) -> Population:
    """Draw citizens per municipality and bind them into families.

    Every family gets a head, preferring adults; the remaining citizens join
    uniformly random families of their municipality.
    """
    qual_p = _normalized(spec.qualification_weights, "qualification")
    citizens = Citizens.empty()
    families = Families.empty()
    family_municipality: List[np.ndarray] = []

    for m, n in zip(spec.municipalities, counts):
        if n <= 0:
            raise ConfigError("sample_fraction", f"produces no citizens in {m.name}")
        rng = stream(seed, 0, Phase.GENERATION, m.id)
        female = rng.random(n) < spec.female_share
        ages = np.empty(n, dtype=np.int32)
        ages[female] = sample_ages(rng, spec.age_groups, spec.pyramid_female, int(female.sum()))
        ages[~female] = sample_ages(rng, spec.age_groups, spec.pyramid_male, int((~female).sum()))
        qualification = rng.choice(len(qual_p), size=n, p=qual_p) + 1

        n_fam = max(1, int(round(n / config.mean_family_size)))
        adults = np.flatnonzero(ages >= ADULT_AGE * 12)
        minors = np.flatnonzero(ages < ADULT_AGE * 12)
        order = np.concatenate([rng.permutation(adults), rng.permutation(minors)])
        local = np.empty(n, dtype=np.int64)
        local[order[:n_fam]] = np.arange(n_fam)
        local[order[n_fam:]] = rng.integers(0, n_fam, n - n_fam)

        savings = rng.uniform(0.0, 2.0 * config.initial_family_savings, n_fam)
        fam_ids = families.append(savings)
        citizens.append(np.where(female, FEMALE, MALE), ages, qualification, fam_ids[local])
        family_municipality.append(np.full(n_fam, m.id, dtype=np.int64))
        logger.debug("population of %s: %d citizens in %d families", m.name, n, n_fam)

    return Population(
        citizens=citizens,
        families=families,
        family_municipality=np.concatenate(family_municipality),
        median_qualification=float(np.median(citizens.qualification)),
    )


@dataclass
class DemographyEvents:
    births: int = 0
    deaths: int = 0
    dissolved: int = 0
    retirements: int = 0


def _lookup(table: np.ndarray, years: np.ndarray, past_end: Optional[float] = None) -> np.ndarray:
    inside = years < len(table)
    out = table[np.minimum(years, len(table) - 1)]
    if past_end is not None:
        out = np.where(inside, out, past_end)
    return out


def step_demographics(world, config: SimConfig, seed: int) -> DemographyEvents:
    """Age everyone a month, then apply deaths, births and retirements."""
    spec = world.spec
    c = world.citizens
    fam = world.families
    events = DemographyEvents()
    rng = stream(seed, world.month_index, Phase.DEMOGRAPHY)

    ids = np.flatnonzero(c.alive)
    u_death = rng.random(len(ids))
    u_birth = rng.random(len(ids))
    u_gender = rng.random(len(ids))

    c.age[ids] += 1
    years = c.age[ids] // 12
    female = c.gender[ids] == FEMALE
    p_death = np.where(
        female,
        _lookup(spec.mortality_female, years),
        _lookup(spec.mortality_male, years),
    )
    dies = u_death < p_death
    dead = ids[dies]
    if len(dead):
        np.add.at(fam.savings, c.family[dead], c.money[dead])
        c.money[dead] = 0.0
        c.employer[dead] = NOBODY
        c.alive[dead] = False
        c.family[dead] = NOBODY
        events.deaths = len(dead)
        events.dissolved = _dissolve_empty_families(world)

    fertile = female & ~dies & (years >= config.fertile_age_min) & (years <= config.fertile_age_max)
    p_birth = _lookup(spec.fertility, years, past_end=0.0)
    gives_birth = fertile & (u_birth < p_birth)
    mothers = ids[gives_birth]
    if len(mothers):
        gender = np.where(u_gender[gives_birth] < 0.5, FEMALE, MALE)
        c.append(gender, 0, 1, c.family[mothers])
        events.births = len(mothers)

    retiring = c.alive & (c.employer != NOBODY) & (c.age // 12 >= config.labor_age_max)
    c.employer[retiring] = NOBODY
    events.retirements = int(retiring.sum())

    world.ledger.births += events.births
    world.ledger.deaths += events.deaths
    world.ledger.dissolved += events.dissolved
    world.ledger.retirements += events.retirements
    return events


def _dissolve_empty_families(world) -> int:
    """Release the houses and savings of families left without members.

    Houses go to the municipal vacant pool; savings go to the treasury of
    the municipality the family lived in.
    """
    fam = world.families
    sizes = world.family_sizes()
    empty = np.flatnonzero(fam.alive & (sizes == 0))
    if len(empty) == 0:
        return 0
    houses = world.houses
    residence = fam.residence[empty]
    for family, house in zip(empty, residence):
        world.government.receive_estate(int(houses.municipality[house]), float(fam.savings[family]))
    fam.savings[empty] = 0.0
    houses.occupant[residence] = NOBODY
    owned = np.isin(houses.owner, empty)
    houses.owner[owned] = NOBODY
    houses.for_sale[owned] = False
    fam.alive[empty] = False
    fam.residence[empty] = NOBODY
    logger.debug("month %d: %d families dissolved", world.month_index, len(empty))
    return len(empty)
