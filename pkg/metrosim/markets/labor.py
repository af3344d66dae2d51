"""Labor market.

Firms that cannot cover their payroll fire their least qualified worker.
Firms with spare cash, or empty firms with something to work with, post
openings. Openings are filled highest paying firm first; each position is
filled either by the nearest applicant or by the most qualified one.
"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from ..firms import monthly_payroll, paying_wages, staff, staff_qualification
from ..geo import distances
from ..packages.streams import Phase, stream
from ..simconfig import SimConfig
from ..world import NOBODY

logger = logging.getLogger(__name__)

DISTANCE = "distance"
QUALIFICATION = "qualification"


@dataclass
class LaborOutcome:
    fired: List[int] = field(default_factory=list)
    hires: List[tuple] = field(default_factory=list)  # (firm, citizen, criterion)


def fire_one(world, short: np.ndarray) -> np.ndarray:
    """Fire the least qualified worker (ties by lower id) of each firm in ``short``.

    Returns the citizen ids fired.
    """
    ids, employer = staff(world)
    if len(ids) == 0:
        return ids
    q = world.citizens.qualification[ids]
    order = np.lexsort((ids, q, employer))
    employer_sorted = employer[order]
    first = np.flatnonzero(np.r_[True, employer_sorted[1:] != employer_sorted[:-1]])
    candidates = ids[order][first]
    fired = candidates[short[employer_sorted[first]]]
    world.citizens.employer[fired] = NOBODY
    return fired


def offering_firms(world, config: SimConfig, excluded: np.ndarray) -> np.ndarray:
    """Mask of firms posting openings this month."""
    f = world.firms
    _, heads = staff_qualification(world)
    reserve = config.reserve_months * monthly_payroll(world)
    empty_but_able = (heads == 0) & ((f.stock > 0) | (f.cash > 0))
    return ~excluded & ((f.cash > reserve) | empty_but_able)


def run_labor_market(world, config: SimConfig, seed: int) -> LaborOutcome:
    c = world.citizens
    f = world.firms
    outcome = LaborOutcome()
    n_firms = len(f)
    if n_firms == 0:
        return outcome

    short = (f.cash < monthly_payroll(world)) & (staff_qualification(world)[1] > 0)
    fired = fire_one(world, short)
    outcome.fired = [int(i) for i in fired]

    wage = paying_wages(world)
    offering = offering_firms(world, config, excluded=short)
    firm_ids = np.arange(n_firms)
    ranked = firm_ids[np.lexsort((firm_ids, -wage))]
    ranked = ranked[offering[ranked]]

    eligible = c.working_age(config.labor_age_min, config.labor_age_max) & (c.employer == NOBODY)
    eligible[fired] = False
    applicants = np.flatnonzero(eligible)

    if len(applicants) and len(ranked) and config.openings_per_month > 0:
        rng = stream(seed, world.month_index, Phase.LABOR)
        home = world.families.residence[c.family[applicants]]
        ax, ay = world.houses.x[home], world.houses.y[home]
        q = c.qualification[applicants]
        by_qualification = np.lexsort((applicants, -q))
        available = np.ones(len(applicants), dtype=bool)
        cursor = 0
        left = len(applicants)
        for firm in ranked:
            for _ in range(config.openings_per_month):
                if left == 0:
                    break
                if rng.random() < config.distance_share:
                    d = distances(ax, ay, f.x[firm], f.y[firm])
                    k = int(np.argmin(np.where(available, d, np.inf)))
                    criterion = DISTANCE
                else:
                    while not available[by_qualification[cursor]]:
                        cursor += 1
                    k = int(by_qualification[cursor])
                    criterion = QUALIFICATION
                available[k] = False
                left -= 1
                citizen = int(applicants[k])
                c.employer[citizen] = firm
                outcome.hires.append((int(firm), citizen, criterion))
            if left == 0:
                break

    if world.transactions is not None:
        for firm, citizen, criterion in outcome.hires:
            world.transactions.hire(world.month_index, firm, citizen, criterion)
    world.ledger.fires += len(outcome.fired)
    world.ledger.hires += len(outcome.hires)
    logger.debug("month %d: %d fired, %d hired", world.month_index, len(outcome.fired), len(outcome.hires))
    return outcome
