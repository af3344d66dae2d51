"""Housing market.

Every month a random share of families enters as buyers. Vacant houses and
houses flagged for sale are offered cheapest first; each goes to the poorest
sampled buyer who can pay for it. The market closes when nobody left can
afford the cheapest remaining house.
"""

import bisect
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List

import numpy as np

from ..packages.streams import Phase, stream
from ..simconfig import SimConfig
from ..world import NOBODY

logger = logging.getLogger(__name__)


class MoveAction(str, Enum):
    STAY = "stay"
    MOVE_TO_BEST = "move_to_best"
    DOWNGRADE_AND_SELL = "downgrade_and_sell"


@dataclass(frozen=True)
class HouseSale:
    house_id: int
    buyer_id: int
    seller_id: int  # NOBODY for the municipal pool
    price: float


def house_price(size, quality, qli):
    return size * quality * qli


def house_prices(world, houses=None) -> np.ndarray:
    h = world.houses
    idx = slice(None) if houses is None else houses
    return house_price(h.size[idx], h.quality[idx], world.government.qli[h.municipality[idx]])


def match_listings(prices, owners, buyer_savings, buyer_ids, still_listed=None) -> Iterator[tuple]:
    """Pair listings with buyers.

    ``prices``/``owners`` describe listings already in offer order; buyer
    arrays may be in any order and hold savings at market entry. Yields
    ``(listing index, buyer id)`` pairs in the order they trade. A buyer
    trades at most once and never buys its own house. ``still_listed(k)``
    is asked right before listing ``k`` is matched, after the caller has
    acted on every earlier pair; a listing it rejects is passed over.
    """
    queue = sorted(zip((float(s) for s in buyer_savings), (int(b) for b in buyer_ids)))
    keys = [s for s, _ in queue]
    for k, (price, owner) in enumerate(zip(prices, owners)):
        if not queue or keys[-1] < price:
            break
        if still_listed is not None and not still_listed(k):
            continue
        pos = bisect.bisect_left(keys, price)
        while pos < len(queue) and queue[pos][1] == owner:
            pos += 1
        if pos == len(queue):
            continue
        buyer = queue[pos][1]
        del queue[pos]
        del keys[pos]
        yield k, buyer


def buyer_count(n_families: int, entry_fraction: float) -> int:
    return min(n_families, max(0, math.ceil(entry_fraction * n_families - 1e-9)))


def run_housing_market(world, config: SimConfig, seed: int) -> List[HouseSale]:
    fam = world.families
    h = world.houses
    alive = np.flatnonzero(fam.alive)
    if len(alive) == 0:
        return []
    rng = stream(seed, world.month_index, Phase.HOUSING)
    n_buyers = buyer_count(len(alive), config.housing_entry_fraction)
    buyers = np.sort(rng.choice(alive, size=n_buyers, replace=False))

    listed = np.flatnonzero(h.vacant() | h.for_sale)
    prices = house_prices(world, listed)
    order = np.lexsort((listed, prices))
    listed, prices = listed[order], prices[order]

    owners = h.owner[listed].copy()

    def still_listed(k):
        # moves made after earlier sales can take a listing off the market
        house = listed[k]
        return h.owner[house] == owners[k] and (h.occupant[house] == NOBODY or h.for_sale[house])

    sales = []
    for k, buyer in match_listings(prices, owners, fam.savings[buyers], buyers, still_listed):
        house, price = int(listed[k]), float(prices[k])
        seller = int(h.owner[house])
        fam.savings[buyer] -= price
        if seller == NOBODY:
            world.housing_sink += price
        else:
            fam.savings[seller] += price
        h.owner[house] = buyer
        h.for_sale[house] = False
        sales.append(HouseSale(house, buyer, seller, price))
        if world.transactions is not None:
            world.transactions.house_sale(world.month_index, house, buyer, seller, price)
        apply_move(world, buyer, decide_move(world, buyer, config))

    world.ledger.house_sales += len(sales)
    if sales:
        logger.debug("month %d: %d houses sold", world.month_index, len(sales))
    return sales


def _owned_by_value(world, family: int):
    owned = np.flatnonzero(world.houses.owner == family)
    prices = house_prices(world, owned)
    order = np.lexsort((owned, -prices))
    return owned[order]


def decide_move(world, family: int, config: SimConfig) -> MoveAction:
    """Where a family lives after a purchase.

    A family with an employed adult moves into its most valuable house. A
    family with no employed adult already living in its most valuable house
    moves down to the next one and puts the best on sale.
    """
    owned = _owned_by_value(world, family)
    if len(owned) == 0:
        return MoveAction.STAY
    c = world.citizens
    members = np.flatnonzero(c.alive & (c.family == family))
    adults = members[c.age[members] // 12 > config.labor_age_min]
    employed = bool(np.any(c.employer[adults] != NOBODY))
    best = owned[0]
    residence = world.families.residence[family]
    if residence == best and not employed and len(owned) >= 2:
        return MoveAction.DOWNGRADE_AND_SELL
    if residence != best and employed:
        return MoveAction.MOVE_TO_BEST
    return MoveAction.STAY


def apply_move(world, family: int, action: MoveAction) -> None:
    if action is MoveAction.STAY:
        return
    owned = _owned_by_value(world, family)
    h = world.houses
    if action is MoveAction.MOVE_TO_BEST:
        target = owned[0]
    else:
        target = owned[1]
        h.for_sale[owned[0]] = True
    old = world.families.residence[family]
    if old != NOBODY:
        h.occupant[old] = NOBODY
    h.occupant[target] = family
    h.for_sale[target] = False
    world.families.residence[family] = target
