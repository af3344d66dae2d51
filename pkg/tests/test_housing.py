import numpy as np
import pytest

from metrosim.markets.housing import (
    MoveAction,
    apply_move,
    buyer_count,
    decide_move,
    house_price,
    house_prices,
    match_listings,
    run_housing_market,
)
from metrosim.simconfig import SimConfig
from metrosim.world import NOBODY

from utils import WorldBuilder


@pytest.mark.parametrize(
    "size, quality, qli, expected",
    [
        (1, 1, 1, 1.0),
        (80, 1.2, 0.75, 72.0),
        (50, 2, 0.5, 50.0),
    ],
)
def test_house_price(size, quality, qli, expected):
    assert house_price(size, quality, qli) == pytest.approx(expected)


def test_price_linear_in_qli():
    assert house_price(30, 2, 0.8) == pytest.approx(2 * house_price(30, 2, 0.4))


@pytest.mark.parametrize(
    "families, fraction, expected",
    [
        (10_000, 0.004, 40),
        (0, 0.5, 0),
        (10, 1.0, 10),
        (3, 0.5, 2),
        (250, 0.004, 1),
        (10, 0.0, 0),
    ],
)
def test_buyer_count(families, fraction, expected):
    assert buyer_count(families, fraction) == expected


class TestMatchListings:
    def test_no_listings(self):
        assert list(match_listings([], [], [10.0], [0])) == []

    def test_poorer_buyer_skipped(self):
        assert list(match_listings([50.0], [NOBODY], [40.0, 60.0], [0, 1])) == [(0, 1)]

    def test_owner_never_buys_own_house(self):
        assert list(match_listings([50.0], [1], [60.0, 70.0], [1, 2])) == [(0, 2)]
        assert list(match_listings([50.0], [1], [60.0], [1])) == []

    def test_market_closes(self):
        pairs = list(match_listings([10.0, 20.0, 30.0], [NOBODY] * 3, [15.0, 25.0], [0, 1]))
        assert pairs == [(0, 0), (1, 1)]

    def test_poorest_capable_buyer_gets_cheapest(self):
        pairs = list(match_listings([10.0, 11.0], [NOBODY] * 2, [100.0, 12.0, 10.5], [0, 1, 2]))
        assert pairs == [(0, 2), (1, 1)]

    def test_withdrawn_listing_keeps_buyer_in_queue(self):
        pairs = list(match_listings([10.0, 20.0], [NOBODY] * 2, [25.0], [4], still_listed=lambda k: k != 0))
        assert pairs == [(1, 4)]


def walk(prices, owners, savings, buyer_ids):
    """The plain walk: each listing goes to the first sampled buyer, poorest first, who can pay."""
    queue = sorted(zip(savings, buyer_ids))
    out = []
    for k, (price, owner) in enumerate(zip(prices, owners)):
        for j, (money, buyer) in enumerate(queue):
            if money >= price and buyer != owner:
                out.append((k, buyer))
                del queue[j]
                break
    return out


def test_matching_equals_plain_walk(rng):
    for _ in range(100):
        n_listings, n_buyers = int(rng.integers(0, 12)), int(rng.integers(0, 12))
        prices = np.sort(np.round(rng.uniform(1, 20, n_listings), 1))
        owners = rng.integers(-1, 6, n_listings)
        savings = np.round(rng.uniform(0, 25, n_buyers), 1)
        buyers = rng.permutation(12)[:n_buyers]
        expected = walk(list(prices), list(owners), list(savings), list(buyers))
        assert list(match_listings(prices, owners, savings, buyers)) == expected


class TestDecideMove:
    def household(self, employed, owns_second=True, lives_in_best=True):
        b = WorldBuilder()
        firm = b.firm()
        fam = b.family(size=10.0 if lives_in_best else 5.0)
        if owns_second:
            b.house(size=5.0 if lives_in_best else 10.0, owner=fam)
        b.member(fam, age_years=40, employer=firm if employed else NOBODY)
        b.member(fam, age_years=8)
        return b.build(), fam

    def test_unemployed_in_best_house_downgrades(self):
        world, fam = self.household(employed=False)
        assert decide_move(world, fam, SimConfig()) is MoveAction.DOWNGRADE_AND_SELL

    def test_employed_elsewhere_moves_to_best(self):
        world, fam = self.household(employed=True, lives_in_best=False)
        assert decide_move(world, fam, SimConfig()) is MoveAction.MOVE_TO_BEST

    def test_employed_in_best_house_stays(self):
        world, fam = self.household(employed=True)
        assert decide_move(world, fam, SimConfig()) is MoveAction.STAY

    def test_single_house_stays(self):
        world, fam = self.household(employed=False, owns_second=False)
        assert decide_move(world, fam, SimConfig()) is MoveAction.STAY

    def test_working_child_does_not_count(self):
        b = WorldBuilder()
        firm = b.firm()
        fam = b.family(size=5.0)
        b.house(size=10.0, owner=fam)
        b.member(fam, age_years=40)
        b.member(fam, age_years=15, employer=firm)
        assert decide_move(b.build(), fam, SimConfig()) is MoveAction.STAY

    def test_downgrade_lists_best_house(self):
        world, fam = self.household(employed=False)
        best = world.families.residence[fam]
        apply_move(world, fam, MoveAction.DOWNGRADE_AND_SELL)
        h = world.houses
        home = world.families.residence[fam]
        assert home != best
        assert h.occupant[home] == fam
        assert h.occupant[best] == NOBODY
        assert h.for_sale[best]
        assert h.owner[best] == fam

    def test_move_to_best(self):
        world, fam = self.household(employed=True, lives_in_best=False)
        old = world.families.residence[fam]
        apply_move(world, fam, MoveAction.MOVE_TO_BEST)
        home = world.families.residence[fam]
        assert home != old
        assert world.houses.occupant[old] == NOBODY
        assert world.houses.occupant[home] == fam


class TestRunHousingMarket:
    def test_nothing_listed(self):
        b = WorldBuilder()
        for _ in range(5):
            b.member(b.family(savings=1000.0))
        assert run_housing_market(b.build(), SimConfig(housing_entry_fraction=1.0), seed=0) == []

    def test_pool_house_sale(self):
        b = WorldBuilder()
        firm = b.firm()
        poor = b.family(savings=30.0, size=1.0)
        rich = b.family(savings=60.0, size=1.0)
        b.member(poor)
        b.member(rich, employer=firm)
        pool = b.house(size=100.0, quality=0.5)
        world = b.build()
        price = float(house_prices(world, np.array([pool]))[0])
        assert price == pytest.approx(35.0)

        sales = run_housing_market(world, SimConfig(housing_entry_fraction=1.0), seed=0)
        assert [(s.house_id, s.buyer_id, s.seller_id) for s in sales] == [(pool, rich, NOBODY)]
        assert world.families.savings[rich] == pytest.approx(25.0)
        assert world.housing_sink == pytest.approx(35.0)
        assert world.houses.owner[pool] == rich
        # employed buyer moves into the new, more valuable house
        assert world.families.residence[rich] == pool
        assert world.houses.occupant[pool] == rich

    def test_private_sale_pays_seller(self):
        b = WorldBuilder()
        seller = b.family(savings=0.0)
        buyer = b.family(savings=10.0)
        b.member(seller)
        b.member(buyer)
        listed = b.house(size=5.0, quality=1.0, owner=seller)
        world = b.build()
        world.houses.for_sale[listed] = True
        sales = run_housing_market(world, SimConfig(housing_entry_fraction=1.0), seed=0)
        assert len(sales) == 1
        price = 5.0 * 0.7
        assert world.families.savings[seller] == pytest.approx(price)
        assert world.families.savings[buyer] == pytest.approx(10.0 - price)
        assert world.housing_sink == 0.0
        assert not world.houses.for_sale[listed]

    def test_invariants_hold(self, rng):
        for trial in range(100):
            b = WorldBuilder(qli=[float(rng.uniform(0.4, 0.9))])
            firm = b.firm()
            families = []
            for _ in range(int(rng.integers(1, 8))):
                fam = b.family(savings=float(rng.uniform(0, 30)), size=float(rng.uniform(1, 10)))
                b.member(fam, employer=firm if rng.random() < 0.5 else NOBODY)
                families.append(fam)
            for _ in range(int(rng.integers(0, 6))):
                owner = NOBODY if rng.random() < 0.5 else families[int(rng.integers(0, len(families)))]
                b.house(size=float(rng.uniform(1, 10)), quality=float(rng.uniform(1, 3)), owner=owner)
            world = b.build()
            money = world.money_balance()
            run_housing_market(world, SimConfig(housing_entry_fraction=1.0), seed=trial)

            fam, h = world.families, world.houses
            assert (fam.savings >= -1e-9).all()
            assert world.money_balance() == pytest.approx(money)
            homes = fam.residence[fam.alive]
            assert len(np.unique(homes)) == len(homes)
            assert (h.occupant[homes] == np.flatnonzero(fam.alive)).all()
            assert (h.owner[homes] == np.flatnonzero(fam.alive)).all()
            occupied = np.flatnonzero(h.occupant != NOBODY)
            assert sorted(occupied) == sorted(homes)


@pytest.mark.parametrize("buyer_employed", [False, True])
def test_house_the_seller_moved_into_is_not_sold(buyer_employed):
    b = WorldBuilder()
    firm = b.firm()
    mover = b.family(savings=5.0, size=10.0, quality=1.0)
    b.member(mover, age_years=40, employer=firm)
    spare = b.house(size=50.0, quality=1.0, owner=mover)
    rich = b.family(savings=1000.0, size=10.0, quality=1.0)
    b.member(rich, age_years=40, employer=firm if buyer_employed else NOBODY)
    pool = b.house(size=10.0, quality=0.2)
    world = b.build()

    sales = run_housing_market(world, SimConfig(housing_entry_fraction=1.0), seed=0)

    # buying the pool house makes the mover settle in its spare house,
    # which leaves the market before the rich family reaches it
    assert [(s.house_id, s.buyer_id) for s in sales] == [(pool, mover)]
    h, fam = world.houses, world.families
    assert fam.residence[mover] == spare
    assert h.owner[spare] == mover
    assert h.occupant[spare] == mover
    assert fam.residence[rich] != spare
    assert fam.savings[rich] == pytest.approx(1000.0)
