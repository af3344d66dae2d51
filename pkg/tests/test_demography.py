import numpy as np
import pytest

from metrosim.demography import (
    gaussian_fertility,
    generate_population,
    gompertz_mortality,
    sample_ages,
    step_demographics,
)
from metrosim.geo import generate_world
from metrosim.simconfig import ConfigError, SimConfig
from metrosim.world import FEMALE, MALE, NOBODY

from utils import WorldBuilder, small_spec


def test_ages_stay_inside_their_group(rng):
    ages = sample_ages(rng, [(0, 14), (20, 24)], np.array([0.0, 1.0]), 2000)
    assert ages.min() >= 240
    assert ages.max() <= 299


def test_unnormalizable_pyramid(rng):
    with pytest.raises(ConfigError):
        sample_ages(rng, [(0, 14)], np.array([0.0]), 10)


def test_family_count_follows_mean_size():
    spec = small_spec(populations=(300,), firms=(1,), qli=(0.7,))
    population = generate_population(spec, [300], SimConfig(mean_family_size=3.0), seed=4)
    assert len(population.families) == 100
    assert len(population.citizens) == 300
    # every family has at least one member
    assert np.bincount(population.citizens.family, minlength=100).min() >= 1


def test_family_heads_are_adults_when_possible():
    spec = small_spec(populations=(300,), firms=(1,), qli=(0.7,))
    population = generate_population(spec, [300], SimConfig(), seed=4)
    c = population.citizens
    adults_per_family = np.bincount(c.family[c.age >= 18 * 12], minlength=len(population.families))
    n_adults = int((c.age >= 18 * 12).sum())
    assert (adults_per_family > 0).sum() == min(n_adults, len(population.families))


def test_same_seed_same_partition():
    spec = small_spec()
    a = generate_population(spec, [120, 60], SimConfig(), seed=9)
    b = generate_population(spec, [120, 60], SimConfig(), seed=9)
    assert np.array_equal(a.citizens.family, b.citizens.family)
    assert np.array_equal(a.families.savings, b.families.savings)


class TestTables:
    def test_gompertz_rises_with_age(self):
        table = gompertz_mortality(0.0002, 0.085)
        assert len(table) == 101
        assert np.all(np.diff(table) > 0)
        assert np.all((table >= 0) & (table <= 1))

    def test_gaussian_fertility_total(self):
        table = gaussian_fertility(2.3, 26, 6)
        assert table[:15].sum() == 0
        assert table.sum() * 12 == pytest.approx(2.3)
        assert table.argmax() == 26


class TestStep:
    """One month of aging, deaths, births and retirements."""

    def test_identity_tables(self):
        world = generate_world(small_spec(), SimConfig())
        before = world.citizens.age.copy()
        n = int(world.citizens.alive.sum())
        events = step_demographics(world, SimConfig(), seed=1)
        assert (events.births, events.deaths) == (0, 0)
        assert int(world.citizens.alive.sum()) == n
        assert np.array_equal(world.citizens.age, before + 1)

    def test_extinction(self):
        world = generate_world(small_spec(mortality=1.0), SimConfig())
        money = world.total_money()
        events = step_demographics(world, SimConfig(), seed=1)
        assert events.deaths == len(world.citizens)
        assert not world.citizens.alive.any()
        assert not world.families.alive.any()
        assert world.houses.vacant().all()
        assert (world.houses.owner == NOBODY).all()
        assert world.total_money() == pytest.approx(money)

    def test_births_follow_binomial(self):
        b = WorldBuilder(fertility=0.1)
        fam = b.family()
        world = b.build()
        world.citizens.append(FEMALE, np.full(10_000, 25 * 12), 5, fam)
        events = step_demographics(world, SimConfig(), seed=3)
        assert 900 <= events.births <= 1100
        newborns = np.arange(10_000, len(world.citizens))
        assert len(newborns) == events.births
        c = world.citizens
        assert (c.age[newborns] == 0).all()
        assert (c.qualification[newborns] == 1).all()
        assert (c.family[newborns] == fam).all()

    def test_no_births_outside_fertile_ages(self):
        b = WorldBuilder(fertility=1.0)
        fam = b.family()
        b.member(fam, age_years=12)
        b.member(fam, age_years=60)
        b.member(fam, age_years=30, gender=MALE)
        events = step_demographics(b.build(), SimConfig(), seed=3)
        assert events.births == 0

    def test_death_moves_money_to_family(self):
        b = WorldBuilder()
        fam = b.family(savings=10.0)
        firm = b.firm()
        b.member(fam, gender=FEMALE)
        man = b.member(fam, gender=MALE, employer=firm, money=7.0)
        world = b.build()
        world.spec.mortality_male = np.ones(101)
        events = step_demographics(world, SimConfig(), seed=0)
        assert events.deaths == 1
        c = world.citizens
        assert not c.alive[man]
        assert c.employer[man] == NOBODY
        assert c.money[man] == 0
        assert world.families.savings[fam] == 17.0
        assert world.families.alive[fam]

    def test_last_death_dissolves_family(self):
        b = WorldBuilder(mortality=1.0)
        fam = b.family(savings=10.0)
        b.member(fam, money=5.0)
        world = b.build()
        home = world.families.residence[fam]
        events = step_demographics(world, SimConfig(), seed=0)
        assert events.dissolved == 1
        assert world.ledger.dissolved == 1
        assert not world.families.alive[fam]
        assert world.houses.owner[home] == NOBODY
        assert world.houses.occupant[home] == NOBODY
        assert world.government.treasury[0] == 15.0

    def test_retirement_at_seventy(self):
        b = WorldBuilder()
        fam = b.family()
        firm = b.firm()
        old = b.member(fam, age_years=69, age_months=11, employer=firm)
        young = b.member(fam, age_years=69, age_months=10, employer=firm)
        world = b.build()
        events = step_demographics(world, SimConfig(), seed=0)
        assert events.retirements == 1
        assert world.ledger.retirements == 1
        assert world.citizens.employer[old] == NOBODY
        assert world.citizens.employer[young] == firm

    def test_population_accounting(self):
        world = generate_world(small_spec(mortality=0.01, fertility=0.02), SimConfig())
        config = SimConfig()
        for month in range(12):
            world.month_index = month
            before = int(world.citizens.alive.sum())
            money = world.total_money()
            events = step_demographics(world, config, seed=5)
            assert int(world.citizens.alive.sum()) == before + events.births - events.deaths
            assert world.total_money() == pytest.approx(money)
            c = world.citizens
            assert (c.employer[~c.alive] == NOBODY).all()
            assert world.families.alive[c.family[c.alive]].all()
