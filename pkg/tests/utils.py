import numpy as np

from metrosim.geo import Municipality, Rect, WorldSpec
from metrosim.government import Government
from metrosim.simconfig import SimConfig
from metrosim.world import FEMALE, NOBODY, Citizens, Families, Firms, Houses, World

TINY_WORLD = """\
name = tiny
sample_fraction = 1.0

[municipalities]
  [[Center]]
  region = 0, 0, 10, 10
  urban_zone = 3, 3, 7, 7
  initial_qli = 0.7
  target_population = 120
  target_firms = 4
  urban_fraction = 0.9

  [[Edge]]
  region = 12, 0, 20, 10
  urban_zone = 14, 3, 18, 7
  initial_qli = 0.5
  target_population = 60
  target_firms = 2
  urban_fraction = 0.7

[age_pyramid]
groups = 0-14, 15-39, 40-69, 70-90
female = 0.25, 0.4, 0.3, 0.05
male = 0.25, 0.4, 0.3, 0.05

[mortality]
model = gompertz
female_base = 0.0002
female_growth = 0.085
male_base = 0.0004
male_growth = 0.085

[fertility]
model = gaussian
total_fertility = 2.0
peak = 27
spread = 6

[qualification]
weights = 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1

[houses]
size = 40, 120
quality = 1, 4

[simulation]
months = 3
"""


def write_world(tmpdir, text=TINY_WORLD, name="tiny-world"):
    path = tmpdir.join(name)
    path.write(text)
    return str(path)


def small_spec(
    populations=(120, 60),
    firms=(4, 2),
    qli=(0.7, 0.5),
    mortality=0.0,
    fertility=0.0,
    sample_fraction=1.0,
) -> WorldSpec:
    """Side by side 10 x 10 km municipalities with flat demographic tables."""
    municipalities = [
        Municipality(
            id=i,
            name=f"m{i}",
            region=Rect(12 * i, 0, 12 * i + 10, 10),
            urban_zone=Rect(12 * i + 3, 3, 12 * i + 7, 7),
            initial_qli=qli[i],
            target_population=populations[i],
            target_firms=firms[i],
            urban_fraction=0.8,
        )
        for i in range(len(populations))
    ]
    return WorldSpec(
        municipalities=municipalities,
        age_groups=[(0, 14), (15, 64), (65, 90)],
        pyramid_female=np.array([0.25, 0.65, 0.10]),
        pyramid_male=np.array([0.25, 0.65, 0.10]),
        mortality_female=np.full(101, mortality),
        mortality_male=np.full(101, mortality),
        fertility=np.full(50, fertility),
        qualification_weights=np.ones(21),
        sample_fraction=sample_fraction,
    ).validate()


class WorldBuilder:
    """Hand-built worlds: every agent placed explicitly."""

    def __init__(self, municipalities=1, qli=None, mode="individual", median_qualification=5.0, mortality=0.0, fertility=0.0):
        qli = qli or [0.7] * municipalities
        self.world = World(
            spec=small_spec(
                populations=(100,) * municipalities,
                firms=(1,) * municipalities,
                qli=qli,
                mortality=mortality,
                fertility=fertility,
            ),
            citizens=Citizens.empty(),
            families=Families.empty(),
            houses=Houses.empty(),
            firms=Firms.empty(),
            government=Government(mode, np.array(qli, dtype=float)),
            median_qualification=median_qualification,
        )

    def house(self, x=1.0, y=1.0, municipality=0, size=1.0, quality=1.0, owner=NOBODY, occupant=NOBODY) -> int:
        return int(self.world.houses.append(x, y, municipality, size, quality, owner, occupant)[0])

    def family(self, savings=0.0, x=1.0, y=1.0, municipality=0, size=1.0, quality=1.0) -> int:
        fam = int(self.world.families.append(savings)[0])
        home = self.house(x, y, municipality, size, quality, owner=fam, occupant=fam)
        self.world.families.residence[fam] = home
        return fam

    def member(self, family, age_years=30, qualification=5, gender=FEMALE, employer=NOBODY, money=0.0, age_months=0) -> int:
        c = self.world.citizens
        i = int(c.append(gender, age_years * 12 + age_months, qualification, family)[0])
        c.employer[i] = employer
        c.money[i] = money
        return i

    def firm(self, x=5.0, y=5.0, municipality=0, cash=0.0, stock=0.0, price=1.0, wage_base=1.0) -> int:
        f = self.world.firms
        i = int(f.append(x, y, municipality, cash, price, wage_base)[0])
        f.stock[i] = stock
        return i

    def build(self) -> World:
        return self.world


def quiet_config(**overrides) -> SimConfig:
    return SimConfig().with_overrides(overrides)
