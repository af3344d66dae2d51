"""Simulation parameters.

All defaults are the published calibration of the model: alpha=0.3,
beta=0.94, tax=0.25, housing entry 0.004 and vacancy 0.09.
"""

import dataclasses
from dataclasses import dataclass, fields
from enum import Enum
from typing import Any, Mapping, Optional


class ConfigError(Exception):
    """Invalid configuration value. ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class GovernmentMode(str, Enum):
    INDIVIDUAL = "individual"
    UNIFIED = "unified"


class GiniBase(str, Enum):
    WEALTH = "wealth"
    INCOME = "income"


class Spending(str, Enum):
    PURCHASES = "purchases"
    RESIDENTS = "residents"
    RETAINED = "retained"


@dataclass(frozen=True)
class SimConfig:
    alpha: float = 0.3
    beta: float = 0.94
    tax_rate: float = 0.25
    housing_entry_fraction: float = 0.004
    vacancy: float = 0.09
    market_sample_size: int = 10
    distance_share: float = 0.5
    reserve_months: int = 3
    markup_step: float = 0.05
    wage_base: float = 1.0
    wage_dispersion: float = 0.25
    qli_gain: float = 0.001
    months: int = 240
    business_days: int = 21
    seed: int = 0
    government_mode: GovernmentMode = GovernmentMode.INDIVIDUAL
    # None means: use the world file's sample_fraction
    sample_fraction: Optional[float] = None

    openings_per_month: int = 1
    stock_low_months: float = 1.0
    stock_high_months: float = 3.0
    price_floor: float = 0.01
    initial_price: float = 1.0
    # None means: 12 x wage_base x median qualification
    initial_firm_cash: Optional[float] = None
    initial_family_savings: float = 100.0
    mean_family_size: float = 3.0
    fertile_age_min: int = 15
    fertile_age_max: int = 49
    labor_age_min: int = 15
    labor_age_max: int = 70
    gini_base: GiniBase = GiniBase.WEALTH
    spending: Spending = Spending.PURCHASES
    spending_rate: float = 0.3

    def validate(self) -> "SimConfig":
        def check(name, ok, message):
            if not ok:
                raise ConfigError(name, message)

        check("alpha", self.alpha > 0, "must be > 0")
        check("beta", 0 <= self.beta <= 1, "must be in [0, 1]")
        check("tax_rate", 0 <= self.tax_rate < 1, "must be in [0, 1)")
        check("housing_entry_fraction", 0 <= self.housing_entry_fraction <= 1, "must be in [0, 1]")
        check("vacancy", 0 <= self.vacancy < 1, "must be in [0, 1)")
        check("market_sample_size", self.market_sample_size >= 1, "must be >= 1")
        check("distance_share", 0 <= self.distance_share <= 1, "must be in [0, 1]")
        check("reserve_months", self.reserve_months >= 0, "must be >= 0")
        check("markup_step", 0 <= self.markup_step < 1, "must be in [0, 1)")
        check("wage_base", self.wage_base > 0, "must be > 0")
        check("wage_dispersion", 0 <= self.wage_dispersion < 1, "must be in [0, 1)")
        check("qli_gain", self.qli_gain >= 0, "must be >= 0")
        check("months", self.months >= 1, "must be >= 1")
        check("business_days", self.business_days >= 1, "must be >= 1")
        check("seed", 0 <= self.seed < 2**64, "must be a 64-bit unsigned integer")
        if self.sample_fraction is not None:
            check("sample_fraction", 0 < self.sample_fraction <= 1, "must be in (0, 1]")
        check("openings_per_month", self.openings_per_month >= 0, "must be >= 0")
        check("stock_low_months", self.stock_low_months >= 0, "must be >= 0")
        check("stock_high_months", self.stock_high_months >= self.stock_low_months, "must be >= stock_low_months")
        check("price_floor", self.price_floor > 0, "must be > 0")
        check("initial_price", self.initial_price >= self.price_floor, "must be >= price_floor")
        if self.initial_firm_cash is not None:
            check("initial_firm_cash", self.initial_firm_cash >= 0, "must be >= 0")
        check("initial_family_savings", self.initial_family_savings >= 0, "must be >= 0")
        check("mean_family_size", self.mean_family_size >= 1, "must be >= 1")
        check("fertile_age_max", self.fertile_age_min <= self.fertile_age_max, "must be >= fertile_age_min")
        check("labor_age_max", self.labor_age_min < self.labor_age_max, "must be > labor_age_min")
        check("spending_rate", 0 <= self.spending_rate <= 1, "must be in [0, 1]")
        return self

    def with_overrides(self, overrides: Mapping[str, Any]) -> "SimConfig":
        """Return a validated copy with ``overrides`` applied.

        Values may be strings (from a config file or the command line); they
        are converted to the declared field type.
        """
        known = {f.name: f for f in fields(self)}
        changes = {}
        for name, raw in overrides.items():
            if name not in known:
                raise ConfigError(name, "unknown simulation parameter")
            changes[name] = _convert(name, known[name].default, raw)
        return dataclasses.replace(self, **changes).validate()

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = value.value if isinstance(value, Enum) else value
        return out


_ENUMS = {
    "government_mode": GovernmentMode,
    "gini_base": GiniBase,
    "spending": Spending,
}
_OPTIONAL_FLOATS = {"sample_fraction", "initial_firm_cash"}


def _convert(name: str, default: Any, raw: Any) -> Any:
    if name in _ENUMS:
        try:
            return _ENUMS[name](str(raw).lower())
        except ValueError:
            choices = ", ".join(e.value for e in _ENUMS[name])
            raise ConfigError(name, f"must be one of {choices}, got {raw!r}") from None
    if name in _OPTIONAL_FLOATS:
        if raw is None or str(raw).lower() in ("", "none", "default"):
            return None
        default = 0.0
    try:
        if isinstance(default, bool):
            return str(raw).lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError
            return int(raw.strip()) if isinstance(raw, str) else int(raw)
        return float(raw)
    except (TypeError, ValueError):
        raise ConfigError(name, f"cannot interpret {raw!r} as {type(default).__name__}") from None


SWEEPABLE = tuple(f.name for f in fields(SimConfig) if f.name not in ("seed", "months"))
