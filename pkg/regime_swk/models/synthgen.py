"""
Seeded synthetic market data with known regimes.

Every dataset is a majority regime interrupted by non-overlapping minority
periods. Log returns of each regime are drawn as one independent block and
scattered into the regime's positions; prices start at 1 in every coordinate.

Normal variates come from numpy's ``Generator(PCG64).standard_normal``
(ziggurat), seeded through ``SeedSequence``.
"""
from enum import StrEnum
from typing import ClassVar

import numpy as np
from loguru import logger as l
from pydantic import Field, model_validator

from .base import ArrayModelBase, ModelBase
from .exceptions import GenerationError, ParameterError
from .field_types import Correlation, NonNegativeInt, PositiveFloat, PositiveInt, Seed
from .measures import Stream

DAYS_PER_YEAR: int = 252
OBS_PER_DAY: int = 7
DEFAULT_YEARS: int = 20
MAX_REJECTIONS: int = 10_000
"""Rejected placements tolerated before minority-period sampling gives up."""

BULL: tuple[float, float] = (0.02, 0.2)
"""Annualized (mu, sigma) of the bullish regime."""
BEAR: tuple[float, float] = (-0.02, 0.3)
"""Annualized (mu, sigma) of the bearish regime."""

SeedLike = int | np.random.SeedSequence | np.random.Generator


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(seed))


class RegimeShape(StrEnum):
    GAUSSIAN = "gaussian"
    MOONS = "moons"
    """Two interleaving noisy half circles, moment-matched to the regime parameters (d=2 only)."""


class RegimeParams(ModelBase):
    """Distribution of the log returns inside one regime."""
    mu: float
    """Annualized mean log return."""
    sigma: PositiveFloat
    """Annualized volatility."""
    rho: Correlation = 0.0
    """Pairwise correlation between coordinates (ignored for d=1)."""
    shape: RegimeShape = RegimeShape.GAUSSIAN
    moon_noise: float = Field(default=0.05, ge=0)
    """Noise scale of the moons as a fraction of their radius."""

    @classmethod
    def of(cls, theta: tuple[float, float], rho: float = 0.0, shape: RegimeShape = RegimeShape.GAUSSIAN) -> 'RegimeParams':
        mu, sigma = theta
        return cls(mu=mu, sigma=sigma, rho=rho, shape=shape)

    def drift(self, dt: float) -> float:
        """Per-step mean log return (mu - sigma²/2)·dt."""
        return (self.mu - 0.5 * self.sigma ** 2) * dt

    def step_std(self, dt: float) -> float:
        return self.sigma * float(np.sqrt(dt))


class ScenarioSpec(ModelBase):
    """Layout and regimes of a synthetic dataset. Regime 0 is the majority regime."""
    name: str = "custom"
    d: PositiveInt
    years: PositiveInt = DEFAULT_YEARS
    days_per_year: PositiveInt = DAYS_PER_YEAR
    obs_per_day: PositiveInt = OBS_PER_DAY
    regimes: list[RegimeParams] = Field(min_length=1)
    minority_periods: NonNegativeInt = 10
    """Periods per minority regime."""
    period_length: PositiveInt | None = None
    """Points per minority period; defaults to half a year."""
    seed: Seed = 0

    @model_validator(mode='after')
    def _check_shapes(self) -> 'ScenarioSpec':
        for index, regime in enumerate(self.regimes):
            if regime.shape == RegimeShape.MOONS and self.d != 2:
                raise ParameterError(f"Regime {index}: the moons shape needs d=2, got d={self.d}")
        return self

    @property
    def n_points(self) -> int:
        return self.years * self.days_per_year * self.obs_per_day

    @property
    def dt(self) -> float:
        return 1.0 / (self.days_per_year * self.obs_per_day)

    @property
    def resolved_period_length(self) -> int:
        if self.period_length is not None:
            return self.period_length
        return self.days_per_year * self.obs_per_day // 2


class MinorityPeriod(ModelBase):
    """Half-open interval [start, end) held by a minority regime."""
    start: NonNegativeInt
    end: NonNegativeInt
    regime: PositiveInt


class SyntheticDataset(ArrayModelBase):
    """Generated prices with the true regime of every price point."""
    ARRAY_DTYPES: ClassVar[dict[str, type]] = {'truth': np.int64}

    prices: Stream
    truth: np.ndarray
    """Regime id of every price point (0 = majority)."""
    spec: ScenarioSpec
    periods: list[MinorityPeriod] = []

    @model_validator(mode='after')
    def _check_truth(self) -> 'SyntheticDataset':
        if self.truth.shape != (self.prices.length,):
            raise GenerationError(f"Truth has shape {self.truth.shape} for {self.prices.length} prices")
        return self

    @property
    def returns_truth(self) -> np.ndarray:
        """Truth aligned with the log returns: return i closes at price point i + 1."""
        return self.truth[1:]

    def truncate(self, years: int) -> 'SyntheticDataset':
        """
        The first ``years`` years of the dataset, with minority periods clipped to them.

        A prefix holds ``years × 252 × 7 + 1`` price points (1,765 for one year), i.e.
        exactly ``years`` years of returns; the full length caps it.
        """
        if not 1 <= years <= self.spec.years:
            raise ParameterError(f"Cannot truncate a {self.spec.years}-year dataset to {years} years")
        n = min(years * self.spec.days_per_year * self.spec.obs_per_day + 1, self.prices.length)
        periods = [
            period.model_copy(update={'end': min(period.end, n)})
            for period in self.periods
            if period.start < n
        ]
        return SyntheticDataset(
            prices=Stream(values=self.prices.values[:n]),
            truth=self.truth[:n],
            spec=self.spec.model_copy(update={'years': years}),
            periods=periods,
        )


# =============================================================================
# Period placement
# =============================================================================

def place_minority_periods(spec: ScenarioSpec, seed: SeedLike | None = None) -> list[MinorityPeriod]:
    """
    Uniformly placed, non-overlapping minority periods, sorted by start.

    Periods are drawn one after another; a start that would overlap an
    already placed period is rejected and redrawn.
    """
    n = spec.n_points
    length = spec.resolved_period_length
    regimes = [regime for regime in range(1, len(spec.regimes)) for _ in range(spec.minority_periods)]
    if len(regimes) * length >= n:
        raise GenerationError(
            f"{len(regimes)} minority period(s) of {length} points leave no room for the majority regime in {n} points"
        )

    rng = _rng(spec.seed if seed is None else seed)
    occupied = np.zeros(n, dtype=bool)
    periods: list[MinorityPeriod] = []
    rejections = 0
    for regime in regimes:
        while True:
            start = int(rng.integers(0, n - length + 1))
            if not occupied[start:start + length].any():
                break
            rejections += 1
            if rejections > MAX_REJECTIONS:
                raise GenerationError(f"Could not place {len(regimes)} non-overlapping periods after {MAX_REJECTIONS} rejections")
        occupied[start:start + length] = True
        periods.append(MinorityPeriod(start=start, end=start + length, regime=regime))
    l.debug(f"Placed {len(periods)} minority period(s) with {rejections} rejection(s)")
    return sorted(periods, key=lambda period: period.start)


def truth_labels(n: int, periods: list[MinorityPeriod]) -> np.ndarray:
    truth = np.zeros(n, dtype=np.int64)
    for period in periods:
        truth[period.start:period.end] = period.regime
    return truth


# =============================================================================
# Per-regime return blocks
# =============================================================================

def gen_gaussian_1d(theta: tuple[float, float], n: int, dt: float, seed: SeedLike) -> np.ndarray:
    """n GBM log returns N((mu - sigma²/2)dt, sigma²dt) as an n×1 block."""
    params = RegimeParams.of(theta)
    z = _rng(seed).standard_normal(n)
    return (params.drift(dt) + params.step_std(dt) * z)[:, None]


def gen_2d_gaussian_regime(theta: tuple[float, float], rho: float, n: int, dt: float, seed: SeedLike) -> np.ndarray:
    """n×2 returns; the second coordinate is rho·r1 + sqrt(1 - rho²)·r' with r1, r' both Θ-distributed."""
    if not -1.0 < rho < 1.0:
        raise ParameterError(f"Correlation must lie in (-1, 1), got {rho}")
    params = RegimeParams.of(theta, rho)
    z = _rng(seed).standard_normal((n, 2))
    r1 = params.drift(dt) + params.step_std(dt) * z[:, 0]
    r_prime = params.drift(dt) + params.step_std(dt) * z[:, 1]
    r2 = rho * r1 + np.sqrt(1.0 - rho * rho) * r_prime
    return np.column_stack([r1, r2])


def make_moons(n: int, noise: float = 0.0, seed: SeedLike = 0) -> np.ndarray:
    """
    Two interleaving half circles of radius 1, shuffled.

    The outer moon is the upper unit semicircle; the inner moon is the lower
    semicircle shifted right by 1 and down by 0.5. Gaussian noise with standard
    deviation ``noise`` (in radius units) is added to every coordinate.
    """
    rng = _rng(seed)
    n_outer = n // 2
    n_inner = n - n_outer
    t_outer = np.linspace(0.0, np.pi, n_outer)
    t_inner = np.linspace(0.0, np.pi, n_inner)
    outer = np.column_stack([np.cos(t_outer), np.sin(t_outer)])
    inner = np.column_stack([1.0 - np.cos(t_inner), 1.0 - np.sin(t_inner) - 0.5])
    points = np.vstack([outer, inner])
    points = points[rng.permutation(n)]
    if noise > 0:
        points = points + noise * rng.standard_normal(points.shape)
    return points


def _equicorrelation(d: int, rho: float) -> np.ndarray:
    return np.full((d, d), rho) + (1.0 - rho) * np.eye(d)


def gen_moons_regime(
    theta: tuple[float, float],
    rho: float,
    n: int,
    dt: float,
    noise: float = 0.05,
    seed: SeedLike = 0,
) -> np.ndarray:
    """
    Moon-shaped n×2 returns whose sample mean, variance and correlation are
    exactly those of the Θ-regime with correlation rho.

    The moons are whitened with the Cholesky factor of their own (population)
    covariance and re-coloured with the factor of the target covariance.
    """
    if noise < 0:
        raise ParameterError(f"Moon noise must be ≥ 0, got {noise}")
    if n < 3:
        raise GenerationError(f"A moons regime needs at least 3 points, got {n}")
    params = RegimeParams.of(theta, rho)
    points = make_moons(n, noise, seed)
    centred = points - points.mean(axis=0)
    covariance = centred.T @ centred / n
    target = params.step_std(dt) ** 2 * _equicorrelation(2, rho)
    try:
        whiten = np.linalg.cholesky(covariance)
        colour = np.linalg.cholesky(target)
    except np.linalg.LinAlgError as e:
        raise GenerationError(f"Cannot moment-match the moons: {e}") from e
    white = np.linalg.solve(whiten, centred.T).T
    return white @ colour.T + params.drift(dt)


def gen_equicorrelated_regime(theta: tuple[float, float], rho: float, d: int, n: int, dt: float, seed: SeedLike) -> np.ndarray:
    """n×d returns from N((mu - sigma²/2)dt·1, sigma²dt·C) with C the equicorrelation matrix."""
    if d > 1 and rho <= -1.0 / (d - 1):
        raise ParameterError(
            f"Equicorrelation rho={rho} is not positive definite for d={d} (need rho > {-1.0 / (d - 1):.6g})"
        )
    params = RegimeParams.of(theta, rho)
    factor = np.linalg.cholesky(_equicorrelation(d, rho))
    z = _rng(seed).standard_normal((n, d))
    return params.drift(dt) + params.step_std(dt) * z @ factor.T


def _regime_block(spec: ScenarioSpec, regime: RegimeParams, n: int, seed: SeedLike) -> np.ndarray:
    theta = (regime.mu, regime.sigma)
    match (spec.d, regime.shape):
        case (1, _):
            return gen_gaussian_1d(theta, n, spec.dt, seed)
        case (2, RegimeShape.MOONS):
            return gen_moons_regime(theta, regime.rho, n, spec.dt, regime.moon_noise, seed)
        case (2, _):
            return gen_2d_gaussian_regime(theta, regime.rho, n, spec.dt, seed)
        case _:
            return gen_equicorrelated_regime(theta, regime.rho, spec.d, n, spec.dt, seed)


# =============================================================================
# Datasets
# =============================================================================

def generate(spec: ScenarioSpec) -> SyntheticDataset:
    """Dataset for any ScenarioSpec; a pure function of its fields, seed included."""
    n = spec.n_points
    placement_seed, *regime_seeds = np.random.SeedSequence(spec.seed).spawn(1 + len(spec.regimes))
    periods = place_minority_periods(spec, _rng(placement_seed))
    truth = truth_labels(n, periods)

    returns = np.empty((n, spec.d))
    for regime_id, (regime, seed) in enumerate(zip(spec.regimes, regime_seeds, strict=True)):
        positions = np.flatnonzero(truth == regime_id)
        if positions.size:
            returns[positions] = _regime_block(spec, regime, positions.size, _rng(seed))

    # S_0 = 1; the return stored at point 0 is never used
    log_prices = np.vstack([np.zeros((1, spec.d)), np.cumsum(returns[1:], axis=0)])
    l.info(f"Generated '{spec.name}': {n} points, d={spec.d}, {len(spec.regimes)} regime(s), seed={spec.seed}")
    return SyntheticDataset(prices=Stream(values=np.exp(log_prices)), truth=truth, spec=spec, periods=periods)


def gen_1d(spec: ScenarioSpec) -> SyntheticDataset:
    if spec.d != 1:
        raise ParameterError(f"gen_1d needs d=1, got d={spec.d}")
    return generate(spec)


def gen_2d(spec: ScenarioSpec) -> SyntheticDataset:
    if spec.d != 2:
        raise ParameterError(f"gen_2d needs d=2, got d={spec.d}")
    return generate(spec)


def gen_3d(spec: ScenarioSpec) -> SyntheticDataset:
    if spec.d != 3:
        raise ParameterError(f"gen_3d needs d=3, got d={spec.d}")
    return generate(spec)


class Scenario(StrEnum):
    ONE_D = "1d"
    A = "A"
    """Bull vs bear, both with rho = +1/2."""
    B = "B"
    """Bull with rho = +1/2 vs bull with rho = -1/2."""
    C = "C"
    """Bull (+1/2) vs bear (+1/2) vs bear (-1/2)."""
    D = "D"
    """Bull (-1/2) vs bear (-1/2) vs moon-shaped bear (-1/2)."""
    THREE_D_A = "3d-a"
    THREE_D_B = "3d-b"
    """Bull (+1/2) vs bull (-0.45); -1/2 is singular for three coordinates."""


_SCENARIO_REGIMES: dict[Scenario, tuple[int, list[RegimeParams]]] = {
    Scenario.ONE_D: (1, [RegimeParams.of(BULL), RegimeParams.of(BEAR)]),
    Scenario.A: (2, [RegimeParams.of(BULL, 0.5), RegimeParams.of(BEAR, 0.5)]),
    Scenario.B: (2, [RegimeParams.of(BULL, 0.5), RegimeParams.of(BULL, -0.5)]),
    Scenario.C: (2, [RegimeParams.of(BULL, 0.5), RegimeParams.of(BEAR, 0.5), RegimeParams.of(BEAR, -0.5)]),
    Scenario.D: (2, [
        RegimeParams.of(BULL, -0.5),
        RegimeParams.of(BEAR, -0.5),
        RegimeParams.of(BEAR, -0.5, RegimeShape.MOONS),
    ]),
    Scenario.THREE_D_A: (3, [RegimeParams.of(BULL, 0.5), RegimeParams.of(BEAR, 0.5)]),
    Scenario.THREE_D_B: (3, [RegimeParams.of(BULL, 0.5), RegimeParams.of(BULL, -0.45)]),
}


def scenario_spec(scenario: Scenario | str, seed: int, years: int = DEFAULT_YEARS) -> ScenarioSpec:
    scenario = Scenario(scenario)
    d, regimes = _SCENARIO_REGIMES[scenario]
    return ScenarioSpec(name=scenario.value, d=d, years=years, regimes=regimes, seed=seed)


def gen_scenario(scenario: Scenario | str, seed: int, years: int = DEFAULT_YEARS) -> SyntheticDataset:
    """One of the named scenarios; 1d, A-D and the two 3D layouts."""
    return generate(scenario_spec(scenario, seed, years))
