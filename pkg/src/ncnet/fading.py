"""Interferer fading-variance profiles, planar deployments and path-loss models.

A profile is the ordered sequence alpha_1 >= alpha_2 >= ... of fading
variances of the interfering cells (cell 0, the intended cell, has unit
variance and is not part of the profile).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
# relative size of a term below which a running tail sum is considered converged
TAIL_REL_TOL = 1e-15
MAX_TAIL_TERMS = 1_000_000


class TruncationError(RuntimeError):
    """A tail sum did not converge within MAX_TAIL_TERMS terms."""


class DistanceRangeError(ValueError):
    """Distance outside the validity range of an empirical path-loss model."""


def _truncated_log_sum(log_term, start: int) -> float:
    """log of sum_{l >= start} exp(log_term(l)) for a decreasing sequence."""
    acc = log_term(start)
    if acc == -math.inf:
        return -math.inf
    cut = math.log(TAIL_REL_TOL)
    ell = start + 1
    while True:
        lt = log_term(ell)
        if lt < acc + cut:
            return acc
        acc = float(np.logaddexp(acc, lt))
        ell += 1
        if ell - start > MAX_TAIL_TERMS:
            raise TruncationError(f"tail sum from {start} did not converge")


class FadingProfile:
    """Common interface: alpha(ell), log_alpha(ell), tail sums."""

    kind = "abstract"
    n_cells: int | None = None  # None means infinitely many interferers

    def log_alpha(self, ell: int) -> float:
        raise NotImplementedError

    def alpha(self, ell: int) -> float:
        return math.exp(self.log_alpha(ell))

    def values(self, n: int) -> np.ndarray:
        """alpha_1, ..., alpha_n as an array."""
        return np.array([self.alpha(ell) for ell in range(1, n + 1)])

    def log_tail_sum(self, L: int) -> float:
        """log of sum_{ell > L} alpha_ell."""
        if L < 0:
            raise ValueError("L must be >= 0")
        return _truncated_log_sum(self.log_alpha, L + 1)

    def tail_sum(self, L: int) -> float:
        return math.exp(self.log_tail_sum(L))

    def total_power(self) -> float:
        return self.tail_sum(0)

    def is_summable(self, tol: float = 1e-12, horizon: int = 10_000) -> bool:
        """True if the truncated tail beyond ``horizon`` falls below ``tol``."""
        try:
            return self.tail_sum(horizon) <= tol
        except TruncationError:
            return False


@dataclass(frozen=True)
class ExponentialProfile(FadingProfile):
    rho: float
    c: float = 1.0
    kind = "exponential"

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho!r}")
        if not self.c > 0.0:
            raise ValueError(f"scale c must be positive, got {self.c!r}")

    def log_alpha(self, ell):
        return math.log(self.c) + ell * math.log(self.rho)

    def alpha(self, ell):
        return self.c * self.rho**ell

    def log_tail_sum(self, L):
        if L < 0:
            raise ValueError("L must be >= 0")
        return math.log(self.c) + (L + 1) * math.log(self.rho) - math.log1p(-self.rho)

    def tail_sum(self, L):
        if L < 0:
            raise ValueError("L must be >= 0")
        return self.c * self.rho ** (L + 1) / (1.0 - self.rho)


@dataclass(frozen=True)
class DoubleExponentialProfile(FadingProfile):
    """alpha_ell = exp(-exp(ell**a))."""

    a: float
    kind = "double_exponential"

    def __post_init__(self):
        if not self.a >= 1.0:
            raise ValueError(f"exponent a must be >= 1, got {self.a!r}")

    def log_alpha(self, ell):
        try:
            return -math.exp(ell**self.a)
        except OverflowError:
            return -math.inf


@dataclass(frozen=True, eq=False)
class EmpiricalProfile(FadingProfile):
    """Finitely many interferers with the given variances (sorted descending)."""

    variances: np.ndarray = field(repr=False)
    kind = "empirical"

    def __post_init__(self):
        v = np.asarray(self.variances, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("empirical profile needs a non-empty 1-D list of variances")
        if not np.all(np.isfinite(v)) or np.any(v <= 0.0):
            raise ValueError("variances must be finite and positive")
        if np.any(np.diff(v) > 0.0):
            raise ValueError("variances must be non-increasing")
        object.__setattr__(self, "variances", v)

    @property
    def n_cells(self):
        return int(self.variances.size)

    def alpha(self, ell):
        if ell < 1:
            raise ValueError("cell index starts at 1")
        return float(self.variances[ell - 1]) if ell <= self.n_cells else 0.0

    def log_alpha(self, ell):
        a = self.alpha(ell)
        return math.log(a) if a > 0.0 else -math.inf

    def values(self, n):
        out = np.zeros(n)
        k = min(n, self.n_cells)
        out[:k] = self.variances[:k]
        return out

    def tail_sum(self, L):
        if L < 0:
            raise ValueError("L must be >= 0")
        return math.fsum(self.variances[L:])

    def log_tail_sum(self, L):
        t = self.tail_sum(L)
        return math.log(t) if t > 0.0 else -math.inf

    def is_summable(self, tol=1e-12, horizon=10_000):
        return True


def exponential_profile(rho: float, c: float = 1.0) -> ExponentialProfile:
    return ExponentialProfile(rho=rho, c=c)


def double_exponential_profile(a: float) -> DoubleExponentialProfile:
    return DoubleExponentialProfile(a=a)


def empirical_profile(values: Sequence[float]) -> EmpiricalProfile:
    return EmpiricalProfile(np.asarray(values, dtype=float))


def ratio_infimum(profile: FadingProfile, L: int) -> float:
    """min_{1 <= ell < L} alpha_{ell+1} / alpha_ell."""
    if L < 2:
        raise ValueError("horizon L must be >= 2")
    if isinstance(profile, ExponentialProfile):
        return profile.rho
    if profile.n_cells is not None and L > profile.n_cells:
        raise ValueError(f"profile has only {profile.n_cells} cells, horizon {L} requested")
    logs = [profile.log_alpha(ell) for ell in range(1, L + 1)]
    return min(math.exp(logs[i + 1] - logs[i]) for i in range(L - 1))


def decay_rate_identity(profile: FadingProfile, L: int) -> tuple[float, float]:
    """Both sides of (1/L) log(1/alpha_L) = (1/L) sum_{l<L} log(alpha_l/alpha_{l+1}).

    Uses alpha_0 = 1. The right-hand side is evaluated term by term.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    lhs = -profile.log_alpha(L) / L
    logs = [0.0] + [profile.log_alpha(ell) for ell in range(1, L + 1)]
    rhs = math.fsum(logs[i] - logs[i + 1] for i in range(L)) / L
    return lhs, rhs


# --- deployments -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Deployment:
    intensity_eta: float
    distances: np.ndarray
    region_radius: float
    seed: int

    @property
    def count(self) -> int:
        return int(self.distances.size)


def sample_deployment(
    eta: float,
    region_radius: float | None = None,
    seed: int = 0,
    min_points: int | None = None,
) -> Deployment:
    """Distances (km) from the origin to the points of a planar PPP on a disk.

    If ``region_radius`` is omitted it is chosen so that the expected count is
    four times ``min_points``. When ``min_points`` is given, realizations with
    fewer points are redrawn from the next derived seed.
    """
    if not eta > 0.0:
        raise ValueError(f"intensity must be positive, got {eta!r}")
    if region_radius is None:
        if not min_points:
            raise ValueError("give region_radius or min_points")
        region_radius = math.sqrt(4.0 * min_points / (eta * math.pi))
    if not region_radius > 0.0:
        raise ValueError(f"region radius must be positive, got {region_radius!r}")
    mean_count = eta * math.pi * region_radius**2
    attempt = 0
    while True:
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), attempt]))
        n = rng.poisson(mean_count)
        radii = np.sort(region_radius * np.sqrt(rng.random(n)))
        if min_points is None or n >= min_points:
            return Deployment(eta, radii, region_radius, int(seed))
        attempt += 1


def expected_ordered_distance(ell: int, eta: float) -> float:
    """sqrt(ell / (eta * pi)), the mean-count heuristic for the ell-th neighbour."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if not eta > 0.0:
        raise ValueError("eta must be positive")
    return math.sqrt(ell / (eta * math.pi))


def exact_mean_ordered_distance(ell: int, eta: float) -> float:
    """Exact PPP mean Gamma(ell + 1/2) / (Gamma(ell) sqrt(eta pi))."""
    if ell < 1 or not eta > 0.0:
        raise ValueError("need ell >= 1 and eta > 0")
    return math.exp(math.lgamma(ell + 0.5) - math.lgamma(ell)) / math.sqrt(eta * math.pi)


# --- path loss ---------------------------------------------------------------


def _check_distance(d):
    d = np.asarray(d, dtype=float)
    if np.any(~(d > 0.0)):
        raise ValueError("distance must be positive")
    return d


@dataclass(frozen=True)
class PowerLaw:
    beta: float
    ref_gain: float = 1.0

    def __post_init__(self):
        if not self.beta > 0.0 or not self.ref_gain > 0.0:
            raise ValueError("beta and ref_gain must be positive")

    def gain(self, d_km):
        return self.ref_gain * _check_distance(d_km) ** (-self.beta)


@dataclass(frozen=True)
class FreeSpace:
    """Friis gain G (lambda / (4 pi d))^2. Antenna heights are not used."""

    freq_hz: float = 2.4e9
    gain_G: float = 1e-4
    h_b: float = 50.0
    h_m: float = 1.5

    def gain(self, d_km):
        d_m = 1e3 * _check_distance(d_km)
        lam = SPEED_OF_LIGHT / self.freq_hz
        return self.gain_G * (lam / (4.0 * math.pi * d_m)) ** 2


@dataclass(frozen=True)
class TwoRay:
    """Free space below the crossover, G h_b^2 h_m^2 / d^4 beyond it.

    The default crossover 4 pi h_b h_m / lambda is where the two laws
    coincide, so the gain is continuous and non-increasing in d. Passing
    ``crossover_m`` (e.g. the textbook 4 h_b h_m / lambda) moves the switch
    point; the gain then jumps at the crossover.
    """

    freq_hz: float = 2.4e9
    gain_G: float = 1e-4
    h_b: float = 50.0
    h_m: float = 1.5
    crossover_m: float | None = None

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.freq_hz

    @property
    def crossover(self) -> float:
        if self.crossover_m is not None:
            return self.crossover_m
        return 4.0 * math.pi * self.h_b * self.h_m / self.wavelength

    def gain(self, d_km):
        d_m = 1e3 * _check_distance(d_km)
        free = self.gain_G * (self.wavelength / (4.0 * math.pi * d_m)) ** 2
        ground = self.gain_G * (self.h_b * self.h_m) ** 2 / d_m**4
        return np.where(d_m <= self.crossover, free, ground)


@dataclass(frozen=True)
class OkumuraHataSuburban:
    """Hata urban median loss (small/medium city) minus the suburban correction."""

    freq_mhz: float = 1500.0
    h_b: float = 50.0
    h_m: float = 1.5
    clamp: bool = True

    d_min_km = 1.0
    d_max_km = 20.0

    def loss_db(self, d_km):
        d = _check_distance(d_km)
        if self.clamp:
            d = np.clip(d, self.d_min_km, self.d_max_km)
        elif np.any((d < self.d_min_km) | (d > self.d_max_km)):
            raise DistanceRangeError(
                f"Okumura-Hata is valid on [{self.d_min_km}, {self.d_max_km}] km"
            )
        lf = math.log10(self.freq_mhz)
        lhb = math.log10(self.h_b)
        a_hm = (1.1 * lf - 0.7) * self.h_m - (1.56 * lf - 0.8)
        urban = 69.55 + 26.16 * lf - 13.82 * lhb - a_hm + (44.9 - 6.55 * lhb) * np.log10(d)
        return urban - 2.0 * math.log10(self.freq_mhz / 28.0) ** 2 - 5.4

    def gain(self, d_km):
        return 10.0 ** (-self.loss_db(d_km) / 10.0)


PathLossModel = PowerLaw | FreeSpace | TwoRay | OkumuraHataSuburban


def path_gain(model: PathLossModel, d):
    """1 / PL(d) for distance(s) d in km; scalar in, float out."""
    g = model.gain(d)
    return float(g) if np.ndim(g) == 0 else g


def profile_from_deployment(dep: Deployment, model: PathLossModel) -> EmpiricalProfile:
    if dep.count == 0:
        raise ValueError("deployment has no interferers")
    gains = np.asarray(model.gain(dep.distances), dtype=float)
    # cells are ordered by variance, not by distance
    return EmpiricalProfile(np.sort(gains)[::-1].copy())


def loglog_slope(values: Sequence[float], start: int = 1) -> float:
    """Least-squares slope of log(alpha_ell) against log(ell)."""
    v = np.asarray(values, dtype=float)
    ell = np.arange(start, start + v.size)
    return float(np.polyfit(np.log(ell), np.log(v), 1)[0])


# --- CSV ---------------------------------------------------------------------


def write_profile_csv(path, profile: FadingProfile, n: int | None = None) -> None:
    if n is None:
        if profile.n_cells is None:
            raise ValueError("length required for an analytic profile")
        n = profile.n_cells
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ell", "alpha"])
        for ell in range(1, n + 1):
            w.writerow([ell, f"{profile.alpha(ell):.17g}"])


def read_profile_csv(path) -> EmpiricalProfile:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return empirical_profile([float(r["alpha"]) for r in rows])


def write_deployment_csv(path, dep: Deployment) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ell", "distance_km"])
        for ell, d in enumerate(dep.distances, start=1):
            w.writerow([ell, f"{d:.17g}"])


def read_deployment_distances(path) -> np.ndarray:
    with open(path, newline="") as fh:
        return np.array([float(r["distance_km"]) for r in csv.DictReader(fh)])
