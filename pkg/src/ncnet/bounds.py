"""Closed-form capacity bounds for the noncoherent bursty multi-cell channel.

All values are in nats; ``BoundReport.bits`` converts. The upper bounds hold
when consecutive interferer variances satisfy alpha_{l+1} / alpha_l >= rho.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Iterable, Sequence

import numpy as np

from . import mc
from .fading import ExponentialProfile, FadingProfile
from .special import EULER_GAMMA, binary_entropy

LN2 = math.log(2.0)
# slack on the noise-level test so exact equalities survive rounding
NOISE_TEST_REL_SLACK = 1e-12
MAX_LP = 10_000_000


@dataclass(frozen=True)
class NetworkConfig:
    n_T: int = 1
    n_R: int = 1
    delta: float = 1.0
    sigma2: float = 1.0
    P: float = 1.0

    def __post_init__(self):
        if int(self.n_T) != self.n_T or self.n_T < 1:
            raise ValueError(f"n_T must be an integer >= 1, got {self.n_T!r}")
        if int(self.n_R) != self.n_R or self.n_R < 1:
            raise ValueError(f"n_R must be an integer >= 1, got {self.n_R!r}")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta!r}")
        if not self.sigma2 > 0.0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2!r}")
        if not self.P >= 0.0:
            raise ValueError(f"P must be nonnegative, got {self.P!r}")

    @property
    def snr(self) -> float:
        return self.P / self.sigma2

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown NetworkConfig keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundReport:
    nats: float
    terms: dict[str, float]
    params_echo: dict = field(default_factory=dict)

    @property
    def bits(self) -> float:
        return self.nats / LN2


@dataclass(frozen=True)
class LowerBoundPoint:
    xi: float
    L_P: int
    value_nats: float
    loglog_P: float
    P: float | None = None
    flagged: bool = False

    @property
    def clamped_nats(self) -> float:
        return max(0.0, self.value_nats)

    @property
    def value_bits(self) -> float:
        return self.value_nats / LN2


def _report(terms: dict[str, float], params: dict) -> BoundReport:
    return BoundReport(nats=math.fsum(terms.values()), terms=terms, params_echo=params)


def eta_max(alpha1: float, rho: float) -> float:
    if not alpha1 > 0.0:
        raise ValueError(f"alpha1 must be positive, got {alpha1!r}")
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho!r}")
    return max(1.0 / alpha1, 1.0 / rho)


def _interference_free_terms(cfg: NetworkConfig, rho: float, alpha1: float) -> dict[str, float]:
    eta = eta_max(alpha1, rho)
    n_R = cfg.n_R
    w = 1.0 - (1.0 - cfg.delta) ** cfg.n_T
    return {
        "gamma_term": w * (math.log(math.pi) - math.log(n_R) - math.lgamma(n_R)),
        "nr_log_nr_over_e": w * n_R * (math.log(n_R) - 1.0),
        "half_log_eta_max": w * 0.5 * n_R * math.log(eta),
        "log_one_plus_eta_max": w * n_R * math.log1p(eta),
    }


def _log_rho_three_halves(rho: float) -> float:
    return -1.5 * math.log(rho)


def theorem1_upper_bound(cfg: NetworkConfig, rho: float, alpha1: float | None = None) -> BoundReport:
    """Power-independent capacity upper bound (nats per channel use).

    ``alpha1`` defaults to ``rho``, which makes eta_max = 1 / rho.
    """
    alpha1 = rho if alpha1 is None else alpha1
    terms = {
        "burstiness": cfg.n_R * ((2.0 - cfg.delta) ** cfg.n_T - 1.0) * _log_rho_three_halves(rho),
        **_interference_free_terms(cfg, rho, alpha1),
    }
    params = {**cfg.to_dict(), "rho": rho, "alpha1": alpha1, "eta_max": eta_max(alpha1, rho)}
    return _report(terms, params)


def corollary1_upper_bound(cfg: NetworkConfig, rho: float, alpha1: float | None = None) -> BoundReport:
    """Upper bound on the capacity restricted to exchangeable input laws."""
    alpha1 = rho if alpha1 is None else alpha1
    terms = {
        "burstiness": cfg.n_R * cfg.n_T * (1.0 - cfg.delta) * _log_rho_three_halves(rho),
        **_interference_free_terms(cfg, rho, alpha1),
    }
    params = {**cfg.to_dict(), "rho": rho, "alpha1": alpha1, "eta_max": eta_max(alpha1, rho)}
    return _report(terms, params)


# --- activity-pattern averaging -------------------------------------------------


def jinterfering_prob_thm(j: int, delta: float) -> float:
    """Probability that an interfering cell's active set contains a given set of size j."""
    if j < 1:
        raise ValueError("j must be >= 1")
    return delta**j


def binomial_pmf(k: int, n: int, delta: float) -> float:
    return math.comb(n, k) * delta**k * (1.0 - delta) ** (n - k)


def jinterfering_prob_cor(j: int, n_T: int, delta: float) -> float:
    """Pr[G >= j] for G ~ Bin(n_T, delta), by direct summation."""
    if not 1 <= j <= n_T:
        raise ValueError(f"need 1 <= j <= n_T, got j={j}, n_T={n_T}")
    return math.fsum(binomial_pmf(k, n_T, delta) for k in range(j, n_T + 1))


def binomial_ratio_sum(n_T: int, delta: float) -> float:
    """sum_j Pr[G = j] (1 - Pr[G >= j]) / Pr[G >= j]; never exceeds n_T (1 - delta)."""
    return math.fsum(
        binomial_pmf(j, n_T, delta)
        * (1.0 - jinterfering_prob_cor(j, n_T, delta))
        / jinterfering_prob_cor(j, n_T, delta)
        for j in range(1, n_T + 1)
    )


def upsilon(p: float, n_R: int, rho: float, alpha1: float | None = None) -> float:
    """Per-activity-set limit of the averaged bound for J-interfering probability p."""
    alpha1 = rho if alpha1 is None else alpha1
    eta = eta_max(alpha1, rho)
    return (
        n_R * (1.0 - p) / p * _log_rho_three_halves(rho)
        + math.log(math.pi) - math.log(n_R) - math.lgamma(n_R)
        + n_R * (math.log(n_R) - 1.0)
        + 0.5 * n_R * math.log(eta)
        + n_R * math.log1p(eta)
    )


def averaged_upper_bound(
    cfg: NetworkConfig, rho: float, alpha1: float | None = None, exchangeable: bool = False
) -> float:
    """sum_j C(n_T, j) delta^j (1-delta)^(n_T-j) Upsilon(p_j), summed term by term.

    With ``exchangeable`` the cell-level probability is the binomial tail and
    the result is the intermediate bound before the n_T (1 - delta) step.
    """
    n_T, d = cfg.n_T, cfg.delta
    total = []
    for j in range(1, n_T + 1):
        p = jinterfering_prob_cor(j, n_T, d) if exchangeable else jinterfering_prob_thm(j, d)
        total.append(binomial_pmf(j, n_T, d) * upsilon(p, cfg.n_R, rho, alpha1))
    return math.fsum(total)


# --- residual interference and L_P --------------------------------------------


def residual_power(profile: FadingProfile, L: int, P: float) -> float:
    """P * sum_{l > L} alpha_l."""
    return P * profile.tail_sum(L)


def below_noise(profile: FadingProfile, L: int, P: float, sigma2: float) -> bool:
    return residual_power(profile, L, P) <= sigma2 * (1.0 + NOISE_TEST_REL_SLACK)


def min_LP(profile: FadingProfile, P: float, sigma2: float) -> int:
    """Smallest L >= 0 with P * sum_{l > L} alpha_l <= sigma2."""
    if not P > 0.0 or not sigma2 > 0.0:
        raise ValueError("P and sigma2 must be positive")

    def ok(L):
        return below_noise(profile, L, P, sigma2)

    if ok(0):
        return 0
    if profile.n_cells is not None:
        lo, hi = 0, profile.n_cells
    else:
        lo, hi = 0, 1
        while not ok(hi):
            lo, hi = hi, 2 * hi
            if hi > MAX_LP:
                raise ValueError("residual interference does not fall below the noise level")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def LP_exponential_ceiling(rho: float, P: float, sigma2: float) -> int:
    """ceil(log(P/sigma2)/log(1/rho) + log(1-rho)/log(rho) - 1), floored at 0."""
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0, 1), got {rho!r}")
    raw = math.log(P / sigma2) / -math.log(rho) + math.log1p(-rho) / math.log(rho) - 1.0
    nearest = round(raw)
    L = nearest if abs(raw - nearest) < 1e-9 else math.ceil(raw)
    return max(0, int(L))


def LP_exponential_closed_form(rho: float, P: float, sigma2: float) -> int:
    """Closed-form L_P for alpha_l = rho**l, reconciled against the direct tail test."""
    L = LP_exponential_ceiling(rho, P, sigma2)
    profile = ExponentialProfile(rho)
    while L > 0 and below_noise(profile, L - 1, P, sigma2):
        L -= 1
    while not below_noise(profile, L, P, sigma2):
        L += 1
    return L


def _loglog(P: float | None, loglog_P: float | None) -> float:
    if loglog_P is not None:
        return float(loglog_P)
    if P is None:
        raise ValueError("give P or loglog_P")
    if P > 1.0:
        return math.log(math.log(P))
    return -math.inf if P == 1.0 else math.nan


def _shifted_loglog(loglog_P: float, shift: float) -> float:
    """log(log P + shift) given log log P, without forming log P when it overflows."""
    if loglog_P < 700.0:
        inner = math.exp(loglog_P) + shift
        return math.log(inner) if inner > 0.0 else -math.inf
    return loglog_P + math.log1p(shift * math.exp(-loglog_P))


def lemma1_threshold(a: float, P: float | None = None, sigma2: float = 1.0, *, loglog_P: float | None = None) -> float:
    """(log log((P/sigma2) e^-a / (1 - e^-a)))^(1/a); -inf when the log-log is <= 0."""
    if not a >= 1.0:
        raise ValueError("a must be >= 1")
    log_c = -a - math.log1p(-math.exp(-a))
    shift = log_c - math.log(sigma2)
    if loglog_P is None:
        if P is None or not P > 0.0:
            raise ValueError("P must be positive")
        inner = math.log(P) + shift
        ll = math.log(inner) if inner > 0.0 else -math.inf
    else:
        ll = _shifted_loglog(loglog_P, shift)
    if not ll > 0.0:
        return -math.inf
    return ll ** (1.0 / a)


def LP_double_exponential(a: float, P: float | None = None, sigma2: float = 1.0, *, loglog_P: float | None = None) -> int:
    """Smallest integer strictly above the double-exponential threshold (at least 1)."""
    x = lemma1_threshold(a, P, sigma2, loglog_P=loglog_P)
    if x == -math.inf:
        return 1
    # near-integer thresholds are rounded up, which only makes L larger
    return max(1, math.floor(x + 1e-9) + 1)


# --- bursty signaling lower bound ---------------------------------------------


def rate_floor(loglog_P: float, sigma: float) -> float:
    return loglog_P - EULER_GAMMA - 1.0 - 2.0 * math.log1p(math.sqrt(2.0) * sigma)


def theorem2_lower_bound(
    cfg: NetworkConfig, xi: float, L_P: int, P: float | None = None, *, loglog_P: float | None = None
) -> LowerBoundPoint:
    """delta xi (1 - delta xi)^L_P (log log P - gamma - 1 - 2 log(1 + sqrt(2) sigma)).

    ``P`` defaults to ``cfg.P``. Powers too large for a float can be given as
    ``loglog_P``. For P <= e the raw value is kept and ``flagged`` is set.
    """
    if not 0.0 < xi <= 1.0:
        raise ValueError(f"xi must lie in (0, 1], got {xi!r}")
    if L_P < 0:
        raise ValueError("L_P must be >= 0")
    if P is None and loglog_P is None:
        P = cfg.P
    ll = _loglog(P, loglog_P)
    q = cfg.delta * xi
    value = q * (1.0 - q) ** L_P * rate_floor(ll, cfg.sigma)
    return LowerBoundPoint(xi=xi, L_P=int(L_P), value_nats=value, loglog_P=ll, P=P, flagged=not ll > 0.0)


def default_xi_grid(n: int = 200) -> np.ndarray:
    return np.logspace(-6.0, 0.0, n)


def theorem2_optimized(
    cfg: NetworkConfig,
    profile: FadingProfile,
    P: float | None = None,
    xi_grid: Sequence[float] | None = None,
) -> LowerBoundPoint:
    """Theorem 2 maximised over a xi grid, with L_P = min_LP(profile, P, sigma2)."""
    P = cfg.P if P is None else P
    L = min_LP(profile, P, cfg.sigma2)
    grid = default_xi_grid() if xi_grid is None else xi_grid
    points = [theorem2_lower_bound(cfg, float(x), L, P) for x in grid]
    return max(points, key=lambda p: p.value_nats)


def corollary2_xi(a: float, eps: float, P: float | None = None, *, loglog_P: float | None = None) -> float:
    """xi = (log log P)^(-(1 + eps)/a), clamped to (0, 1]."""
    if not a > 1.0:
        raise ValueError(f"a must exceed 1, got {a!r}")
    if not 0.0 < eps < a - 1.0:
        raise ValueError(f"need 0 < eps < a - 1, got eps={eps!r}")
    ll = _loglog(P, loglog_P)
    if not ll > 0.0:
        return 1.0
    return min(1.0, ll ** (-(1.0 + eps) / a))


@dataclass
class Corollary2Series:
    a: float
    eps: float
    delta: float
    sigma2: float
    loglog_P: np.ndarray
    xi: np.ndarray
    L_P: np.ndarray
    activity_factor: np.ndarray
    lower_bound: np.ndarray
    ratio: np.ndarray

    @property
    def positive(self) -> bool:
        return bool(np.all(self.ratio > 0.0))

    @property
    def sustained(self) -> bool:
        return bool(self.ratio[-1] >= 0.5 * self.ratio[0])

    def rows(self) -> list[dict]:
        return [
            {
                "loglog_P": float(self.loglog_P[i]),
                "xi": float(self.xi[i]),
                "L_P": int(self.L_P[i]),
                "activity_factor": float(self.activity_factor[i]),
                "lower_bound_nats": float(self.lower_bound[i]),
                "ratio": float(self.ratio[i]),
            }
            for i in range(len(self.ratio))
        ]


def double_exponential_loglog_grid(start: float = 10.0, decades: float = 6.0, n: int = 13) -> np.ndarray:
    """log log P values for P = exp(exp(t)), t log-spaced over ``decades`` decades."""
    return np.logspace(math.log10(start), math.log10(start) + decades, n)


def corollary2_growth_check(
    a: float, eps: float, delta: float, sigma2: float, loglog_grid: Sequence[float]
) -> Corollary2Series:
    """Theorem 2 along the Corollary 2 schedule, normalised by delta (log log P)^(1-(1+eps)/a).

    The grid is given as log log P values (powers of interest overflow a float).
    """
    grid = np.asarray(loglog_grid, dtype=float)
    if grid.size < 4 or np.any(np.diff(grid) <= 0.0):
        raise ValueError("need an increasing grid of at least 4 points")
    if not grid[0] > 0.0 or math.log10(grid[-1] / grid[0]) < 6.0 - 1e-12:
        raise ValueError("grid must span at least 6 decades of log log P")
    cfg = NetworkConfig(delta=delta, sigma2=sigma2)
    xi, L, fac, lb, ratio = [], [], [], [], []
    for ll in grid:
        x = corollary2_xi(a, eps, loglog_P=ll)
        Lp = LP_double_exponential(a, sigma2=sigma2, loglog_P=ll)
        pt = theorem2_lower_bound(cfg, x, Lp, loglog_P=ll)
        xi.append(x)
        L.append(Lp)
        fac.append((1.0 - delta * x) ** Lp)
        lb.append(pt.value_nats)
        ratio.append(pt.value_nats / (delta * ll ** (1.0 - (1.0 + eps) / a)))
    return Corollary2Series(
        a, eps, delta, sigma2, grid, np.array(xi), np.array(L), np.array(fac), np.array(lb), np.array(ratio)
    )


# --- Lozano-Heath-Andrews style bounds (Monte Carlo) ---------------------------


@dataclass(frozen=True)
class SampledBound:
    value: float
    std_error: float
    n_samples: int
    seed: int
    rejected: int = 0


Sampler = Callable[[np.random.Generator, int], np.ndarray]


def _check_gains(G) -> np.ndarray:
    G = np.atleast_2d(np.asarray(G, dtype=float))
    if np.any(G < 0.0):
        raise ValueError("gains must be nonnegative")
    if not np.allclose(G.sum(axis=1), 1.0, rtol=0.0, atol=1e-12):
        raise ValueError("each row of the gain matrix must sum to 1")
    return G


def _draw_nonzero(sampler: Sampler, rng, size: int, n_T: int, max_rounds: int = 1000):
    x = np.array(sampler(rng, size), dtype=complex).reshape(size, n_T)
    bad = np.any(x == 0, axis=1)
    rejected = int(bad.sum())
    rounds = 0
    while bad.any():
        rounds += 1
        if rounds > max_rounds:
            raise RuntimeError("sampler keeps producing zero entries")
        idx = np.flatnonzero(bad)
        x[idx] = np.array(sampler(rng, idx.size), dtype=complex).reshape(idx.size, n_T)
        bad[idx] = np.any(x[idx] == 0, axis=1)
        rejected += int(bad.sum())
    return x, rejected


def _chunked(sampler, G, mc_samples, seed, per_sample, chunk_size=mc.DEFAULT_CHUNK):
    n_T = G.shape[1]
    parts, rejected = [], 0
    for i, size in enumerate(mc._chunk_sizes(mc_samples, chunk_size)):
        x, rej = _draw_nonzero(sampler, mc.chunk_rng(seed, i), size, n_T)
        rejected += rej
        v = per_sample(x)
        mean = float(v.mean())
        parts.append((size, mean, float(((v - mean) ** 2).sum())))
    n, mean, m2 = mc.merge_partials(parts)
    return mean, math.sqrt(m2 / (n - 1) / n), rejected


def lozano_upper_bound(G, input_sampler: Sampler, mc_samples: int, seed: int) -> SampledBound:
    """-sum_r E[log(X^H G_r X)] with G_r = diag(row r of G)."""
    G = _check_gains(G)
    if mc_samples < 2:
        raise ValueError("mc_samples must be >= 2")

    def per_sample(x):
        return -np.log((np.abs(x) ** 2) @ G.T).sum(axis=1)

    mean, se, rej = _chunked(input_sampler, G, mc_samples, seed, per_sample)
    return SampledBound(mean, se, mc_samples, int(seed), rej)


def lozano_bursty_upper_bound(
    cfg: NetworkConfig, G, input_sampler: Sampler, mc_samples: int, seed: int
) -> SampledBound:
    """Upper bound on I(X;Y) when each user is active with probability delta.

    The expectation of log(|X_u|^2 g_{r,u}) is minimised over u for every
    receive antenna r, then the minimising entries are averaged per sample.
    """
    if not cfg.P > 0.0:
        raise ValueError("P must be positive")
    G = _check_gains(G)
    if G.shape[0] != cfg.n_R or G.shape[1] != cfg.n_T:
        raise ValueError(f"gain matrix must be {cfg.n_R}x{cfg.n_T}")
    with np.errstate(divide="ignore"):
        logG = np.log(G)

    def log_terms(x):
        # shape (samples, n_R, n_T)
        return np.log(np.abs(x) ** 2)[:, None, :] + logG[None, :, :]

    # first pass: per-(r, u) means decide the minimising user for each r
    sums = np.zeros(G.shape)
    for i, size in enumerate(mc._chunk_sizes(mc_samples, mc.DEFAULT_CHUNK)):
        x, _ = _draw_nonzero(input_sampler, mc.chunk_rng(seed, i), size, cfg.n_T)
        sums += log_terms(x).sum(axis=0)
    u_star = np.argmin(sums / mc_samples, axis=1)
    rows = np.arange(cfg.n_R)

    def per_sample(x):
        return log_terms(x)[:, rows, u_star].sum(axis=1)

    mean, se, rej = _chunked(input_sampler, G, mc_samples, seed, per_sample)
    off = (1.0 - cfg.delta) ** cfg.n_T
    value = (
        cfg.n_R * off * math.log(cfg.P)
        + cfg.n_T * binary_entropy(cfg.delta)
        + cfg.n_R * math.log1p(1.0 / cfg.P)
        - (1.0 - off) * mean
    )
    return SampledBound(value, (1.0 - off) * se, mc_samples, int(seed), rej)


# --- serialization ----------------------------------------------------------------


def report_row(report: BoundReport) -> dict:
    row = dict(report.params_echo)
    row["nats"] = report.nats
    row["bits"] = report.bits
    row.update(report.terms)
    return row


def write_sweep_csv(path, reports: Iterable[BoundReport]) -> None:
    rows = [report_row(r) for r in reports]
    if not rows:
        raise ValueError("nothing to write")
    cols = list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([f"{r[c]:.17g}" if isinstance(r[c], float) else r[c] for c in cols])
