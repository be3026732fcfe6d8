"""Monte Carlo kernel for the multi-cell channel and the analytic identities it relies on.

Channel model per time step k (one burst of n steps):

    Y_k = sum_{l=0}^{L} H_{l,k} X_{l,k} + Z_k

with H_{l,k} an n_R x n_T matrix of i.i.d. circularly-symmetric Gaussians of
variance alpha_l (alpha_0 = 1), X_{l,k} = B_l * Xtilde_{l,k} where the user
activity B_l is drawn once per burst, and Z_k ~ CN(0, sigma2 I).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import integrate

from . import mc
from .bounds import NetworkConfig, below_noise, residual_power
from .fading import FadingProfile
from .mc import McEstimate
from .special import EULER_GAMMA, digamma


def complex_normal(rng: np.random.Generator, shape, var: float | np.ndarray = 1.0) -> np.ndarray:
    """CN(0, var): independent real and imaginary parts of variance var/2."""
    scale = np.sqrt(np.asarray(var, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def uniform_phase(rng: np.random.Generator, shape) -> np.ndarray:
    return np.exp(2j * math.pi * rng.random(shape))


# --- input laws -------------------------------------------------------------------


@dataclass(frozen=True)
class Silent:
    users_per_cell = 0


@dataclass(frozen=True)
class ConstantModulus:
    """Every user sends sqrt(P) e^{j theta} with i.i.d. uniform phases."""

    P: float
    users_per_cell = None  # all n_T users

    def draw(self, rng, n, n_T):
        return math.sqrt(self.P) * uniform_phase(rng, (n, n_T))


@dataclass(frozen=True)
class Bursty:
    """Only user 1 transmits; a Ber(xi) gate per burst, log|X| ~ U[0, P]."""

    xi: float
    P: float
    users_per_cell = 1

    def draw(self, rng, n, n_T):
        x = np.zeros((n, n_T), dtype=complex)
        x[:, 0] = draw_bursty(rng, n, self.P, self.xi)
        return x


InputLaw = Silent | ConstantModulus | Bursty


def draw_bursty(rng: np.random.Generator, n: int, P: float, xi: float) -> np.ndarray:
    gate = rng.random() < xi
    mag = np.exp(P * rng.random(n))
    x = mag * uniform_phase(rng, n)
    return x if gate else np.zeros(n, dtype=complex)


def bursty_input_sampler(P: float, xi: float, seed: int, n: int) -> np.ndarray:
    """One burst of n symbols from the bursty law."""
    if not P > 0.0:
        raise ValueError("P must be positive")
    if not 0.0 <= xi <= 1.0:
        raise ValueError("xi must lie in [0, 1]")
    return draw_bursty(np.random.default_rng(np.random.SeedSequence([int(seed)])), n, P, xi)


def unit_modulus_sampler(n_T: int):
    def draw(rng, size):
        return uniform_phase(rng, (size, n_T))

    return draw


def gaussian_sampler(n_T: int):
    def draw(rng, size):
        return complex_normal(rng, (size, n_T))

    return draw


# --- channel samples --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChannelSample:
    y: np.ndarray  # (n, n_R)
    active_flags: np.ndarray  # (L + 1, n_T) bool
    inputs_echo: np.ndarray  # (L + 1, n, n_T)
    variances: np.ndarray  # (L + 1,) with variances[0] = 1
    truncation_bias: float  # bound on the per-antenna power of cells beyond L

    def conditional_power(self, sigma2: float) -> float:
        """E[||Y||^2 | flags, inputs] averaged over the n time steps."""
        n_R = self.y.shape[1]
        sent = (np.abs(self.inputs_echo) ** 2 * self.active_flags[:, None, :]).sum(axis=2)
        return n_R * (float((self.variances[:, None] * sent).sum(axis=0).mean()) + sigma2)


def sample_channel(
    cfg: NetworkConfig,
    profile: FadingProfile,
    L_trunc: int,
    input_law: InputLaw,
    seed: int,
    n: int,
    n_bursts: int = 1,
) -> Iterator[ChannelSample]:
    """Yield ``n_bursts`` independent bursts of n channel uses each."""
    if L_trunc < 0 or n < 1:
        raise ValueError("need L_trunc >= 0 and n >= 1")
    var = np.concatenate([[1.0], [profile.alpha(ell) for ell in range(1, L_trunc + 1)]])
    users = input_law.users_per_cell
    users = cfg.n_T if users is None else users
    P = getattr(input_law, "P", 0.0)
    bias = users * residual_power(profile, L_trunc, P) if users else 0.0
    for b in range(n_bursts):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), b]))
        cells = L_trunc + 1
        flags = rng.random((cells, cfg.n_T)) < cfg.delta
        if isinstance(input_law, Silent):
            x = np.zeros((cells, n, cfg.n_T), dtype=complex)
        else:
            x = np.stack([input_law.draw(rng, n, cfg.n_T) for _ in range(cells)])
        h = complex_normal(rng, (cells, n, cfg.n_R, cfg.n_T), var[:, None, None, None])
        sent = x * flags[:, None, :]
        y = np.einsum("lkru,lku->kr", h, sent) + complex_normal(rng, (n, cfg.n_R), cfg.sigma2)
        yield ChannelSample(y, flags, x, var, bias)


def received_power_estimate(samples: Iterator[ChannelSample]) -> McEstimate:
    """Mean and SE of ||Y_k||^2 treating bursts as independent replicates."""
    per_burst = np.array([float((np.abs(s.y) ** 2).sum(axis=1).mean()) for s in samples])
    return McEstimate(
        float(per_burst.mean()), float(per_burst.std(ddof=1) / math.sqrt(per_burst.size)), per_burst.size, -1
    )


def interference_power_mc(
    profile: FadingProfile, first_cell: int, last_cell: int, P: float, n_samples: int, seed: int
) -> McEstimate:
    """Per-antenna power of cells first..last, each with one user sending |x|^2 = P."""
    var = np.array([profile.alpha(ell) for ell in range(first_cell, last_cell + 1)])

    def draw(rng, size):
        h = complex_normal(rng, (size, var.size), var)
        x = math.sqrt(P) * uniform_phase(rng, (size, var.size))
        return np.abs((h * x).sum(axis=1)) ** 2

    return mc.estimate(draw, n_samples, seed)


def residual_interference(profile: FadingProfile, L_P: int, P: float, sigma2: float) -> tuple[float, bool]:
    """(P sum_{l > L_P} alpha_l, whether it is at most sigma2)."""
    return residual_power(profile, L_P, P), below_noise(profile, L_P, P, sigma2)


# --- identities -------------------------------------------------------------------


def single_user_rate_floor(P: float | None, sigma: float, *, loglog_P: float | None = None) -> float:
    """log log P - gamma - 1 - 2 log(1 + sqrt(2) sigma), in nats."""
    if not sigma > 0.0:
        raise ValueError("sigma must be positive")
    if loglog_P is None:
        if P is None or not P > 1.0:
            raise ValueError("P must exceed 1")
        loglog_P = math.log(math.log(P))
    return loglog_P - EULER_GAMMA - 1.0 - 2.0 * math.log1p(math.sqrt(2.0) * sigma)


def verify_exp_log_fading(n_samples: int, seed: int, scale: float = 1.0) -> McEstimate:
    """MC estimate of E[log |H|^2] for H ~ CN(0, scale); the exact value is log(scale) - gamma."""

    def draw(rng, size):
        return np.log(np.abs(complex_normal(rng, size, scale)) ** 2)

    return mc.estimate(draw, n_samples, seed)


def chi_square_log_identity(n_R: int, K_scale: float, n_samples: int, seed: int) -> tuple[McEstimate, float]:
    """E[log ||Y||^2] for Y ~ CN(0, K I_{n_R}): MC estimate and log K + digamma(n_R)."""
    if n_R < 1 or not K_scale > 0.0:
        raise ValueError("need n_R >= 1 and K_scale > 0")

    def draw(rng, size):
        y = complex_normal(rng, (size, n_R), K_scale)
        return np.log((np.abs(y) ** 2).sum(axis=1))

    return mc.estimate(draw, n_samples, seed), math.log(K_scale) + digamma(n_R)


def cauchy_magnitude_density(y_norm: float, beta: float, n_R: int) -> float:
    """Density on C^{n_R} whose magnitude (after r -> sqrt(beta) r^{n_R}) is half-Cauchy.

    Returns inf at the origin (integrable singularity).
    """
    if not beta > 0.0 or n_R < 1 or y_norm < 0.0:
        raise ValueError("need beta > 0, n_R >= 1, y_norm >= 0")
    if y_norm == 0.0:
        return math.inf
    log_c = math.log(n_R) + 0.5 * math.log(beta) + math.lgamma(n_R) - (n_R + 1) * math.log(math.pi)
    return math.exp(log_c - n_R * math.log(y_norm)) / (1.0 + beta * y_norm ** (2 * n_R))


def sphere_surface(r: float, n_R: int) -> float:
    """Surface area of the radius-r sphere in C^{n_R} = R^{2 n_R}."""
    return 2.0 * math.pi**n_R * r ** (2 * n_R - 1) / math.gamma(n_R)


def cauchy_density_mass(beta: float, n_R: int) -> float:
    """Radial quadrature of the density over C^{n_R}; should equal 1."""
    knee = beta ** (-1.0 / (2 * n_R))

    def f(r):
        return cauchy_magnitude_density(r, beta, n_R) * sphere_surface(r, n_R) if r > 0 else (
            2.0 * math.sqrt(beta) / math.pi if n_R == 1 else 0.0
        )

    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
    head, _ = integrate.quad(f, 0.0, knee, **opts)
    tail, _ = integrate.quad(f, knee, math.inf, **opts)
    return head + tail


# --- binary sample dumps ----------------------------------------------------------

_MAGIC = b"NCSM"
_VERSION = 1


def write_samples_binary(path, y: np.ndarray) -> None:
    """Little-endian dump: magic, u32 version, u32 ndim, u64 dims, then interleaved re/im f64."""
    y = np.asarray(y, dtype=np.complex128)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, y.ndim))
        fh.write(struct.pack(f"<{y.ndim}Q", *y.shape))
        fh.write(y.astype("<c16").tobytes(order="C"))


def read_samples_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a sample dump")
        version, ndim = struct.unpack("<II", fh.read(8))
        if version != _VERSION:
            raise ValueError(f"unsupported dump version {version}")
        shape = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
        data = np.frombuffer(fh.read(), dtype="<c16")
    return data.reshape(shape).astype(np.complex128)
