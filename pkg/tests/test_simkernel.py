import math

import numpy as np
import pytest

from ncnet import simkernel as sk
from ncnet.bounds import LP_double_exponential, NetworkConfig, min_LP
from ncnet.fading import double_exponential_profile, exponential_profile
from ncnet.special import EULER_GAMMA, digamma


def power_samples(cfg, profile, L, law, n_bursts, n=64, seed=0):
    return sk.received_power_estimate(sk.sample_channel(cfg, profile, L, law, seed, n, n_bursts))


def test_silent_input_gives_noise_power():
    cfg = NetworkConfig(n_T=2, n_R=3, delta=0.4, sigma2=2.0)
    est = power_samples(cfg, exponential_profile(0.5), 4, sk.Silent(), 400)
    assert est.within(3 * 2.0)


def test_single_user_received_power():
    cfg = NetworkConfig(n_T=1, n_R=2, delta=1.0, sigma2=0.5)
    est = power_samples(cfg, exponential_profile(0.5), 0, sk.ConstantModulus(4.0), 400)
    assert est.within(2 * (4.0 + 0.5))


def test_conditional_power_matches_sample_mean():
    cfg = NetworkConfig(n_T=2, n_R=2, delta=0.5, sigma2=1.0)
    prof = exponential_profile(0.4)
    samples = list(sk.sample_channel(cfg, prof, 3, sk.ConstantModulus(2.0), 7, 256, 300))
    target = np.mean([s.conditional_power(cfg.sigma2) for s in samples])
    est = sk.received_power_estimate(iter(samples))
    assert est.within(target, 4)


def test_channel_shapes_and_determinism():
    cfg = NetworkConfig(n_T=3, n_R=2, delta=0.6)
    prof = exponential_profile(0.5)
    a = list(sk.sample_channel(cfg, prof, 5, sk.Bursty(0.5, 2.0), 11, 10, 3))
    b = list(sk.sample_channel(cfg, prof, 5, sk.Bursty(0.5, 2.0), 11, 10, 3))
    assert len(a) == 3
    s = a[0]
    assert s.y.shape == (10, 2)
    assert s.active_flags.shape == (6, 3)
    assert s.inputs_echo.shape == (6, 10, 3)
    assert s.variances[0] == 1.0 and s.variances[1] == 0.5
    assert np.all(np.isfinite(s.y))
    for x, y in zip(a, b):
        assert np.array_equal(x.y, y.y)
    # only user 1 transmits under the bursty law
    assert np.all(s.inputs_echo[:, :, 1:] == 0)


def test_truncation_bias_reported():
    cfg = NetworkConfig(n_T=2)
    prof = exponential_profile(0.5)
    s = next(sk.sample_channel(cfg, prof, 3, sk.ConstantModulus(8.0), 0, 4))
    assert s.truncation_bias == pytest.approx(2 * 8.0 * 0.5**3)


def test_truncated_interference_below_noise():
    prof = exponential_profile(0.6)
    P, sigma2 = 1e4, 1.0
    L = min_LP(prof, P, sigma2)
    est = sk.interference_power_mc(prof, L + 1, L + 80, P, 200_000, seed=3)
    assert est.mean <= sigma2 + 3 * est.std_error
    exact = P * (prof.tail_sum(L) - prof.tail_sum(L + 80))
    assert est.within(exact)


def test_residual_interference():
    value, ok = sk.residual_interference(exponential_profile(0.5), 3, 8.0, 1.0)
    assert value == pytest.approx(1.0) and ok
    assert sk.residual_interference(exponential_profile(0.5), 0, 1e-9, 1.0)[1]
    for a in (1.0, 1.5, 2.0):
        for e in range(2, 13):
            L = LP_double_exponential(a, 10.0**e)
            assert sk.residual_interference(double_exponential_profile(a), L, 10.0**e, 1.0)[1]


def test_bursty_sampler():
    assert np.all(sk.bursty_input_sampler(3.0, 0.0, seed=1, n=100) == 0)
    on = []
    seed = 0
    while sum(x.size for x in on) < 1_000_000:
        x = sk.bursty_input_sampler(6.0, 1.0, seed=seed, n=100_000)
        on.append(x)
        seed += 1
    x = np.concatenate(on)
    assert np.all(np.abs(x) >= 1.0)
    logmag = np.log(np.abs(x))
    se = logmag.std(ddof=1) / math.sqrt(x.size)
    assert abs(logmag.mean() - 3.0) <= 3 * se
    ph = x / np.abs(x)
    se_ph = math.sqrt(0.5 / x.size)
    assert abs(ph.real.mean()) <= 3 * se_ph and abs(ph.imag.mean()) <= 3 * se_ph
    with pytest.raises(ValueError):
        sk.bursty_input_sampler(0.0, 0.5, seed=0, n=10)


def test_bursty_gate_frequency():
    on = [np.any(sk.bursty_input_sampler(1.0, 0.3, seed=s, n=4) != 0) for s in range(20_000)]
    assert abs(np.mean(on) - 0.3) <= 4 * math.sqrt(0.21 / 20_000)


def test_rate_floor():
    v = sk.single_user_rate_floor(None, 1.0, loglog_P=1.0)
    assert v == pytest.approx(-2.339, abs=1e-3)
    assert sk.single_user_rate_floor(math.exp(math.e), 1.0) == pytest.approx(v)
    P = 1e6
    diff = sk.single_user_rate_floor(10 * P, 0.3) - sk.single_user_rate_floor(P, 0.3)
    assert diff == pytest.approx(math.log(math.log(10 * P) / math.log(P)))
    f = sk.single_user_rate_floor(P, 0.3)
    assert f + EULER_GAMMA + 1 + 2 * math.log(1 + math.sqrt(2) * 0.3) == pytest.approx(math.log(math.log(P)))
    with pytest.raises(ValueError):
        sk.single_user_rate_floor(2.0, 0.0)


def test_exp_log_fading():
    est = sk.verify_exp_log_fading(1_000_000, seed=0)
    assert est.within(-EULER_GAMMA)
    scaled = sk.verify_exp_log_fading(200_000, seed=1, scale=0.1)
    assert scaled.within(math.log(0.1) - EULER_GAMMA)


@pytest.mark.parametrize("n_R", [1, 2, 4])
def test_chi_square_identity(n_R):
    est, exact = sk.chi_square_log_identity(n_R, 1.0, 300_000, seed=n_R)
    assert exact == pytest.approx(digamma(n_R))
    assert est.within(exact)


def test_chi_square_analytic_values():
    assert sk.chi_square_log_identity(1, 1.0, 10, 0)[1] == pytest.approx(-EULER_GAMMA)
    assert sk.chi_square_log_identity(2, 1.0, 10, 0)[1] == pytest.approx(0.42278, abs=1e-5)
    assert sk.chi_square_log_identity(1, 10.0, 10, 0)[1] == pytest.approx(math.log(10) - EULER_GAMMA)


@pytest.mark.parametrize("n_R", [1, 2, 4])
@pytest.mark.parametrize("beta", [0.1, 1.0, 10.0])
def test_cauchy_density_mass(n_R, beta):
    assert sk.cauchy_density_mass(beta, n_R) == pytest.approx(1.0, abs=1e-6)


def test_cauchy_density_plug_in():
    for n_R in (1, 3):
        for beta in (0.5, 2.0):
            g = sk.cauchy_magnitude_density(1.0, beta, n_R)
            assert g == pytest.approx(n_R * math.sqrt(beta) * math.gamma(n_R) / (math.pi ** (n_R + 1) * (1 + beta)))
    assert sk.cauchy_magnitude_density(0.0, 1.0, 2) == math.inf


def test_cauchy_half_cauchy_substitution():
    # u = sqrt(beta) r^n_R turns the radial law into the half-Cauchy 2 / (pi (1 + u^2))
    beta, n_R = 3.0, 2
    for r in (0.2, 0.9, 1.7):
        radial = sk.cauchy_magnitude_density(r, beta, n_R) * sk.sphere_surface(r, n_R)
        du_dr = math.sqrt(beta) * n_R * r ** (n_R - 1)
        u = math.sqrt(beta) * r**n_R
        assert radial / du_dr == pytest.approx(2 / (math.pi * (1 + u * u)), rel=1e-12)


def test_sample_dump_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    y = sk.complex_normal(rng, (5, 3))
    path = tmp_path / "y.bin"
    sk.write_samples_binary(path, y)
    raw = path.read_bytes()
    assert raw[:4] == b"NCSM"
    assert len(raw) == 4 + 8 + 16 + 16 * 15
    assert np.array_equal(sk.read_samples_binary(path), y)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        sk.read_samples_binary(path)


def test_complex_normal_variance():
    rng = np.random.default_rng(1)
    z = sk.complex_normal(rng, 400_000, 2.5)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(2.5, rel=0.01)
    assert abs(np.mean(z.real * z.imag)) < 0.01
