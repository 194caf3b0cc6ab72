import math

import numpy as np
import pytest

from photongun.emitter import EmitterParams, ExcitationConfig, SaturationParams, detected_rate
from photongun.errors import ConvergenceError, DomainError, SingularGeometryError
from photongun.fitting import (FitResult, SaturationDataset, default_init, extract_rho_curve,
                               fit_noise_curve, fit_saturation, levenberg_marquardt)
from photongun.simulator import DetectionChain, SimConfig, simulate_stream
from photongun.statistics import bin_trace, expected_noise_ratio, noise_ratio_measured

# tau_p = tau_r puts rho(200 pJ) at 0.9926 for E_s = 1.5 pJ
TRUE = SaturationParams(R_0=10200.0, E_s=1.5, alpha=5.5, tau_p=1e-8, tau_r=1e-8)
E_GRID = np.geomspace(0.05, 200.0, 20)


def dataset(params=TRUE, noise_seed=None, t=1.0, **kw):
    rate = detected_rate(E_GRID, params)
    if noise_seed is not None:
        rate = np.random.default_rng(noise_seed).poisson(rate * t) / t
    return SaturationDataset(E_GRID, rate, params.tau_p, params.tau_r, **kw)


def rel(a, b):
    return abs(a - b) / abs(b)


def test_noiseless_roundtrip():
    fit = fit_saturation(dataset())
    assert fit.converged
    for name in ("R_0", "E_s", "alpha"):
        assert rel(getattr(fit.params, name), getattr(TRUE, name)) < 1e-6
    assert fit.residual_norm / np.linalg.norm(detected_rate(E_GRID, TRUE)) < 1e-9


def test_fixed_alpha_zero_matches_free_fit():
    clean = SaturationParams(10200.0, 1.5, 0.0, 1e-8, 1e-8)
    free = fit_saturation(dataset(clean))
    fixed = fit_saturation(dataset(clean), fix_alpha=0.0)
    assert fixed.converged and free.converged
    assert rel(fixed.params.R_0, free.params.R_0) < 1e-6
    assert rel(fixed.params.E_s, free.params.E_s) < 1e-6
    assert fixed.params.alpha == 0.0 and fixed.stderr["alpha"] == 0.0


def test_deterministic():
    a = fit_saturation(dataset(noise_seed=3, integration_time=1.0))
    b = fit_saturation(dataset(noise_seed=3, integration_time=1.0))
    assert a == b


def test_scale_equivariance():
    d = dataset(noise_seed=4)
    scaled = SaturationDataset(d.E_p, d.rate * 1e-3, d.tau_p, d.tau_r)
    a, b = fit_saturation(d), fit_saturation(scaled)
    assert rel(b.params.E_s, a.params.E_s) < 1e-6
    assert rel(b.params.R_0, a.params.R_0 * 1e-3) < 1e-6
    assert rel(b.params.alpha, a.params.alpha * 1e-3) < 1e-6


def test_poisson_weights():
    d = dataset(noise_seed=1, integration_time=2.0)
    assert np.allclose(d.weights(), 2.0 / d.rate)
    assert np.all(dataset().weights() == 1.0)
    w = np.arange(1.0, 21.0)
    assert np.array_equal(dataset(weight=w).weights(), w)


def test_noisy_recovery_95_percent():
    hits = 0
    for seed in range(100):
        fit = fit_saturation(dataset(noise_seed=seed, integration_time=1.0))
        hits += fit.converged and rel(fit.params.R_0, TRUE.R_0) < 0.02
    assert hits >= 95


def test_coverage_of_standard_errors():
    inside = 0
    trials = 200
    for seed in range(1000, 1000 + trials):
        fit = fit_saturation(dataset(noise_seed=seed, integration_time=1.0))
        inside += abs(fit.params.R_0 - TRUE.R_0) <= fit.stderr["R_0"]
    assert abs(inside / trials - 0.68) <= 0.10


def test_default_init_is_reasonable():
    init = default_init(dataset())
    assert init.R_0 == pytest.approx(detected_rate(200.0, TRUE))
    assert 0.2 < init.E_s / TRUE.E_s < 5


def test_dataset_validation():
    with pytest.raises(SingularGeometryError):
        SaturationDataset([1, 2, 3], [1, 2, 3], 1e-8, 1e-8)
    with pytest.raises(DomainError):
        SaturationDataset([1, 1, 2, 3], [1, 2, 3, 4], 1e-8, 1e-8)
    with pytest.raises(DomainError):
        SaturationDataset([-1, 1, 2, 3], [1, 2, 3, 4], 1e-8, 1e-8)
    with pytest.raises(DomainError):
        SaturationDataset([0, 1, 2, 3], [1, 2, 3], 1e-8, 1e-8)
    pts = [(0.1, 10), (0.2, 20), (0.3, 30), (0.4, 40, None)]
    assert SaturationDataset.from_points(pts, 1e-8, 1e-8).weight is None


def test_linear_regime_is_singular():
    E = np.geomspace(1e-4, 1e-3, 10)
    rate = detected_rate(E, TRUE)
    with pytest.raises(SingularGeometryError, match="extend the E_p range"):
        fit_saturation(SaturationDataset(E, rate, TRUE.tau_p, TRUE.tau_r))


def test_lm_flags_nonconvergence():
    def rosen(x):
        return np.array([10 * (x[1] - x[0] ** 2), 1 - x[0]])
    res = levenberg_marquardt(rosen, [-1.2, 1.0], max_iter=2)
    assert not res.converged and "no convergence" in res.message
    res = levenberg_marquardt(rosen, [-1.2, 1.0])
    assert res.converged and np.allclose(res.x, [1, 1], atol=1e-8)


def test_extract_rho_curve():
    fit = fit_saturation(dataset())
    curve = extract_rho_curve(fit, [0.0, 1.0, 200.0])
    assert curve.shape == (3, 2)
    assert curve[0, 1] == 0.0
    # energy where the signal part reaches 0.99 R_0 maps back to rho = 0.99
    from scipy.optimize import brentq
    p = fit.params
    E99 = brentq(lambda e: detected_rate(e, p) - p.alpha * e - 0.99 * p.R_0, 1.0, 1e4, xtol=1e-14)
    assert extract_rho_curve(fit, E99)[0, 1] == pytest.approx(0.99, abs=1e-10)
    bad = FitResult(p, 0.0, {}, False, 500, p, "no convergence")
    with pytest.raises(ConvergenceError):
        extract_rho_curve(bad, [1.0])


def test_strong_drive_rho_at_200pJ():
    shaped = SaturationParams(10200.0, 0.05, 5.5, 13e-12, 1e-8)
    E = np.geomspace(0.5, 200.0, 16)
    fit = fit_saturation(SaturationDataset(E, detected_rate(E, shaped), 13e-12, 1e-8))
    assert extract_rho_curve(fit, [200.0])[0, 1] == pytest.approx(0.99, abs=0.01)


def test_noise_curve_noiseless():
    rho = np.array([0.31, 0.6, 0.8, 0.99])
    pts = np.column_stack([rho, expected_noise_ratio(0.68 * rho, 15.0)])
    fit = fit_noise_curve(pts)
    assert fit.converged and abs(fit.zeta - 0.68) < 1e-8
    pts_bg = np.column_stack([rho, expected_noise_ratio(0.68 * rho, 15.0, 1.1)])
    assert abs(fit_noise_curve(pts_bg, background=1.1).zeta - 0.68) < 1e-8


def test_noise_curve_single_point():
    fit = fit_noise_curve([(0.99, 0.5717)])
    assert fit.zeta == pytest.approx((1 - 0.5717**2) / 0.99, rel=1e-9)
    assert fit.zeta == pytest.approx(0.680, abs=5e-4)
    assert math.isnan(fit.stderr)


def test_noise_curve_errors():
    with pytest.raises(SingularGeometryError):
        fit_noise_curve([(0.0, 1.0), (1e-9, 1.0)])
    with pytest.raises(DomainError):
        fit_noise_curve([(1.2, 0.5)])


def test_noise_curve_from_simulation():
    rows = []
    for rho in (0.31, 0.6, 0.8, 0.99):
        for seed in range(4):
            cfg = SimConfig(EmitterParams(k23=0.0), ExcitationConfig(200, 0.05, 13e-12, 15e3, 10.0),
                            DetectionChain.from_zeta(0.68), seed=seed, rho_override=rho)
            rep = noise_ratio_measured(bin_trace(simulate_stream(cfg)[0], 1e-3, duration=10.0))
            rows.append((rho, rep.ratio))
    fit = fit_noise_curve(rows)
    assert abs(fit.zeta - 0.68) < 3 * fit.stderr
