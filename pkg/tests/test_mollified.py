"""Mollifier calibration, coupling parameters, occupation estimator."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from deltagas import geometry, mollified, series
from deltagas.mollified import (
    CouplingParams,
    MollifierSpec,
    epsilon_sweep,
    lambda_from_beta,
    beta_from_lambda,
    mollifier_density,
    mollifier_log_energy,
    occupation_fk_estimate,
)
from deltagas.specfun import DomainError

BUMP = MollifierSpec("smooth_bump", 1.0)
DISK = MollifierSpec("disk_uniform", 1.0)

# frozen from a 40-digit mpmath evaluation of the radial collapse integrals;
# the scipy oracle below reproduces them to its own quadrature accuracy
BUMP_LOG_ENERGY = -0.5798708772425469
BUMP_AMPLITUDE = 2.1435657757922364
LAMBDA_DISK_BETA1 = -0.3659315156584124
LAMBDA_BUMP_BETA1 = -0.6958023929009594


def test_spec_validation():
    with pytest.raises(DomainError):
        MollifierSpec("triangle", 1.0)
    with pytest.raises(DomainError):
        MollifierSpec("smooth_bump", 0.0)
    with pytest.raises(DomainError):
        MollifierSpec("smooth_bump", math.inf)


@pytest.mark.parametrize("spec", [
    BUMP, DISK,
    MollifierSpec("smooth_bump", 0.3),
    MollifierSpec("disk_uniform", 2.5),
])
def test_density_normalized(spec):
    mass, err = quad(
        lambda r: 2.0 * math.pi * r * float(
            mollifier_density(spec, np.array([r, 0.0]))
        ),
        0.0, spec.radius, limit=200,
    )
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_bump_amplitude_golden():
    d0 = float(mollifier_density(BUMP, np.zeros(2)))
    assert d0 == pytest.approx(BUMP_AMPLITUDE * math.exp(-1.0), rel=1e-12)
    half = MollifierSpec("smooth_bump", 0.5)
    assert float(mollifier_density(half, np.zeros(2))) == pytest.approx(
        4.0 * d0, rel=1e-12)


def test_disk_log_energy_closed_form():
    # radial collapse: E = 2 int m(r) log(r) M(r) dr = -1/4 for the unit disk
    assert mollifier_log_energy(DISK) == pytest.approx(-0.25, abs=1e-14)
    assert mollifier_log_energy(MollifierSpec("disk_uniform", 3.0)) == \
        pytest.approx(-0.25 + math.log(3.0), abs=1e-13)


def test_bump_log_energy_against_independent_quadrature():
    amp, _ = quad(lambda r: 2 * math.pi * r * math.exp(-1 / (1 - r * r)),
                  0.0, 1.0, limit=200)
    amp = 1.0 / amp

    def m(r):
        return 2 * math.pi * amp * r * math.exp(-1 / (1 - r * r))

    def outer(r):
        return m(r) * math.log(r) * quad(m, 0.0, r, limit=200)[0]

    oracle = 2.0 * quad(outer, 1e-12, 1.0, limit=200)[0]
    assert oracle == pytest.approx(BUMP_LOG_ENERGY, rel=1e-8)
    assert mollifier_log_energy(BUMP) == pytest.approx(BUMP_LOG_ENERGY,
                                                       rel=1e-12)


def test_log_energy_radius_scaling():
    for kind in ("smooth_bump", "disk_uniform"):
        base = mollifier_log_energy(MollifierSpec(kind, 1.0))
        for radius in (0.25, 1.7):
            scaled = mollifier_log_energy(MollifierSpec(kind, radius))
            assert scaled == pytest.approx(base + math.log(radius),
                                           rel=1e-12, abs=1e-12)


def test_lambda_beta_goldens():
    assert lambda_from_beta(1.0, DISK) == pytest.approx(
        LAMBDA_DISK_BETA1, rel=1e-12)
    assert lambda_from_beta(1.0, BUMP) == pytest.approx(
        LAMBDA_BUMP_BETA1, rel=1e-12)
    # disk value is elementary: -log 2 + gamma - 1/4
    elementary = -math.log(2.0) + 0.5772156649015329 - 0.25
    assert LAMBDA_DISK_BETA1 == pytest.approx(elementary, rel=1e-12)


@pytest.mark.parametrize("spec", [BUMP, DISK, MollifierSpec("smooth_bump", 0.4)])
@pytest.mark.parametrize("beta", [0.1, 1.0, 7.5])
def test_lambda_beta_roundtrip(spec, beta):
    lam = lambda_from_beta(beta, spec)
    assert beta_from_lambda(lam, spec) == pytest.approx(beta, rel=1e-12)


def test_lambda_beta_validation():
    with pytest.raises(DomainError):
        lambda_from_beta(0.0, BUMP)
    with pytest.raises(DomainError):
        lambda_from_beta(math.inf, BUMP)
    with pytest.raises(DomainError):
        beta_from_lambda(math.nan, BUMP)


# ---------------------------------------------------------------------------
# coupling containers


def test_coupling_scalar_broadcast():
    c = CouplingParams.from_betas(3, 2.0)
    assert c.betas.shape == (3,)
    assert np.all(c.betas == 2.0)
    lam = lambda_from_beta(2.0, DEFAULT := c.mollifier)
    assert np.allclose(c.lambdas, lam)
    assert np.all(c.weights == 1.0)


def test_coupling_per_pair_values():
    c = CouplingParams.from_betas(3, [1.0, 2.0, 3.0], weights=[1.0, 2.0, 3.0])
    p31 = geometry.PairIndex(3, 1)
    assert c.slot(p31) == 1
    assert c.beta_for(p31) == 2.0
    assert c.weight_for(p31) == 2.0


def test_coupling_from_lambdas_roundtrip():
    c = CouplingParams.from_lambdas(2, -0.5)
    assert lambda_from_beta(float(c.betas[0]), c.mollifier) == pytest.approx(
        -0.5, abs=1e-12)


def test_coupling_rejects_inconsistent_scales():
    lam = lambda_from_beta(1.0, BUMP)
    CouplingParams(2, np.array([1.0]), np.array([lam]), np.array([1.0]), BUMP)
    with pytest.raises(DomainError):
        CouplingParams(2, np.array([1.0]), np.array([lam + 1e-6]),
                       np.array([1.0]), BUMP)


def test_coupling_rejects_bad_shapes_and_ranges():
    with pytest.raises(DomainError):
        CouplingParams.from_betas(3, [1.0, 2.0])  # needs 3 per-pair values
    with pytest.raises(DomainError):
        CouplingParams.from_betas(2, -1.0)
    with pytest.raises(DomainError):
        CouplingParams.from_betas(2, 1.0, weights=0.0)


# ---------------------------------------------------------------------------
# occupation estimator


PAIR_START = np.array([[0.5, 0.0], [-0.5, 0.0]])


def test_occupation_estimate_validation():
    c = CouplingParams.from_betas(2, 1.0)
    one = series.const_one()
    with pytest.raises(DomainError):
        occupation_fk_estimate(c, PAIR_START, 0.25, one, eps=0.1,
                               h=0.1 * 0.1 / 10.0, n_paths=64, seed=1)
    with pytest.raises(DomainError):
        occupation_fk_estimate(c, PAIR_START, 0.25, one, eps=1.5,
                               h=1e-3, n_paths=64, seed=1)
    with pytest.raises(DomainError):
        occupation_fk_estimate(c, np.zeros((2, 2)), 0.25, one, eps=0.1,
                               h=5e-4, n_paths=64, seed=1)
    with pytest.raises(DomainError):
        occupation_fk_estimate(c, PAIR_START, -1.0, one, eps=0.1,
                               h=5e-4, n_paths=64, seed=1)


def test_occupation_estimate_deterministic():
    c = CouplingParams.from_betas(2, 1.0)
    one = series.const_one()
    a = occupation_fk_estimate(c, PAIR_START, 0.1, one, 0.1, 5e-4, 2048, 42)
    b = occupation_fk_estimate(c, PAIR_START, 0.1, one, 0.1, 5e-4, 2048, 42)
    other = occupation_fk_estimate(c, PAIR_START, 0.1, one, 0.1, 5e-4, 2048, 43)
    assert a.mean == b.mean and a.stderr == b.stderr
    assert a.mean != other.mean


def test_occupation_estimate_accepts_scalar_observable():
    c = CouplingParams.from_betas(2, 1.0)

    def f(state):  # per-configuration, not batched
        return 1.0 if state[0, 0] > state[1, 0] else 0.0

    est = occupation_fk_estimate(c, PAIR_START, 0.1, f, 0.1, 5e-4, 512, 3)
    assert 0.0 < est.mean < 1.0


def test_occupation_estimate_tracks_series_smoke():
    # eps = 0.1 is far from the limit; only a loose agreement is expected
    c = CouplingParams.from_betas(2, 1.0)
    est = occupation_fk_estimate(c, PAIR_START, 0.25, series.const_one(),
                                 eps=0.1, h=5e-4, n_paths=20000, seed=101)
    target = 1.0 + series.term_quadrature_n2(1.0, (0.5, 0.5), 0.25)
    assert abs(est.mean - target) < 0.08
    assert est.stderr < 0.04


def test_disk_and_bump_agree_at_matched_beta():
    # same beta through different mollifiers: estimates should land close
    cb = CouplingParams.from_betas(2, 1.0, mollifier=BUMP)
    cd = CouplingParams.from_betas(2, 1.0, mollifier=DISK)
    eb = occupation_fk_estimate(cb, PAIR_START, 0.25, series.const_one(),
                                0.05, 0.05 ** 2 / 20.0, 20000, 202)
    ed = occupation_fk_estimate(cd, PAIR_START, 0.25, series.const_one(),
                                0.05, 0.05 ** 2 / 20.0, 20000, 202)
    assert abs(eb.mean - ed.mean) < 0.03


def test_epsilon_sweep_rows():
    c = CouplingParams.from_betas(2, 1.0)
    rows = epsilon_sweep(c, PAIR_START, 0.1, series.const_one(),
                         [0.2, 0.1], n_paths=1024, seed=7)
    assert [r["eps"] for r in rows] == [0.2, 0.1]
    for r in rows:
        assert r["h"] == pytest.approx(r["eps"] ** 2 / 20.0)
        assert r["seed"] == 7
        assert r["lambda"] == pytest.approx(LAMBDA_BUMP_BETA1, rel=1e-12)
        assert r["beta"] == 1.0
        assert r["n"] == 1024
    with pytest.raises(DomainError):
        epsilon_sweep(c, PAIR_START, 0.1, series.const_one(), [0.2, 0.1],
                      1024, 7, h_list=[1e-3])
