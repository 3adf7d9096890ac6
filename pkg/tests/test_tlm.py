import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from nwkit.tlm import TlmDataset, control_ratio, fit_tlm

UM = 1e-6


def test_exact_line():
    res = fit_tlm(TlmDataset.from_points([(1 * UM, 300.0), (2 * UM, 400.0), (3 * UM, 500.0)]))
    assert res.resistance_per_length * UM == pytest.approx(100.0, rel=1e-12)
    assert res.contact_resistance == pytest.approx(100.0, rel=1e-12)
    assert res.r_squared == pytest.approx(1.0, abs=1e-12)
    assert res.std_errors["resistance_per_length"] == pytest.approx(0.0, abs=1e-3)
    assert res.mean_resistance == pytest.approx(400.0)
    assert not res.nonphysical_contact


def test_parallel_wires_scale_per_wire():
    L = np.array([1.0, 2.0, 3.0]) * UM
    R = np.array([300.0, 400.0, 500.0]) / 34
    res = fit_tlm(TlmDataset(L, R, n_parallel=34))
    assert res.contact_resistance == pytest.approx(100.0, rel=1e-12)
    assert res.resistance_per_length * UM == pytest.approx(100.0, rel=1e-12)


def test_matches_linregress_with_noise():
    rng = np.random.default_rng(11)
    L = np.linspace(0.5, 5.0, 20) * UM
    R = 150.0 + 80.0 * L / UM + rng.normal(0, 5.0, L.size)
    res = fit_tlm(TlmDataset(L, R))
    ref = stats.linregress(L, R)
    assert res.resistance_per_length == pytest.approx(ref.slope, rel=1e-10)
    assert res.contact_resistance == pytest.approx(ref.intercept / 2, rel=1e-10)
    assert res.r_squared == pytest.approx(ref.rvalue**2, rel=1e-10)
    assert res.std_errors["resistance_per_length"] == pytest.approx(ref.stderr, rel=1e-10)
    assert res.std_errors["contact_resistance"] == pytest.approx(ref.intercept_stderr / 2, rel=1e-10)


def test_monte_carlo_coverage():
    rng = np.random.default_rng(5)
    L = np.linspace(0.5, 5.0, 20) * UM
    hits = 0
    for _ in range(200):
        res = fit_tlm(TlmDataset(L, 200.0 + 100.0 * L / UM + rng.normal(0, 5.0, L.size)))
        z = (res.contact_resistance - 100.0) / res.std_errors["contact_resistance"]
        hits += abs(z) < 2
    assert 0.88 <= hits / 200 <= 0.99


def test_two_points_interpolate():
    res = fit_tlm(TlmDataset([1 * UM, 4 * UM], [120.0, 420.0]))
    assert res.resistance_per_length * UM == pytest.approx(100.0)
    assert res.contact_resistance == pytest.approx(10.0)
    assert math.isnan(res.std_errors["contact_resistance"])
    assert res.r_squared == 1.0


def test_degenerate_and_invalid():
    with pytest.raises(ValueError, match="identical"):
        fit_tlm(TlmDataset([1 * UM] * 3, [100.0, 110.0, 120.0]))
    with pytest.raises(ValueError):
        TlmDataset([1 * UM], [100.0])
    with pytest.raises(ValueError):
        TlmDataset([1 * UM, 2 * UM], [100.0, -1.0])
    with pytest.raises(ValueError):
        TlmDataset([1 * UM, 2 * UM], [100.0, 200.0], n_parallel=0)


def test_flat_resistance():
    res = fit_tlm(TlmDataset([1 * UM, 2 * UM, 3 * UM], [50.0, 50.0, 50.0]))
    assert res.resistance_per_length == 0.0
    assert res.contact_resistance == pytest.approx(25.0)
    assert res.r_squared == 1.0


def test_negative_contact_flagged():
    res = fit_tlm(TlmDataset([1 * UM, 2 * UM, 3 * UM], [50.0, 200.0, 350.0]))
    assert res.contact_resistance == pytest.approx(-50.0)
    assert res.nonphysical_contact


def test_control_ratio():
    ratio, flag = control_ratio(1e4, 1e9)
    assert ratio == pytest.approx(1e5) and flag
    assert control_ratio(1e4, 1e4) == (1.0, False)
    assert control_ratio(1e4, 1e7) == (pytest.approx(1e3), False)
    res = fit_tlm(TlmDataset([1 * UM, 2 * UM, 3 * UM], [300.0, 400.0, 500.0]))
    assert control_ratio(res, 4e7)[0] == pytest.approx(1e5)
    assert control_ratio(1e4, 1e8, threshold=1e4)[1]
    with pytest.raises(ValueError):
        control_ratio(0.0, 1e9)
    with pytest.raises(ValueError):
        control_ratio(1e4, -1.0)


lengths = st.lists(st.floats(0.1, 10.0), min_size=3, max_size=12, unique=True)


@settings(max_examples=60, deadline=None)
@given(
    Ls=lengths,
    rc=st.floats(1.0, 1e4),
    rho=st.floats(1.0, 1e4),
    a=st.floats(0.1, 10.0),
    seed=st.integers(0, 2**16),
)
def test_affine_and_permutation_invariance(Ls, rc, rho, a, seed):
    L = np.array(Ls) * UM
    rng = np.random.default_rng(seed)
    R = 2 * rc + rho * L / UM + rng.normal(0, 0.01 * rc, L.size)
    R = np.abs(R) + 1e-3
    base = fit_tlm(TlmDataset(L, R))
    scaled = fit_tlm(TlmDataset(L, a * R))
    assert scaled.contact_resistance == pytest.approx(a * base.contact_resistance, rel=1e-9, abs=1e-9 * a * rc)
    assert scaled.resistance_per_length == pytest.approx(a * base.resistance_per_length, rel=1e-9, abs=1e-6 * a * rho)
    assert scaled.r_squared == pytest.approx(base.r_squared, abs=1e-9)
    perm = rng.permutation(L.size)
    shuffled = fit_tlm(TlmDataset(L[perm], R[perm]))
    assert shuffled.contact_resistance == pytest.approx(base.contact_resistance, rel=1e-9, abs=1e-9 * rc)
    assert shuffled.resistance_per_length == pytest.approx(base.resistance_per_length, rel=1e-9, abs=1e-6 * rho)
