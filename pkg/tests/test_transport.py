import itertools
import math

import numpy as np
import pytest

from chaoskit.dynamics import CoupledRun, Ensemble
from chaoskit.rng import Stream
from chaoskit.transport import (
    DistanceResult,
    Method,
    coupled_sup,
    directional_moment,
    j_functional,
    subsampled_wp,
    wasserstein_1d,
    wp_exact,
    wp_sliced,
)


def _brute_force_wp(a, b, p):
    n = a.shape[0]
    best = math.inf
    for perm in itertools.permutations(range(n)):
        cost = np.mean(np.linalg.norm(a - b[list(perm)], axis=1) ** p)
        best = min(best, cost)
    return best ** (1.0 / p)


def _coupled(xa, va, xb, vb):
    return CoupledRun(
        interacting=Ensemble(xa, va),
        reference=Ensemble(xb, vb),
        pilot=Ensemble(xa, va),
        coupled_stream=Stream(0),
        pilot_stream=Stream(0, 1),
    )


# ---------------------------------------------------------------- wp_exact

def test_exact_zero_on_permuted_multiset():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(17, 3))
    b = a[rng.permutation(17)]
    assert wp_exact(a, b, p=2.0).value == 0.0


def test_exact_1d_two_points():
    # bijections cost 0.5 and 1.0; optimal is 0.5
    res = wp_exact(np.array([[0.0], [1.0]]), np.array([[0.5], [1.5]]), p=1.0)
    assert res.value == pytest.approx(0.5)
    assert res.method == Method.EXACT_ASSIGNMENT


def test_exact_matches_brute_force_small():
    rng = np.random.default_rng(5)
    for trial in range(50):
        n = rng.integers(2, 8)
        p = float(rng.choice([1.0, 2.0, 3.0]))
        a = rng.normal(size=(n, 2))
        b = rng.normal(size=(n, 2))
        assert wp_exact(a, b, p).value == pytest.approx(_brute_force_wp(a, b, p), rel=1e-12)


def test_exact_returns_optimal_bijection():
    rng = np.random.default_rng(9)
    a = rng.normal(size=(6, 2))
    b = rng.normal(size=(6, 2))
    res, perm = wp_exact(a, b, p=2.0, return_assignment=True)
    cost = np.mean(np.linalg.norm(a - b[perm], axis=1) ** 2) ** 0.5
    assert cost == pytest.approx(res.value, rel=1e-12)


def test_exact_rejects_unbalanced_and_oversize():
    with pytest.raises(ValueError, match="unbalanced not supported"):
        wp_exact(np.zeros((3, 2)), np.zeros((4, 2)))
    with pytest.raises(ValueError, match="capped"):
        wp_exact(np.zeros((5000, 2)), np.zeros((5000, 2)))


def test_exact_metric_axioms():
    rng = np.random.default_rng(11)
    n = 6
    for _ in range(300):
        a, b, c = (rng.normal(size=(n, 2)) for _ in range(3))
        dab = wp_exact(a, b, 2.0).value
        dba = wp_exact(b, a, 2.0).value
        dac = wp_exact(a, c, 2.0).value
        dcb = wp_exact(c, b, 2.0).value
        scale = max(dab, dac, dcb, 1e-30)
        assert abs(dab - dba) <= 1e-12 * scale
        assert dab <= dac + dcb + 1e-12 * scale
    # identity of indiscernibles
    a = rng.normal(size=(n, 2))
    assert wp_exact(a, a[::-1], 2.0).value == 0.0
    assert wp_exact(a, a + 1e-3, 2.0).value > 0.0


def test_exact_order_monotone():
    rng = np.random.default_rng(13)
    for _ in range(200):
        a = rng.normal(size=(8, 2))
        b = rng.normal(size=(8, 2))
        assert wp_exact(a, b, 1.0).value <= wp_exact(a, b, 2.0).value + 1e-12


def test_subsampled_wp_tags_metadata():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(5000, 2))
    b = rng.normal(size=(5000, 2))
    res = subsampled_wp(a, b, 1.0, Stream(4), cap=256)
    assert res.subsampled_to == 256
    assert res.value > 0


# ---------------------------------------------------------------- 1-D / sliced

def test_wasserstein_1d_equal_sizes_is_sorted_matching():
    rng = np.random.default_rng(17)
    a = rng.normal(size=400)
    b = rng.normal(size=400)
    direct = np.mean(np.abs(np.sort(a) - np.sort(b)))
    assert wasserstein_1d(a, b, 1.0) == pytest.approx(direct, rel=1e-14)


def test_wasserstein_1d_unequal_sizes_exact():
    # merge construction against a fine common refinement by hand
    a = np.array([0.0, 1.0])          # quantiles: 0 on (0,.5], 1 on (.5,1]
    b = np.array([0.0, 0.0, 3.0])     # 0 on (0,2/3], 3 on (2/3,1]
    # intervals: (0,.5]:|0-0|  (.5,2/3]:|1-0|  (2/3,1]:|1-3|
    expected = 0.5 * 0 + (2 / 3 - 1 / 2) * 1 + (1 / 3) * 2
    assert wasserstein_1d(a, b, 1.0) == pytest.approx(expected, rel=1e-14)


def test_sliced_equals_exact_in_1d():
    rng = np.random.default_rng(19)
    a = rng.normal(size=(256, 1))
    b = rng.normal(size=(256, 1)) + 0.3
    for p in (1.0, 2.0, 3.0):
        sl = wp_sliced(a, b, p=p, n_projections=16, stream=Stream(2))
        ex = wp_exact(a, b, p=p)
        assert abs(sl.value - ex.value) <= 1e-12
        assert sl.stderr <= 1e-12


def test_sliced_zero_on_identical_clouds():
    rng = np.random.default_rng(23)
    a = rng.normal(size=(100, 3))
    res = wp_sliced(a, a.copy(), p=2.0, stream=Stream(3))
    assert res.value == 0.0
    assert res.stderr == 0.0


def test_sliced_within_20pct_of_exact_shifted_gaussians():
    # oracle run: calibrated ratio 0.95 at shift 1.0 (raw would be ~0.67)
    rng = np.random.default_rng(29)
    a = rng.normal(size=(10 ** 4, 2))
    b = rng.normal(size=(10 ** 4, 2))
    b[:, 0] += 1.0
    sl = wp_sliced(a, b, p=2.0, stream=Stream(5))
    ex = wp_exact(a[:1024], b[:1024], p=2.0)
    assert abs(sl.value - ex.value) / ex.value < 0.20


def test_directional_moment_values():
    assert directional_moment(1, 2.0) == pytest.approx(1.0)
    assert directional_moment(2, 2.0) == pytest.approx(0.5)
    assert directional_moment(3, 2.0) == pytest.approx(1.0 / 3.0)
    assert directional_moment(1, 1.0) == pytest.approx(1.0)


# ---------------------------------------------------------------- coupled

def test_coupled_sup_zero_for_identical():
    x = np.zeros((4, 2))
    run = _coupled(x, x, x, x)
    assert coupled_sup(run).value == 0.0
    assert j_functional(run, 0.3, 64) == 0.0


def test_coupled_sup_weighted_formula():
    # single pair, |dX| = 0.1, |dV| = 0.2, ln N = 1 -> 0.3
    n_e = math.e
    run = _coupled(np.array([[0.1, 0.0]]), np.array([[0.2, 0.0]]),
                   np.zeros((1, 2)), np.zeros((1, 2)))
    res = coupled_sup(run, weighted=True, bigN=n_e)
    assert res.value == pytest.approx(0.3)


def test_j_functional_formula_and_clamp():
    # N^delta = 2, ln N = 1, max dX = 0.1, max dV = 0.2 -> 0.2 + 0.4 = 0.6
    run = _coupled(np.array([[0.1, 0.0]]), np.array([[0.2, 0.0]]),
                   np.zeros((1, 2)), np.zeros((1, 2)))
    delta = math.log(2.0)  # e^delta = 2
    assert j_functional(run, delta, math.e) == pytest.approx(0.6)
    huge = _coupled(np.full((1, 2), 50.0), np.full((1, 2), 50.0),
                    np.zeros((1, 2)), np.zeros((1, 2)))
    assert j_functional(huge, 0.3, 64) == 1.0


def test_coupled_sup_dominates_wp_exact():
    rng = np.random.default_rng(31)
    for _ in range(100):
        n = int(rng.integers(2, 30))
        xa, va = rng.normal(size=(2, n, 2))
        xb = xa + 0.1 * rng.normal(size=(n, 2))
        vb = va + 0.1 * rng.normal(size=(n, 2))
        run = _coupled(xa, va, xb, vb)
        sup = coupled_sup(run).value
        za = np.concatenate([xa, va], axis=1)
        zb = np.concatenate([xb, vb], axis=1)
        for p in (1.0, 2.0):
            assert wp_exact(za, zb, p).value <= sup + 1e-12


def test_domination_chain_w1_w2_sup():
    rng = np.random.default_rng(37)
    xa, va = rng.normal(size=(2, 40, 2))
    xb = xa + 0.05 * rng.normal(size=(40, 2))
    vb = va + 0.05 * rng.normal(size=(40, 2))
    run = _coupled(xa, va, xb, vb)
    za = np.concatenate([xa, va], axis=1)
    zb = np.concatenate([xb, vb], axis=1)
    w1 = wp_exact(za, zb, 1.0).value
    w2 = wp_exact(za, zb, 2.0).value
    assert w1 <= w2 <= coupled_sup(run).value


def test_j_below_one_implies_winf_below_cutoff():
    # J < 1 forces N^delta * coupled_sup(weighted) < 1, hence
    # W_inf(mu, nu) < N^(-delta) under the identity coupling
    rng = np.random.default_rng(41)
    delta, bigN = 0.3, 256
    nd = bigN ** delta
    for _ in range(200):
        n = int(rng.integers(1, 20))
        xa, va = rng.normal(size=(2, n, 2))
        xb = xa + 10 ** rng.uniform(-4, -1) * rng.normal(size=(n, 2))
        vb = va + 10 ** rng.uniform(-4, -1) * rng.normal(size=(n, 2))
        run = _coupled(xa, va, xb, vb)
        j = j_functional(run, delta, bigN)
        if j < 1.0:
            assert nd * coupled_sup(run, weighted=True, bigN=bigN).value < 1.0
            winf_identity = np.max(np.linalg.norm(
                np.concatenate([xa - xb, va - vb], axis=1), axis=1))
            assert winf_identity < bigN ** (-delta)


def test_distance_result_rejects_negative():
    with pytest.raises(ValueError):
        DistanceResult(-1.0, Method.SLICED, 1.0)
