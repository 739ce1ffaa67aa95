"""Weighted-rate quantities, alignments, envelopes, and audits."""

import math

import numpy as np
import pytest

from ziclab import hkregion as hk
from ziclab._util import rng_for


def random_psd(rng, d, scale=2.0):
    a = rng.normal(size=(d, d)) * scale
    return a @ a.T / d


# ----------------------------------------------------------------------
# PSD algebra
# ----------------------------------------------------------------------


def test_jacobi_matches_lapack(rng):
    for d in (2, 3, 5):
        for _ in range(20):
            m = random_psd(rng, d)
            vals, vecs = hk.jacobi_eigh(m.copy())
            ref = np.linalg.eigvalsh(m)
            assert np.allclose(vals, ref, atol=1e-10 * max(1, abs(ref).max()))
            assert np.allclose(vecs @ np.diag(vals) @ vecs.T, m, atol=1e-10)
            assert np.allclose(vecs.T @ vecs, np.eye(d), atol=1e-12)


def test_psd_validation():
    with pytest.raises(ValueError):
        hk.PsdMatrix(np.array([[1.0, 0.5], [0.2, 1.0]]))  # not symmetric
    with pytest.raises(ValueError):
        hk.PsdMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]))  # negative eigenvalue
    m = hk.PsdMatrix(np.array([[1.0, 0.0], [0.0, 1e-11]]))
    assert m.eigenvalues.min() >= 0.0


def test_alignment_examples():
    aligned, q = hk.decreasing_alignment(np.diag([1.0, 3.0]))
    assert np.allclose(np.diag(aligned.entries), [3.0, 1.0])
    assert np.allclose(q.T @ np.diag([1.0, 3.0]) @ q, aligned.entries, atol=1e-12)
    already = np.diag([5.0, 2.0, 1.0])
    out, _ = hk.decreasing_alignment(already)
    assert np.allclose(out.entries, already)
    inc, _ = hk.increasing_alignment(already)
    assert np.allclose(np.diag(inc.entries), [1.0, 2.0, 5.0])


def test_alignment_matches_charpoly_roots(rng):
    for _ in range(10):
        m = random_psd(rng, 3)
        aligned, q = hk.decreasing_alignment(m)
        # roots of the characteristic polynomial as an independent oracle
        roots = np.sort(np.roots(np.poly(m)).real)[::-1]
        assert np.allclose(np.diag(aligned.entries), roots, atol=1e-9)
        assert np.allclose(q.T @ m @ q, aligned.entries, atol=1e-9)


def test_lndet_alignment_inequality(rng):
    # decreasing K with increasing L maximizes lndet(K+L) over conjugations
    violations = 0
    for _ in range(500):
        d = int(rng.integers(2, 5))
        k = random_psd(rng, d)
        l = random_psd(rng, d)
        kbar, _ = hk.decreasing_alignment(k)
        lbar, _ = hk.increasing_alignment(l)
        lhs = np.linalg.slogdet(k + l)[1]
        rhs = np.linalg.slogdet(kbar.entries + lbar.entries)[1]
        if lhs > rhs + 1e-10:
            violations += 1
        comm = np.abs(k @ l - l @ k).max()
        if abs(lhs - rhs) <= 1e-9 and comm > 1e-8:
            violations += 1
    assert violations == 0


def test_alignment_preserves_order(rng):
    # K <= K' implies eigenvalue-wise order of the decreasing alignments
    for _ in range(500):
        d = int(rng.integers(2, 5))
        k = random_psd(rng, d)
        bump = random_psd(rng, d, scale=1.0)
        kp = k + bump
        kbar = np.diag(hk.decreasing_alignment(k)[0].entries)
        kpbar = np.diag(hk.decreasing_alignment(kp)[0].entries)
        assert np.all(kbar <= kpbar + 1e-10)


def test_rotation_stationarity_iff_commuting(rng):
    # directional derivative of Q -> lndet(K + Q^T L Q) at Q=I along
    # antisymmetric H vanishes for all H iff K and L commute
    def directional(k, l, h, t=1e-7):
        qp = np.eye(len(k)) + t * h
        qm = np.eye(len(k)) - t * h
        # orthogonalize to first order is enough at t=1e-7
        fp = np.linalg.slogdet(k + qp.T @ l @ qp)[1]
        fm = np.linalg.slogdet(k + qm.T @ l @ qm)[1]
        return (fp - fm) / (2 * t)

    for _ in range(250):
        d = int(rng.integers(2, 4))
        k = random_psd(rng, d)
        h = rng.normal(size=(d, d))
        h = h - h.T
        # commuting pair: polynomial in k
        l_comm = 0.5 * k @ k + 0.3 * k + 0.2 * np.eye(d)
        assert abs(directional(k, l_comm, h)) < 1e-6
    found_nonzero = 0
    for _ in range(250):
        d = int(rng.integers(2, 4))
        k = random_psd(rng, d)
        l = random_psd(rng, d)
        if np.abs(k @ l - l @ k).max() < 1e-8:
            continue
        h = rng.normal(size=(d, d))
        h = h - h.T
        if abs(directional(k, l, h)) > 1e-6:
            found_nonzero += 1
    assert found_nonzero > 200


# ----------------------------------------------------------------------
# scalar objective and capped supremum
# ----------------------------------------------------------------------


def test_gauss_objective_examples():
    # stationary K=(u+L)/(L-1): psi = 2 ln 4 - ln 3 - 2 ln 2 = ln(4/3)
    val = hk.gauss_objective(2.0, 3.0, 1.0, 0.0)
    assert val == pytest.approx(2 * math.log(4) - math.log(3) - 2 * math.log(2), abs=1e-12)
    assert val == pytest.approx(math.log(4.0 / 3.0), abs=1e-12)
    # direct substitution with K=0
    assert hk.gauss_objective(0.0, 0.0, 1.0, 1.0) == pytest.approx(-math.log(2), abs=1e-14)
    # lndet additivity for diagonal matrices
    md = hk.gauss_objective(
        hk.PsdMatrix(np.diag([2.0, 5.0])), hk.PsdMatrix(np.diag([3.0, 1.0])), 1.0, 0.5
    )
    s = hk.gauss_objective(2.0, 3.0, 1.0, 0.5) + hk.gauss_objective(5.0, 1.0, 1.0, 0.5)
    assert md == pytest.approx(s, abs=1e-12)
    assert hk.gauss_objective(0.0, 1.0, 1.0, 0.0) == -math.inf


def test_stationary_value_formula(rng):
    # psi((u+L)/(L-1), L) = (u+1) ln(u+L) - ln L - (u+1) ln(u+1)
    for _ in range(50):
        u = float(rng.uniform(0.3, 4.0))
        L = float(rng.uniform(1.05, 9.0))
        K = (u + L) / (L - 1.0)
        lhs = hk.gauss_objective(K, L, u, 0.0)
        rhs = (u + 1) * math.log(u + L) - math.log(L) - (u + 1) * math.log(u + 1)
        assert lhs == pytest.approx(rhs, abs=1e-12)


def test_capped_argmax_cases():
    val, k = hk.capped_gauss_objective(10.0, 3.0, 1.0, 0.0)
    assert k == 2.0
    val, k = hk.capped_gauss_objective(10.0, 0.5, 1.0, 0.0)
    assert k == 10.0
    val, k = hk.capped_gauss_objective(1.0, 3.0, 1.0, 0.0)
    assert k == 1.0


def test_capped_matrix_commuting_matches_coordinatewise():
    j = hk.PsdMatrix(np.diag([10.0, 1.0]))
    l = hk.PsdMatrix(np.diag([3.0, 0.5]))
    res = hk.capped_gauss_objective_matrix(j, l, 1.0, 0.0)
    v1, k1 = hk.capped_gauss_objective(10.0, 3.0, 1.0, 0.0)
    v2, k2 = hk.capped_gauss_objective(1.0, 0.5, 1.0, 0.0)
    assert res.value == pytest.approx(v1 + v2, abs=1e-10)
    assert np.allclose(np.diag(res.argmax_K.entries), [k1, k2], atol=1e-10)


def test_capped_matrix_gradient_ascent_noncommuting(rng):
    # non-commuting inputs: ascent value must be at least any feasible
    # diagonal-in-J-basis candidate and at most the aligned upper bound
    j = random_psd(rng, 2, scale=2.0) + 2 * np.eye(2)
    theta = 0.7
    r = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    l = r @ np.diag([3.0, 0.6]) @ r.T
    res = hk.capped_gauss_objective_matrix(j, l, 1.0, 0.0)
    lo = hk.gauss_objective(hk.PsdMatrix(0.5 * j), hk.PsdMatrix(l), 1.0, 0.0)
    assert res.value >= lo - 1e-9
    evals = np.linalg.eigvalsh(res.argmax_K.entries)
    jvals = np.linalg.eigvalsh(j - res.argmax_K.entries)
    assert evals.min() >= -1e-9 and jvals.min() >= -1e-9


# ----------------------------------------------------------------------
# fixed-power value and envelope
# ----------------------------------------------------------------------


def test_f1_matches_brute_force_grid():
    params = hk.HKParams(u=1.0, N1=0.5)
    res = hk.fixed_power_value(7.0, 3.0, params)
    js = np.linspace(0, 7.0, 400)
    ls = np.linspace(0, 3.0, 400)
    brute = hk.f1_table(js, ls, params).max()
    assert res.value >= brute - 1e-10
    assert res.value == pytest.approx(brute, abs=1e-4)


def test_f1_monotone_in_powers():
    params = hk.HKParams(u=1.0, N1=0.2)
    vals = np.array(
        [[hk.fixed_power_value(q1, q2, params).value for q2 in (0.5, 1.5, 3.0)]
         for q1 in (0.5, 2.0, 8.0)]
    )
    assert np.all(np.diff(vals, axis=0) >= -1e-12)
    assert np.all(np.diff(vals, axis=1) >= -1e-12)


def test_f1_degenerate_interferer_budget():
    # q2 -> 0 reduces to sup_J ln(J+N1+u) + psi(J, 0)
    params = hk.HKParams(u=1.0, N1=0.3)
    res = hk.fixed_power_value(5.0, 1e-12, params)
    expected = math.log(5.0 + 0.3 + 1.0) + hk.gauss_objective(5.0, 0.0, 1.0, 0.3)
    assert res.value == pytest.approx(expected, abs=1e-6)


def test_f1_vectorized_matches_nested(rng):
    params = hk.HKParams(u=1.3, N1=0.7)
    for _ in range(10):
        q1 = float(rng.uniform(0.2, 20))
        q2 = float(rng.uniform(0.2, 20))
        a = hk.fixed_power_value(q1, q2, params).value
        b = float(hk.f1_table(np.array([q1]), np.array([q2]), params)[0, 0])
        assert a == pytest.approx(b, abs=1e-8)


def test_envelope_majorizes_and_reconstructs():
    params = hk.HKParams(u=1.0, N1=1.0)
    env = hk.power_control_envelope(39.0, 1.2, params, grid_n=129)
    f1 = hk.fixed_power_value(39.0, 1.2, params).value
    assert env.value >= f1 - 1e-9
    assert env.value - f1 > 1e-3  # genuinely gapped cell (power control helps)
    rec = sum(s.weight * s.value for s in env.support)
    assert rec == pytest.approx(env.value, abs=1e-5)
    assert 1 <= len(env.support) <= 3
    weights = sum(s.weight for s in env.support)
    assert weights == pytest.approx(1.0, abs=1e-9)


def test_envelope_equals_f1_where_concave():
    params = hk.HKParams(u=1.0, N1=1.0)
    f1 = hk.fixed_power_value(10.0, 10.0, params).value
    g1 = hk.power_control_value(10.0, 10.0, params, grid_n=129)
    assert g1 == pytest.approx(f1, abs=1e-9)


def test_envelope_grid_too_small():
    params = hk.HKParams(u=1.0, N1=1.0)
    env = hk.envelope_for(39.0, 1.2, params, grid_n=65, margin=4)
    with pytest.raises(hk.GridTooSmallError):
        env.value(39.0, 1.2)


def test_tensorization_spot_checks():
    params = hk.HKParams(u=1.0, N1=1.0)
    pts = [(5.0, 2.0), (10.0, 4.0), (3.0, 1.0), (8.0, 8.0), (2.0, 6.0)]
    for (a, b) in pts:
        g2 = hk.power_control_value_2d(2 * a, 2 * b, params, grid_n=97)
        g1 = hk.power_control_value(a, b, params, grid_n=129)
        assert g2 == pytest.approx(2 * g1, abs=5e-3)


# ----------------------------------------------------------------------
# maximizer bound and audits
# ----------------------------------------------------------------------


def test_bound_value_example():
    params = hk.HKParams(u=3.0, N1=0.0)
    res = hk.maximizer_bound_check(1.5, 4.0, params, grid_n=65)
    assert res.bound == pytest.approx(3.0, abs=1e-12)


def test_case1_cells_have_large_L(rng):
    # applicable uncapped cells force L >= sqrt(u+1)+1
    params = hk.HKParams(u=1.0, N1=0.0)
    env_cache = {}
    found = 0
    for _ in range(60):
        J = float(rng.uniform(3.0, 12.0))
        L = float(rng.uniform(1.1, 8.0))
        if L <= 1 or J <= (params.u + L) / (L - 1.0):
            continue
        try:
            res = hk.maximizer_bound_check(J, L, params, grid_n=65)
        except hk.NotApplicableError:
            continue
        if res.case == 1:
            found += 1
            assert L >= math.sqrt(params.u + 1.0) + 1.0 - 1e-6
    assert found > 0


def test_not_applicable_raises():
    params = hk.HKParams(u=1.0, N1=1.0)
    with pytest.raises(hk.NotApplicableError):
        hk.maximizer_bound_check(39.0, 1.2, params, grid_n=129)


def test_audit_d1_no_violations():
    params = hk.HKParams(u=1.0, N1=0.0)
    rep = hk.eigenvalue_bound_audit(1, params, 30, rng_for(11, "audit-test"), grid_n=129)
    assert rep.violations == 0
    assert rep.applicable > 5


def test_audit_d2_no_violations():
    params = hk.HKParams(u=1.0, N1=0.0)
    rep = hk.eigenvalue_bound_audit(2, params, 6, rng_for(12, "audit2-test"), grid_n=129)
    assert rep.violations == 0


def test_f2_split_beats_symmetric_half():
    params = hk.HKParams(u=1.0, N1=1.0)
    res = hk.fixed_power_value_2d(10.0, 4.0, params)
    half = hk.fixed_power_value(5.0, 2.0, params).value
    assert res.value >= 2 * half - 1e-8


# ----------------------------------------------------------------------
# constant-power comparison
# ----------------------------------------------------------------------


def test_constant_power_gap_positive():
    params = hk.HKParams(u=1.0, N1=1.0, N2=0.05)
    res = hk.constant_power_gap(params)
    assert res.witness_gain > 1e-6
    assert res.slack <= res.witness_gain / 2.0
    assert res.lower_witness > res.gaussian_value
    # e_41 structure: witness >= gaussian + c/2 - slack
    assert res.lower_witness >= res.gaussian_value + res.witness_gain / 2.0 - res.slack - 1e-12


def test_constant_power_gap_large_A_trend():
    params = hk.HKParams(u=1.0, N1=1.0, N2=0.05)
    base = hk.constant_power_gap(params)
    gaps = []
    for mult in (1.0, 8.0, 64.0):
        res = hk.constant_power_gap(params, A=base.mixing_variance * mult)
        gaps.append(res.gap)
    c_half = base.witness_gain / 2.0
    devs = [abs(g - c_half) for g in gaps]
    assert devs[-1] <= devs[0] + 1e-12
    assert devs[-1] < 0.2 * c_half


def test_constant_power_witness_unavailable():
    # N2 so large that the scaled construction has no verified positive gain
    params = hk.HKParams(u=1.0, N1=1.0, N2=50.0)
    with pytest.raises(hk.WitnessUnavailableError):
        hk.constant_power_gap(params)


# ----------------------------------------------------------------------
# power-control footprint map
# ----------------------------------------------------------------------


def test_power_control_map_cells():
    params = hk.HKParams(u=1.0, N1=1.0)
    cells = hk.power_control_map([1.0], [0.0, 1.2, 39.0], params, grid_n=65)
    by_q = {(c.q1, c.q2): c for c in cells}
    gap_cell = by_q[(39.0, 1.2)]
    assert not gap_cell.f1_eq_g1  # power control helps here
    eq_cell = by_q[(39.0, 39.0)]
    assert eq_cell.f1_eq_g1
    # degenerate q2=0 column present and classified
    z = by_q[(1.2, 0.0)]
    assert z.g1 >= z.f1 - 1e-9
    # equality cells with a live interference budget obey the variance
    # bound; q2=0 columns are exempt (no interferer dimension to trade)
    for c in cells:
        if c.f1_eq_g1 and c.q2 > 0:
            assert c.stationary_K + params.N1 <= 1 + math.sqrt(1 + c.u) + 1e-6


def test_gauss_objective_rotation_invariance(rng):
    # conjugating both matrices by the same orthogonal map leaves the
    # log-determinant objective unchanged
    for _ in range(10):
        k = random_psd(rng, 3)
        l = random_psd(rng, 3)
        h = rng.normal(size=(3, 3))
        q, _ = np.linalg.qr(h)
        a = hk.gauss_objective(hk.PsdMatrix(k), hk.PsdMatrix(l), 1.3, 0.4)
        b = hk.gauss_objective(
            hk.PsdMatrix(q.T @ k @ q), hk.PsdMatrix(q.T @ l @ q), 1.3, 0.4
        )
        assert a == pytest.approx(b, abs=1e-10)
