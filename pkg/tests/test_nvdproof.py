import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stbc54.codes import default_phi
from stbc54.nvdproof import (
    _diophantine_scan_numpy,
    _grid_keys_numpy,
    _key_layout,
    b_from_terms,
    bound_case_equal,
    bound_case_unequal,
    decompose,
    det_closed_form,
    det_direct,
    diophantine_gap,
    discriminant,
    equal_sigma_stratum,
    four_square_identity,
    grid_keys,
    grid_triples,
    iter_grid,
    modular_conditions,
    phi_optimality_scan,
    root_moduli,
    verify_nvd,
)

ints10 = st.lists(st.integers(-50, 50), min_size=10, max_size=10)


def test_closed_form_examples():
    e1 = [1] + [0] * 9
    e10 = [0] * 9 + [1]
    assert decompose(e1).sigma1 == 4 and decompose(e1).sigma2 == 0 and decompose(e1).b == 0
    assert det_closed_form(e1) == pytest.approx(16.0, abs=1e-12)
    assert det_closed_form(e10) == pytest.approx(16.0, abs=1e-12)


def test_closed_form_vs_direct(rng):
    n = rng.integers(-3, 4, size=(10_000, 10))
    n = n[np.any(n != 0, axis=1)]
    cf, d = det_closed_form(n), det_direct(n)
    assert np.max(np.abs(cf - d) / np.maximum(d, 1.0)) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(n=ints10, phi=st.floats(0.0, np.pi / 2))
def test_closed_form_any_phi(n, phi):
    cf, d = det_closed_form(n, phi), det_direct(n, phi)
    assert abs(cf - d) <= 1e-9 * max(d, 1.0) * max(1.0, np.max(np.abs(n)) ** 4 / 10)


def test_four_square_examples():
    n = [3, 0, 0, 0, 0, 0, -2, 0, 0, 0]
    a = four_square_identity(n)
    dx1, dx7 = 6, -4
    assert a[4] == dx7 * dx1
    assert np.count_nonzero(a) == 1
    assert np.sum(a**2) == dx1**2 * dx7**2
    assert not four_square_identity(np.zeros(10, dtype=int)).any()


@settings(max_examples=500, deadline=None)
@given(n=ints10)
def test_four_square_identity_exact(n):
    d = decompose(n)
    assert sum(v * v for v in d.a) == d.sigma1 * d.sigma2
    assert d.b == 2 * (d.sigma1 * d.sigma2 - 2 * sum(v * v for v in d.a[:3]))


def test_four_square_sweep(rng):
    n = rng.integers(-1000, 1001, size=(100_000, 10))
    a = four_square_identity(n)
    s1 = np.sum((2 * n[:, :6]) ** 2, axis=1)
    s2 = np.sum((2 * n[:, 6:]) ** 2, axis=1)
    assert a.dtype == np.int64
    assert np.all(np.sum(a**2, axis=1) - s1 * s2 == 0)


def test_discriminant_examples(rng):
    assert discriminant([1, 0, 0, 0, 0, 0, 0, 0]) == 0
    assert discriminant([0, 0, 0, 1, 0, 0, 0, 0]) == 0
    n = rng.integers(-5, 6, size=(100_000, 10))
    assert np.all(discriminant(four_square_identity(n)) <= 0)


@settings(max_examples=100, deadline=None)
@given(n=ints10)
def test_root_moduli(n):
    d = decompose(n)
    if d.sigma2 == 0:
        with pytest.raises(ValueError):
            root_moduli(n)
        return
    if discriminant(d.a) < 0:
        m = root_moduli(n)
        assert np.allclose(m, d.sigma1 / d.sigma2, rtol=1e-6)


def test_iter_grid():
    rows = np.concatenate(list(iter_grid(1, dim=3, chunk=5)))
    assert len(rows) == 26
    assert len({tuple(r) for r in rows}) == 26


def test_bound_case_unequal():
    res = bound_case_unequal(1)
    assert res.min_det >= 16 - 1e-6
    assert res.min_gap_sq >= 16
    assert res.chain_holds
    assert res.argmin_direct == pytest.approx(res.min_det, rel=1e-9)
    assert res.min_det_sigma1_zero == pytest.approx(16.0)
    assert res.min_det_sigma2_zero == pytest.approx(16.0)


def test_equal_stratum_matches_filter():
    fast = {tuple(r) for r in equal_sigma_stratum(1)}
    slow = set()
    for g in iter_grid(1):
        s1 = np.sum(g[:, :6] ** 2, axis=1)
        s2 = np.sum(g[:, 6:] ** 2, axis=1)
        slow |= {tuple(r) for r in g[s1 == s2]}
    assert fast == slow


def test_bound_case_equal():
    res = bound_case_equal(1)
    assert res.min_det > 16
    assert res.max_closed_vs_direct <= 1e-9
    assert res.reduction_holds
    assert res.min_form_gap >= 2
    n = np.array([1, 0, 0, 0, 0, 0, 1, 0, 0, 0])
    assert det_direct(n) > 16


def test_bound_case_equal_detuned_is_report_only():
    res = bound_case_equal(1, phi=np.pi / 4)
    assert not res.reduction_holds
    assert np.isfinite(res.min_det)


def test_diophantine_examples():
    f = lambda x: abs(3 * x[0] ** 2 - 5 * (x[1] ** 2 + x[2] ** 2 + x[3] ** 2))
    assert f((1, 0, 0, 0)) == 3
    assert f((3, 2, 1, 0)) == 2
    res = diophantine_gap(50)
    assert res.min_abs == 2 and res.forbidden_hits == 0
    assert f(res.argmin) == 2
    with pytest.raises(ValueError):
        diophantine_gap(0)


def test_diophantine_brute_force_small():
    best = min(
        abs(3 * a * a - 5 * (b * b + c * c + d * d))
        for a, b, c, d in itertools.product(range(-8, 9), repeat=4)
        if any((a, b, c, d))
    )
    assert best == diophantine_gap(8).min_abs == 2
    assert _diophantine_scan_numpy(8)[0] == 2


def test_modular_conditions():
    assert (-3 * 5 * 5 * 5) % 8 == 1
    assert (3 - 5 - 5 - 5) % 8 == 4
    assert all(modular_conditions().values())


def test_grid_triples_small():
    t = grid_triples(1)
    brute = set()
    for g in iter_grid(1):
        d = decompose_rows(g)
        brute |= d
    assert {tuple(r) for r in t} == brute


def decompose_rows(g):
    from stbc54.nvdproof import four_square_terms, sigmas

    dx = 2 * g
    s1, s2 = sigmas(dx)
    b = b_from_terms(four_square_terms(dx))
    return set(zip(s1.tolist(), s2.tolist(), b.tolist()))


def test_grid_keys_backends_agree():
    layout = _key_layout(2)
    a = grid_keys(2, 1000, 50_000, *layout)
    b = _grid_keys_numpy(2, 1000, 50_000, *layout)
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        _key_layout(40)


def test_phi_scan_small():
    scan = phi_optimality_scan(np.linspace(0.01, 1.5, 30), n_max=1)
    assert scan.ceiling_holds and scan.optimum_attained
    assert phi_optimality_scan([0.0], n_max=1).minima[0] < 16
    assert scan.phi_star == pytest.approx(default_phi())


def test_verify_nvd_report():
    rep = verify_nvd(1, 20, samples=2000)
    assert rep.passed
    text = rep.format()
    assert text.splitlines()[-1] == "RESULT: PASS"
    assert "FAIL" not in text
