import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fasuav.correlation import (DEFAULT_RANK_THRESHOLD, REFERENCE_RANK_TABLE, EigenModel, JakesConfig,
                                build_jakes, calibrate_rank_threshold, effective_rank, eigen_decompose,
                                feasible_threshold_interval, jacobi_eigh, jakes_eigen_model)
from fasuav.errors import ParameterError


def mp_eigenvalues(matrix, dps=40):
    with mpmath.workdps(dps):
        ev, _ = mpmath.eigsy(mpmath.matrix(matrix.tolist()))
        return sorted((float(x) for x in ev), reverse=True)


def mp_jakes(n, w, dps=40):
    with mpmath.workdps(dps):
        col = [mpmath.besselj(0, 2 * mpmath.pi * k * mpmath.mpf(w) / (n - 1)) for k in range(n)]
        return np.array([[float(col[abs(p - q)]) for q in range(n)] for p in range(n)])


def test_jakes_is_symmetric_toeplitz_with_unit_diagonal():
    j = build_jakes(JakesConfig(8, 1.5))
    assert np.allclose(np.diag(j), 1.0)
    assert np.array_equal(j, j.T)
    for k in range(8):
        assert np.allclose(np.diag(j, k), j[0, k])


def test_jakes_entries_against_mpmath_bessel():
    assert np.allclose(build_jakes(JakesConfig(16, 1.5)), mp_jakes(16, 1.5), rtol=0, atol=1e-14)


def test_two_port_eigenvalues_closed_form():
    # [[1, r], [r, 1]] with r = J0(pi) < 0 has eigenvalues 1 -+ r
    r = float(mpmath.besselj(0, mpmath.pi))
    w, _ = eigen_decompose(build_jakes(JakesConfig(2, 0.5)))
    assert w == pytest.approx([1 - r, 1 + r], abs=1e-14)


@pytest.mark.parametrize("n,w", [(4, 1.0), (8, 1.5), (16, 1.5)])
def test_spectrum_against_high_precision(n, w):
    got, _ = eigen_decompose(build_jakes(JakesConfig(n, w)))
    ref = mp_eigenvalues(mp_jakes(n, w))
    assert got == pytest.approx(ref, abs=1e-13)
    assert got.sum() == pytest.approx(n, rel=1e-13)


def test_reconstruction_and_orthogonality():
    j = build_jakes(JakesConfig(16, 1.5))
    w, v = eigen_decompose(j)
    assert np.allclose(v.T @ v, np.eye(16), atol=1e-12)
    assert np.allclose(v @ np.diag(w) @ v.T, j, atol=1e-12)


@given(arrays(np.float64, (6, 6), elements=st.floats(-5, 5)))
def test_jacobi_on_random_symmetric(a):
    sym = a + a.T
    w, v = jacobi_eigh(sym)
    assert np.all(np.diff(w) <= 1e-12)
    assert np.allclose(v @ np.diag(w) @ v.T, sym, atol=1e-9)
    assert np.allclose(v.T @ v, np.eye(6), atol=1e-10)
    assert np.allclose(w, np.sort(np.linalg.eigvalsh(sym))[::-1], atol=1e-9)


@pytest.mark.parametrize("nw,m", REFERENCE_RANK_TABLE)
def test_rank_table(nw, m):
    model = jakes_eigen_model(*nw)
    assert model.M == m
    assert model.threshold == DEFAULT_RANK_THRESHOLD
    assert len(model.full) == nw[0]


def test_default_threshold_inside_feasible_interval():
    lo, hi = feasible_threshold_interval()
    assert lo < DEFAULT_RANK_THRESHOLD < hi
    assert calibrate_rank_threshold() == pytest.approx(math.sqrt(lo * hi))


def test_infeasible_table_rejected():
    with pytest.raises(ParameterError):
        feasible_threshold_interval((((8, 1.5), 7), ((8, 1.5), 3)))


def test_retained_values_not_renormalised():
    model = effective_rank([2.0, 1.0, 1e-9])
    assert model.eigenvalues == (2.0, 1.0)
    assert model.full == (2.0, 1.0, 1e-9)


def test_rank_monotone_in_threshold():
    w, _ = eigen_decompose(build_jakes(JakesConfig(16, 1.5)))
    ranks = [effective_rank(w, t).M for t in np.logspace(-12, -1, 30)]
    assert all(a >= b for a, b in zip(ranks, ranks[1:]))


@pytest.mark.parametrize("bad", [[], [1.0, 2.0], [0.0, 0.0], [1.0, -0.5]])
def test_effective_rank_errors(bad):
    with pytest.raises(ParameterError):
        effective_rank(bad)


def test_eigen_decompose_errors():
    with pytest.raises(ParameterError):
        eigen_decompose(np.ones((2, 3)))
    with pytest.raises(ParameterError):
        eigen_decompose(np.array([[1.0, 0.5], [0.1, 1.0]]))


@pytest.mark.parametrize("ports,aperture", [(1, 1.0), (2.5, 1.0), (4, 0.0), (4, math.inf)])
def test_jakes_config_errors(ports, aperture):
    with pytest.raises(ParameterError):
        JakesConfig(ports, aperture)


def test_eigen_model_validation():
    assert EigenModel.from_eigenvalues([0.5, 3.0]).eigenvalues == (3.0, 0.5)
    with pytest.raises(ParameterError):
        EigenModel((1.0, 2.0), 0.0)
    with pytest.raises(ParameterError):
        EigenModel((), 0.0)
