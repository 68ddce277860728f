import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import simulate_var_reference, stable_var_coeffs
from revar.errors import NumericalError, ValidationError
from revar.rewhitening import colorize, fit_rewhiten, rewhiten
from revar.var_model import fit_var, residuals


def test_white_input(rng):
    E = rng.standard_normal((4, 40000))
    m = fit_rewhiten(E)
    assert np.allclose(m.eigvals_e, 1, atol=0.05)
    # each basis column is close to one coordinate axis
    assert np.all(np.max(np.abs(m.basis_e), axis=0) > 0.5)


def test_planted_covariance(rng):
    E = np.diag([2.0, 1.0]) @ rng.standard_normal((2, 50000))
    m = fit_rewhiten(E)
    assert np.allclose(m.eigvals_e, [4, 1], rtol=0.05)


def test_zero_residuals():
    with pytest.raises(NumericalError, match="degenerate residual covariance"):
        fit_rewhiten(np.zeros((3, 100)))


def test_partial_degeneracy_floors_with_warning(rng):
    z = rng.standard_normal(200)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        m = fit_rewhiten(np.vstack([z, z]))
    assert any("degenerate residual covariance" in str(w.message) for w in rec)
    assert np.all(m.eigvals_e > 0)


def test_too_few_samples(rng):
    with pytest.raises(ValidationError):
        fit_rewhiten(rng.standard_normal((5, 5)))


def test_roundtrip_and_zero(rng):
    E = rng.standard_normal((3, 500)) * [[3], [1], [0.2]]
    m = fit_rewhiten(E)
    back = colorize(m, rewhiten(m, E))
    assert np.linalg.norm(back - E) < 1e-10 * np.linalg.norm(E)
    assert np.all(colorize(m, np.zeros((3, 4))) == 0)


def test_training_residuals_white(rng):
    Z = simulate_var_reference(stable_var_coeffs(rng, 3, 2, 0.8), 5000, rng)
    E = residuals(fit_var(Z, 2), Z)
    m = fit_rewhiten(E)
    W = rewhiten(m, E)
    assert np.max(np.abs(W @ W.T / W.shape[1] - np.eye(3))) < 5 / np.sqrt(E.shape[1])


def test_dimension_mismatch(rng):
    m = fit_rewhiten(rng.standard_normal((3, 50)))
    with pytest.raises(ValidationError):
        rewhiten(m, np.zeros((2, 5)))
    with pytest.raises(ValidationError):
        colorize(m, np.zeros((4, 5)))


@settings(max_examples=40, deadline=None)
@given(r=st.integers(1, 6), n_extra=st.integers(1, 100), seed=st.integers(0, 2**31))
def test_exact_inverse_property(r, n_extra, seed):
    g = np.random.default_rng(seed)
    E = g.standard_normal((r, r)) @ g.standard_normal((r, r + n_extra))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        m = fit_rewhiten(E)
    W = g.standard_normal((r, 7))
    assert np.allclose(rewhiten(m, colorize(m, W)), W, atol=1e-6)
    assert np.max(np.abs(m.basis_e.T @ m.basis_e - np.eye(r))) < 1e-10
