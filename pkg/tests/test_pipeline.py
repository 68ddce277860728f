import numpy as np
import pytest

from revar.demo import PlantedConfig, planted_modes, planted_series
from revar.errors import ValidationError
from revar.pipeline import FitConfig, analyze, fit_revar, whiteness_stats
from revar.preprocess import ttp_basis
from revar.series import circular_mask
from revar.var_model import simulate


@pytest.fixture(scope="module")
def planted():
    train = planted_series(PlantedConfig(n=16, n_frames=4000, seed=5))
    return train, fit_revar(train)


def test_planted_modes_orthonormal_and_ttp_free():
    mask = circular_mask(20)
    M = planted_modes(mask)
    assert M.shape[1] == 10
    assert np.max(np.abs(M.T @ M - np.eye(10))) < 1e-12
    assert np.max(np.abs(ttp_basis(mask).T @ M)) < 1e-12


def test_planted_series_is_deterministic():
    a = planted_series(PlantedConfig(n=8, n_frames=50, seed=1))
    b = planted_series(PlantedConfig(n=8, n_frames=50, seed=1))
    assert a.frames.tobytes() == b.frames.tobytes()
    assert np.sqrt(np.mean(a.frames[:, a.mask] ** 2)) == pytest.approx(5e-8)


def test_fit_recovers_rank_and_reports(planted):
    _, model = planted
    assert model.r == 10
    assert model.p == 3
    assert model.metadata["stable"] is True
    assert model.longrange.k_modes == 10


def test_full_chain_whiteness(planted):
    train, model = planted
    W = analyze(model, train)["W"]
    st = whiteness_stats(W)
    assert st.max_cov_error < st.tolerance
    assert st.max_lag1_corr < st.tolerance
    assert st.max_row_mean < 1e-2


def test_self_reconstruction(planted):
    train, model = planted
    out = analyze(model, train)
    Z, E = out["Z"], out["E"]
    p = model.p
    rec = simulate(model.var, E, z_init=Z[:, :p])
    assert np.linalg.norm(rec - Z[:, p:]) < 1e-10 * np.linalg.norm(Z)


def test_auto_order():
    train = planted_series(PlantedConfig(n=10, n_frames=3000, seed=2))
    model = fit_revar(train, FitConfig(order="auto", max_order=5))
    assert 1 <= model.p <= 5
    assert model.metadata["order"] == model.p


def test_transpose_option():
    train = planted_series(PlantedConfig(n=10, n_frames=1200, seed=2))
    model = fit_revar(train, FitConfig(transpose=True, order=2))
    assert np.array_equal(model.geometry.mask, train.mask.T)


def test_config_validation():
    for bad in (
        FitConfig(energy_threshold=0.0),
        FitConfig(order=0),
        FitConfig(order="sometimes"),
        FitConfig(k_modes=-1),
        FitConfig(overlap=1.0),
    ):
        with pytest.raises(ValidationError):
            bad.validate()
