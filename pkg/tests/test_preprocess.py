import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_series
from revar.errors import NumericalError, ValidationError
from revar.preprocess import deflection_x, devectorize, remove_ttp, ttp_basis, vectorize
from revar.series import WavefrontSeries, circular_mask


def _grid(n):
    y, x = np.mgrid[0:n, 0:n].astype(float)
    return x, y


def _masked_projections(series):
    """|<res, 1>|, |<res, x>|, |<res, y>| over the mask, relative to ||res||, per frame."""
    ys, xs = np.nonzero(series.mask)
    res = series.frames[:, series.mask]
    norms = np.linalg.norm(res, axis=1)
    out = []
    for b in (np.ones(xs.size), xs.astype(float), ys.astype(float)):
        out.append(np.abs(res @ b) / (norms * np.linalg.norm(b)))
    return np.max(out)


def test_piston_removed():
    mask = circular_mask(12)
    s = WavefrontSeries(np.full((2, 12, 12), 3.7), mask, 1.0, 1.0)
    assert np.max(np.abs(remove_ttp(s).frames)) < 1e-12


def test_plane_removed():
    x, y = _grid(10)
    frames = np.stack([0.3 * x - 1.2 * y + 5.0, -2 * x + 0.1])
    s = WavefrontSeries(frames, circular_mask(10), 1.0, 1.0)
    assert np.max(np.abs(remove_ttp(s).frames)) < 1e-12


def test_random_frame_orthogonal(rng):
    s = random_series(rng, T=4, n=16, masked=True)
    assert _masked_projections(remove_ttp(s)) < 1e-10


def test_idempotent(rng):
    s = remove_ttp(random_series(rng, T=3, n=16))
    twice = remove_ttp(s)
    assert np.linalg.norm(twice.frames - s.frames) <= 1e-12 * np.linalg.norm(s.frames)


def test_energy_does_not_increase(rng):
    s = random_series(rng, T=5, n=12)
    before = np.sum(s.frames**2, axis=(1, 2))
    after = np.sum(remove_ttp(s).frames**2, axis=(1, 2))
    assert np.all(after <= before + 1e-30)


def test_out_of_mask_stays_zero(rng):
    s = remove_ttp(random_series(rng, T=2, n=12))
    assert np.all(s.frames[:, ~s.mask] == 0.0)


def test_degenerate_masks():
    mask = np.zeros((5, 5), bool)
    mask[2, 1:4] = True  # 3 pixels
    with pytest.raises(NumericalError, match="TTP basis singular"):
        ttp_basis(mask)
    mask[2, :] = True  # collinear row
    with pytest.raises(NumericalError, match="TTP basis singular"):
        ttp_basis(mask)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(4, 14), seed=st.integers(0, 2**31), scale=st.floats(1e-9, 1e3))
def test_ttp_orthogonality_property(n, seed, scale):
    r = np.random.default_rng(seed)
    mask = r.random((n, n)) > 0.2
    ys, xs = np.nonzero(mask)
    if xs.size < 4 or np.unique(xs).size < 2 or np.unique(ys).size < 2:
        return
    # skip masks whose pixels are all on one line
    B = np.column_stack([np.ones(xs.size), xs - xs.mean(), ys - ys.mean()])
    if np.linalg.matrix_rank(B) < 3:
        return
    s = WavefrontSeries(r.standard_normal((2, n, n)) * scale, mask, 1.0, 1.0)
    out = remove_ttp(s)
    if np.linalg.norm(out.frames) == 0:
        return
    assert _masked_projections(out) < 1e-10


def test_vectorize_order():
    s = WavefrontSeries(np.array([[[1.0, 2.0], [3.0, 4.0]]]), np.ones((2, 2), bool), 1.0, 1.0)
    pm = vectorize(s)
    assert pm.data[:, 0].tolist() == [1.0, 2.0, 3.0, 4.0]
    assert pm.index_map.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]


def test_vectorize_roundtrip(rng):
    s = random_series(rng, T=7, n=9, masked=True, label="v")
    back = devectorize(vectorize(s), s.geometry, label=s.label)
    assert np.array_equal(back.frames, s.frames)
    assert np.array_equal(back.mask, s.mask)


def test_vectorize_empty_mask():
    s = WavefrontSeries(np.zeros((1, 3, 3)), np.zeros((3, 3), bool), 1.0, 1.0)
    with pytest.raises(ValidationError):
        vectorize(s)


def test_devectorize_row_mismatch(rng):
    s = random_series(rng, T=2, n=6)
    with pytest.raises(ValidationError):
        devectorize(np.zeros((3, 2)), s.geometry)


def test_deflection_linear_ramp():
    dx, a = 2e-3, 0.37
    x, _ = _grid(8)
    frames = np.broadcast_to(a * x * dx, (3, 8, 8)).copy()
    th = deflection_x(WavefrontSeries(frames, np.ones((8, 8), bool), 1.0, dx))
    assert np.allclose(th.frames[:, th.mask], a, rtol=1e-12)
    assert th.mask[:, 1:-1].all() and not th.mask[:, [0, -1]].any()


def test_deflection_zero():
    th = deflection_x(WavefrontSeries(np.zeros((2, 6, 6)), circular_mask(6), 1.0, 1.0))
    assert np.all(th.frames == 0)


def test_deflection_sine_second_order():
    # central-difference error bound |f'''| dx^2 / 6
    errs = []
    for W in (16, 32, 64):
        dx = 1.0 / W
        x, _ = _grid(W)
        frames = np.sin(2 * np.pi * x / W)[None]
        th = deflection_x(WavefrontSeries(frames, np.ones((W, W), bool), 1.0, dx))
        exact = 2 * np.pi * np.cos(2 * np.pi * x / W)  # d/d(x*dx)
        err = np.max(np.abs(th.frames[0][th.mask] - exact[th.mask]))
        assert err <= (2 * np.pi) ** 3 * dx**2 / 6 * 1.0001
        errs.append(err)
    # halving dx quarters the error
    assert 3.5 < errs[0] / errs[1] < 4.5 and 3.5 < errs[1] / errs[2] < 4.5


def test_deflection_mask_shrinks_and_linear(rng):
    a = random_series(rng, T=2, n=10)
    b = random_series(rng, T=2, n=10)
    ta, tb = deflection_x(a), deflection_x(b)
    both = WavefrontSeries(a.frames + 2 * b.frames, a.mask, a.dt, a.dx)
    assert np.allclose(deflection_x(both).frames, ta.frames + 2 * tb.frames)
    assert ta.mask.sum() < a.mask.sum()
    assert ta.label.endswith(":theta_x")


def test_deflection_too_narrow():
    with pytest.raises(ValidationError):
        deflection_x(WavefrontSeries(np.zeros((1, 4, 2)), np.ones((4, 2), bool), 1.0, 1.0))
