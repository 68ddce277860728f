import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_series
from revar.errors import FormatError, ValidationError
from revar.io_model import (
    MODEL_MAGIC,
    ReVarModelFile,
    load_model,
    load_series,
    read_container,
    save_model,
    save_series,
    write_container,
)
from revar.longrange import empty_bank
from revar.pipeline import fit_revar
from revar.rewhitening import RewhitenModel
from revar.series import Geometry, WavefrontSeries, circular_mask
from revar.var_model import VarModel
from revar.whitening import WhiteningModel


def assert_series_identical(a: WavefrontSeries, b: WavefrontSeries):
    assert a.frames.tobytes() == b.frames.tobytes()
    assert np.array_equal(a.mask, b.mask)
    assert a.dt == b.dt and a.dx == b.dx
    assert a.label == b.label
    assert a.meta == b.meta


def test_zero_series_single_frame(tmp_path):
    s = WavefrontSeries(np.zeros((1, 2, 2)), np.ones((2, 2), bool), 1e-3, 1e-3)
    path = tmp_path / "zero.wfs"
    save_series(s, path)
    raw = path.read_bytes()
    # header + 4 zero doubles + 4 mask bytes
    assert raw.endswith(b"\x00" * 32 + b"\x01" * 4)
    back = load_series(path)
    assert back.n_frames == 1
    assert np.all(back.frames == 0)


def test_random_series_roundtrip(tmp_path, rng):
    s = random_series(rng, T=16, n=8, masked=False)
    save_series(s, tmp_path / "a.wfs")
    assert_series_identical(s, load_series(tmp_path / "a.wfs"))


def test_circular_mask_roundtrip(tmp_path, rng):
    s = random_series(rng, T=5, n=16, masked=True, label="F06 é\nline")
    s.meta["note"] = {"x": 0.1}
    save_series(s, tmp_path / "m.wfs")
    back = load_series(tmp_path / "m.wfs")
    assert_series_identical(s, back)
    assert not back.mask.all()


@settings(max_examples=30, deadline=None)
@given(
    T=st.integers(1, 6),
    H=st.integers(2, 7),
    W=st.integers(2, 7),
    dt=st.floats(1e-9, 1e3),
    dx=st.floats(1e-9, 1e3),
    seed=st.integers(0, 2**32 - 1),
)
def test_series_roundtrip_property(tmp_path_factory, T, H, W, dt, dx, seed):
    r = np.random.default_rng(seed)
    mask = r.random((H, W)) > 0.3
    frames = r.standard_normal((T, H, W)) * 10.0 ** r.integers(-9, 3)
    s = WavefrontSeries(frames, mask, dt, dx, label=f"s{seed}")
    path = tmp_path_factory.mktemp("rt") / "s.wfs"
    save_series(s, path)
    assert_series_identical(s, load_series(path))


def test_payload_size_mismatch(tmp_path, rng):
    s = random_series(rng, T=3, n=4, masked=False)
    path = tmp_path / "s.wfs"
    save_series(s, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(FormatError, match="payload size mismatch"):
        load_series(path)
    path.write_bytes(raw.replace(b"T: 3", b"T: 4"))
    with pytest.raises(FormatError, match="payload size mismatch"):
        load_series(path)
    path.write_bytes(raw + b"\x00")
    with pytest.raises(FormatError, match="payload size mismatch"):
        load_series(path)


def test_declared_dims_disagree_with_block(tmp_path):
    # block dims product x 8 must equal the block byte count
    path = tmp_path / "bad.wfs"
    write_container(path, b"REVARWFS", {"T": 1, "H": 2, "W": 2}, [("frames", np.zeros((1, 2, 2)))])
    raw = path.read_bytes().replace(b"f8 1,2,2 0 32", b"f8 1,2,2 0 24")
    path.write_bytes(raw[:-8])
    with pytest.raises(FormatError, match="payload size mismatch"):
        read_container(path, b"REVARWFS")


def test_bad_magic_and_version(tmp_path, rng):
    s = random_series(rng, T=2, n=4)
    path = tmp_path / "s.wfs"
    save_series(s, path)
    raw = path.read_bytes()
    path.write_bytes(b"NOTMAGIC" + raw[8:])
    with pytest.raises(FormatError, match="unknown magic"):
        load_series(path)
    path.write_bytes(raw.replace(b"version: 1", b"version: 7"))
    with pytest.raises(FormatError, match="unknown format version"):
        load_series(path)
    path.write_bytes(raw.replace(b"\nT: 2", b"\nT= 2"))
    with pytest.raises(FormatError, match="malformed header"):
        load_series(path)


def test_non_finite_in_mask_rejected(tmp_path):
    path = tmp_path / "nan.wfs"
    frames = np.zeros((2, 3, 3))
    frames[1, 1, 2] = np.nan
    mask = np.ones((3, 3), np.uint8)
    header = {"T": 2, "H": 3, "W": 3, "dt": "0.1", "dx": "0.1", "label": '""'}
    write_container(path, b"REVARWFS", header, [("frames", frames), ("mask", mask)])
    with pytest.raises(FormatError, match=r"frame 1, pixel \(1, 2\)"):
        load_series(path)
    # the same value outside the mask is ignored
    mask[1, 2] = 0
    write_container(path, b"REVARWFS", header, [("frames", frames), ("mask", mask)])
    assert load_series(path).frames[1, 1, 2] == 0.0


def test_missing_file_names_path(tmp_path):
    with pytest.raises(FormatError, match="nope.wfs"):
        load_series(tmp_path / "nope.wfs")


def test_series_invariants():
    with pytest.raises(ValidationError):
        WavefrontSeries(np.zeros((1, 1, 4)), np.ones((1, 4), bool), 1.0, 1.0)
    with pytest.raises(ValidationError):
        WavefrontSeries(np.zeros((1, 2, 2)), np.ones((2, 2), bool), 0.0, 1.0)
    with pytest.raises(ValidationError):
        WavefrontSeries(np.full((1, 2, 2), np.inf), np.ones((2, 2), bool), 1.0, 1.0)
    mask = np.array([[True, False], [True, True]])
    s = WavefrontSeries(np.ones((1, 2, 2)), mask, 1.0, 1.0)
    assert s.frames[0, 0, 1] == 0.0


def _identity_model(r=3):
    mask = np.ones((2, 2), bool)
    mask[0, 0] = False
    P = 3
    return ReVarModelFile(
        whitening=WhiteningModel(np.zeros(P), np.eye(P)[:, :r], np.ones(r)),
        var=VarModel(np.zeros((1, r, r))),
        rewhiten=RewhitenModel(np.eye(r), np.ones(r)),
        geometry=Geometry(mask, 1e-3, 1e-3),
        longrange=empty_bank(16),
        metadata={"seed": 1},
        label="identity",
    )


def assert_models_identical(a: ReVarModelFile, b: ReVarModelFile):
    pairs = [
        (a.whitening.mu, b.whitening.mu),
        (a.whitening.basis, b.whitening.basis),
        (a.whitening.eigvals, b.whitening.eigvals),
        (a.var.coeffs, b.var.coeffs),
        (a.rewhiten.basis_e, b.rewhiten.basis_e),
        (a.rewhiten.eigvals_e, b.rewhiten.eigvals_e),
    ]
    for x, y in pairs:
        assert x.shape == y.shape and x.tobytes() == y.tobytes()
    assert np.array_equal(a.geometry.mask, b.geometry.mask)
    assert a.geometry.dt == b.geometry.dt and a.geometry.dx == b.geometry.dx
    assert a.metadata == b.metadata and a.label == b.label
    if a.longrange is None:
        assert b.longrange is None
    else:
        assert a.longrange.n_target == b.longrange.n_target
        assert a.longrange.amplitude.tobytes() == b.longrange.amplitude.tobytes()
        for x, y in [(a.longrange.src_freqs, b.longrange.src_freqs), (a.longrange.src_psd, b.longrange.src_psd)]:
            assert (x is None and y is None) or x.tobytes() == y.tobytes()


def test_identity_model_roundtrip(tmp_path):
    m = _identity_model()
    save_model(m, tmp_path / "m.rvm")
    assert_models_identical(m, load_model(tmp_path / "m.rvm"))


def test_fitted_model_roundtrip(tmp_path, rng):
    from revar.demo import PlantedConfig, planted_series

    s = planted_series(PlantedConfig(n=12, n_frames=1500, seed=3))
    m = fit_revar(s)
    assert m.longrange.k_modes > 0
    save_model(m, tmp_path / "fit.rvm")
    assert_models_identical(m, load_model(tmp_path / "fit.rvm"))


def test_inconsistent_rank_rejected(tmp_path):
    m = _identity_model()
    with pytest.raises(ValidationError, match="inconsistent rank"):
        ReVarModelFile(m.whitening, VarModel(np.zeros((1, 2, 2))), m.rewhiten, m.geometry)
    # corrupt a stored block on disk: VAR block declared as 2 x 2
    path = tmp_path / "m.rvm"
    save_model(m, path)
    header, blocks = read_container(path, MODEL_MAGIC)
    blocks["var_coeffs"] = np.zeros((1, 2, 2))
    write_container(path, MODEL_MAGIC, {k: v for k, v in header.items() if k != "version"}, list(blocks.items()))
    with pytest.raises(FormatError, match="inconsistent rank"):
        load_model(path)


def test_model_version_mismatch(tmp_path):
    path = tmp_path / "m.rvm"
    save_model(_identity_model(), path)
    path.write_bytes(path.read_bytes().replace(b"version: 1", b"version: 2"))
    with pytest.raises(FormatError, match="version"):
        load_model(path)


def test_circular_mask_helper():
    m = circular_mask(16)
    assert m[8, 8] and not m[0, 0]
    assert np.array_equal(m, m.T) and np.array_equal(m, m[::-1])
