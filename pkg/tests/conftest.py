import numpy as np
import pytest

from revar.series import WavefrontSeries, circular_mask


def random_series(rng, T=16, n=8, masked=True, label="rand"):
    mask = circular_mask(n, n / 2 - 0.5) if masked else np.ones((n, n), bool)
    frames = rng.standard_normal((T, n, n)) * 1e-6
    return WavefrontSeries(frames, mask, dt=1e-4, dx=2.5e-3, label=label)


def stable_var_coeffs(rng, r, p, radius=0.8):
    """Random VAR(p) coefficients rescaled so the companion spectral radius is ``radius``."""
    from revar.var_model import VarModel, spectral_radius

    coeffs = rng.standard_normal((p, r, r)) / np.sqrt(r * p)
    rho = spectral_radius(VarModel(coeffs))
    s = radius / rho
    return coeffs * (s ** np.arange(1, p + 1))[:, None, None]


def simulate_var_reference(coeffs, T, rng, burn=500):
    """Plain double loop VAR simulation, independent of revar.var_model.simulate."""
    p, r, _ = coeffs.shape
    z = np.zeros((r, T + burn))
    eps = rng.standard_normal((r, T + burn))
    for t in range(T + burn):
        acc = eps[:, t].copy()
        for i in range(p):
            if t - 1 - i >= 0:
                acc += coeffs[i] @ z[:, t - 1 - i]
        z[:, t] = acc
    return z[:, burn:]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# acceptance criteria append one line each; printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
