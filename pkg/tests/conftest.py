import numpy as np
import pytest

from doorscape import kernels

BACKENDS = sorted(kernels.BACKENDS)

# criterion number -> (passed, title, detail, seconds), filled by test_acceptance
ACCEPTANCE_RESULTS = {}


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    impl = kernels.get_backend(request.param)
    for name in ("edt", "ridge_mask", "thin", "rasterize"):
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param


def brute_force_edt(occ):
    """Squared distance and lexicographically smallest nearest obstacle, by exhaustion."""
    obs = np.argwhere(occ)  # row-major order
    h, w = occ.shape
    rr, cc = np.mgrid[:h, :w]
    rr, cc = rr.ravel(), cc.ravel()
    best = np.full(h * w, np.iinfo(np.int64).max, dtype=np.int64)
    wit = np.zeros(h * w, dtype=np.int64)
    for start in range(0, len(obs), 256):
        chunk = obs[start:start + 256]
        d = (rr[:, None] - chunk[None, :, 0]) ** 2 + (cc[:, None] - chunk[None, :, 1]) ** 2
        i = d.argmin(axis=1)
        m = d[np.arange(len(i)), i]
        better = m < best
        best[better] = m[better]
        wit[better] = start + i[better]
    return best.reshape(h, w), obs[wit, 0].reshape(h, w), obs[wit, 1].reshape(h, w)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, title, detail, secs = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(
            f"{'PASS' if ok else 'FAIL'}  criterion {n}: {title} ({detail}) [{secs:.2f} s]"
        )
