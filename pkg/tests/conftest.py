import numpy as np
import pytest

from deepradon.autodiff import Tensor


def central_difference(fn, arr: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central finite-difference gradient of scalar ``fn()`` w.r.t. ``arr`` (mutated in place)."""
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        up = fn()
        flat[i] = orig - h
        down = fn()
        flat[i] = orig
        gflat[i] = (up - down) / (2 * h)
    return grad


def rel_err(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def check_gradients(build_loss, leaves: list[Tensor], h: float = 1e-4, tol: float = 1e-3):
    """Compare autodiff gradients of ``build_loss()`` against central differences."""
    for t in leaves:
        t.zero_grad()
    build_loss().backward()
    errors = {}
    for t in leaves:
        numeric = central_difference(lambda: build_loss().item(), t.data, h)
        errors[t.name or repr(t)] = rel_err(t.grad, numeric)
    bad = {k: v for k, v in errors.items() if not v <= tol}
    assert not bad, f"gradient mismatch (relative error): {bad}"
    return errors


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance reporting: tests tagged @pytest.mark.criterion(n) roll up into
# one PASS/FAIL line per criterion at the end of the session

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (report.when != "call" and report.passed):
        return
    entry = _CRITERIA.setdefault(mark.args[0], {"ok": True, "notes": []})
    if not report.passed:
        entry["ok"] = False
    notes = getattr(item, "_criterion_notes", None)
    if notes and report.when == "call":
        entry["notes"].extend(notes)


@pytest.fixture
def note(request):
    """Attach a measured value to the criterion line of the running test."""
    request.node._criterion_notes = []
    return request.node._criterion_notes.append


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        entry = _CRITERIA[n]
        status = "PASS" if entry["ok"] else "FAIL"
        detail = "; ".join(entry["notes"])
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {detail}".rstrip())
