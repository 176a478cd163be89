import pytest

from banachmc import _kernels_py, kernels

try:
    from banachmc import _kernels as _compiled
except ImportError:
    _compiled = None


@pytest.fixture(params=["cython", "python"])
def backend(request, monkeypatch):
    """Run a test under each kernel implementation."""
    if request.param == "cython":
        if _compiled is None:
            pytest.skip("compiled kernels not built")
        impl = _compiled
    else:
        impl = _kernels_py
    monkeypatch.setattr(kernels, "sign_norms", impl.sign_norms)
    monkeypatch.setattr(kernels, "local_basis", impl.local_basis)
    return request.param


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)
