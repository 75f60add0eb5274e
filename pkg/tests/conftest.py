import pytest

from loopdetector import DetectorParams, _backend, _kernels_py

_BACKENDS = {"python": _kernels_py}
try:
    from loopdetector import _kernels

    _BACKENDS["cython"] = _kernels
except ImportError:
    pass


@pytest.fixture(params=sorted(_BACKENDS))
def each_backend(request, monkeypatch):
    """Run the test once per available kernel backend."""
    monkeypatch.setattr(_backend, "kernels", _BACKENDS[request.param])
    return request.param


@pytest.fixture
def fig2_params():
    return DetectorParams(t_r=0.72, t_c=0.2, eta=0.8, p_d=0.0, L=50)
