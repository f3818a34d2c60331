import os
import subprocess
import sys

import numpy as np
import pytest

from hbspectra import _backend
from hbspectra.spectral import ConvergenceError, eigenvalues_symmetric


def backend_in_subprocess(**env):
    proc = subprocess.run([sys.executable, "-c", "import hbspectra; print(hbspectra.BACKEND)"],
                          capture_output=True, text=True, env={**os.environ, **env}, check=True)
    return proc.stdout.strip()


def test_pure_python_override():
    assert backend_in_subprocess(HBSPECTRA_PURE_PYTHON="1") == "python"


def test_default_prefers_compiled():
    expected = "cython" if "cython" in _backend.available() else "python"
    assert backend_in_subprocess(HBSPECTRA_PURE_PYTHON="") == expected


def test_unknown_backend():
    with pytest.raises(ValueError):
        _backend.get("fortran")


def test_sweep_cap_raises(backend):
    rng = np.random.default_rng(0)
    a = rng.normal(size=(40, 40))
    with pytest.raises(ConvergenceError):
        eigenvalues_symmetric(a + a.T, backend=backend, max_sweeps=1)


def test_kernels_report_sweeps(backend):
    kern = _backend.get(backend)
    eig, sweeps, off = kern.jacobi_eigenvalues(np.diag([3.0, 1.0, 2.0]), 1e-13, 100)
    assert sorted(eig) == [1.0, 2.0, 3.0]
    assert off == 0.0 and sweeps <= 1
