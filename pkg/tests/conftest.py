import numpy as np
import pytest

from andersonclock import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile every jit kernel once so tests measure algorithm time only."""
    _kernels.warm_up()


def dense_eigenvalues(diagonal):
    """Brute-force oracle: full symmetric diagonalization of the tridiagonal."""
    diagonal = np.asarray(diagonal, dtype=np.float64)
    n = diagonal.shape[0]
    h = np.diag(diagonal)
    if n > 1:
        off = np.ones(n - 1)
        h = h + np.diag(off, 1) + np.diag(off, -1)
    return np.sort(np.linalg.eigvalsh(h))
