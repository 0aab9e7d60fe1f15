import numpy as np
import pytest


class DenseOp:
    """Minimal block-apply adapter around an explicit Hermitian matrix."""

    def __init__(self, mat):
        self.mat = np.asarray(mat, dtype=complex)
        self.dimension = self.mat.shape[0]

    def apply_block(self, V):
        return self.mat @ V

    def apply(self, v):
        return self.mat @ v


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, dim):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_orthonormal_block(rng, dim, width):
    M = rng.standard_normal((dim, width)) + 1j * rng.standard_normal((dim, width))
    Q, _ = np.linalg.qr(M)
    return Q


def random_hermitian(rng, dim):
    M = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (M + M.conj().T)
