"""Complex linear-algebra helpers and seeded random streams.

Thin, checked wrappers over numpy/scipy so the channel and beamforming code
can state their preconditions once and rely on them.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class SingularMatrixError(np.linalg.LinAlgError):
    """Hermitian solve could not meet its residual tolerance."""


class RngStream:
    """Seeded random stream with reproducible, non-overlapping children.

    Identical seeds give identical draw sequences.  ``child(key)`` derives an
    independent sub-stream without advancing this one, so each module can own
    its randomness (environment fading, agent noise, replay sampling) while a
    single integer seed still pins the whole run.
    """

    def __init__(self, seed: int, _seq: np.random.SeedSequence | None = None):
        self.seed = int(seed)
        self._seq = np.random.SeedSequence(self.seed) if _seq is None else _seq
        self.gen = np.random.Generator(np.random.PCG64(self._seq))

    def child(self, key: int) -> "RngStream":
        seq = np.random.SeedSequence(
            entropy=self._seq.entropy,
            spawn_key=self._seq.spawn_key + (int(key),),
        )
        return RngStream(self.seed, seq)

    def state(self) -> dict:
        return self.gen.bit_generator.state

    def set_state(self, state: dict) -> None:
        self.gen.bit_generator.state = state


def cmat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Complex matrix product with an explicit conformability check."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"expected 2-D matrices, got shapes {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def hermitian_solve(
    a: np.ndarray,
    b: np.ndarray,
    loading: float = 1e-12,
    residual_tol: float = 1e-10,
) -> np.ndarray:
    """Solve ``a x = b`` for a Hermitian positive-definite ``a`` via Cholesky.

    A diagonal load of ``loading * trace(a)/n`` is added before factoring so
    nearly rank-deficient Gram matrices (a fully blocked user) stay solvable.
    Raises :class:`SingularMatrixError` when the factorization fails or the
    residual of the loaded system exceeds ``residual_tol * ||b||``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    shift = loading * np.real(np.trace(a)) / n
    loaded = a + shift * np.eye(n)
    try:
        factor = cho_factor(loaded, lower=True, check_finite=False)
        x = cho_solve(factor, b, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(f"Cholesky factorization failed: {exc}") from exc
    residual = np.linalg.norm(loaded @ x - b)
    bound = residual_tol * max(np.linalg.norm(b), np.finfo(float).tiny)
    if not np.isfinite(residual) or residual > bound:
        raise SingularMatrixError(
            f"residual {residual:.3e} exceeds tolerance {bound:.3e}"
        )
    return x


def sample_complex_gaussian(rng: RngStream, rows: int, cols: int) -> np.ndarray:
    """I.i.d. circularly-symmetric complex normal entries, unit variance each.

    Entry = (x + iy)/sqrt(2) with x, y standard normal, so E|entry|^2 = 1.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"rows and cols must be >= 1, got {rows} x {cols}")
    re = rng.gen.standard_normal((rows, cols))
    im = rng.gen.standard_normal((rows, cols))
    return (re + 1j * im) / np.sqrt(2.0)
