"""Small dense multilinear algebra.

Matrices are plain ``numpy`` arrays. Higher-order derivative tensors are
wrapped in :class:`MultilinearMap`, whose axis 0 is the output index and
whose remaining axes are input slots, so ``D2f.entries[i, j, k]`` is
``d^2 f_i / dz_j dz_k``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericalError

__all__ = [
    "I",
    "MultilinearMap",
    "RankTolerance",
    "SpectrumResult",
    "adjugate",
    "as_matrix",
    "contract",
    "determinant",
    "eigenvalues",
    "numerical_rank",
]

MAX_DIM = 10


class _Identity:
    """Marker for an open slot evaluated columnwise against unit vectors."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "I"


I = _Identity()


def as_matrix(M) -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-d array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NumericalError("matrix has non-finite entries")
    return A


def _square(M) -> np.ndarray:
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"square matrix required, got shape {A.shape}")
    return A


@dataclass(frozen=True)
class MultilinearMap:
    """Dense multilinear map ``L(v_1, ..., v_p)`` stored as an array.

    ``entries`` has shape ``(output_dim, *input_dims)``.
    """

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim < 2 or e.ndim > 4:
            raise DimensionError(f"arity must be 2, 3 or 4, got array of ndim {e.ndim}")
        object.__setattr__(self, "entries", e)

    @property
    def arity(self) -> int:
        return self.entries.ndim

    @property
    def output_dim(self) -> int:
        return self.entries.shape[0]

    @property
    def input_dims(self) -> tuple[int, ...]:
        return self.entries.shape[1:]

    def __call__(self, *args):
        """Evaluate with positional slot arguments; ``I`` leaves a slot open."""
        if len(args) > self.arity - 1:
            raise DimensionError(f"map has {self.arity - 1} input slots, got {len(args)} arguments")
        return contract(self, [(k + 1, a) for k, a in enumerate(args)])

    def symmetrized(self) -> "MultilinearMap":
        """Average over all permutations of the input slots."""
        nin = self.arity - 1
        if len(set(self.input_dims)) != 1:
            raise DimensionError("symmetrization needs equal input dimensions")
        perms = list(itertools.permutations(range(1, nin + 1)))
        acc = sum(np.transpose(self.entries, (0, *p)) for p in perms)
        return MultilinearMap(acc / len(perms))


def contract(L, slots):
    """Contract a multilinear map against vectors in selected slots.

    Parameters
    ----------
    L : MultilinearMap or array_like
        Map with output on axis 0.
    slots : sequence of (int, vector or I)
        Slot indices count input slots from 1. ``I`` (or an unmentioned
        slot) stays open, which realises the columnwise evaluation
        ``L(v, I)[:, j] = L(v, e_j)``.

    Returns
    -------
    ndarray or MultilinearMap
        A vector when one axis remains, a matrix for two, otherwise a map.
    """
    A = L.entries if isinstance(L, MultilinearMap) else np.asarray(L, dtype=float)
    vecs = {}
    for slot, v in slots:
        if not 1 <= slot < A.ndim:
            raise DimensionError(f"slot {slot} out of range for arity {A.ndim}")
        if slot in vecs:
            raise DimensionError(f"slot {slot} given twice")
        if v is I:
            continue
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or v.shape[0] != A.shape[slot]:
            raise DimensionError(
                f"slot {slot} expects a vector of length {A.shape[slot]}, got shape {v.shape}"
            )
        vecs[slot] = v
    # contract from the highest axis down so lower indices stay valid
    for slot in sorted(vecs, reverse=True):
        A = np.tensordot(A, vecs[slot], axes=([slot], [0]))
    if A.ndim <= 2:
        return A
    return MultilinearMap(A)


def _det_small(A: np.ndarray) -> float:
    n = A.shape[0]
    if n == 1:
        return float(A[0, 0])
    if n == 2:
        return float(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])
    return float(
        A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
        - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
        + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0])
    )


def determinant(M) -> float:
    """Cofactor expansion up to 3x3, pivoted LU above."""
    A = _square(M)
    if A.shape[0] <= 3:
        return _det_small(A)
    return float(np.linalg.det(A))


def _minor(A, i, j):
    return np.delete(np.delete(A, i, axis=0), j, axis=1)


def _adjugate_cofactor(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    adj = np.empty_like(A)
    for i in range(n):
        for j in range(n):
            adj[j, i] = (-1) ** (i + j) * determinant(_minor(A, i, j))
    return adj


def adjugate(M, tol: float = 1e-10) -> np.ndarray:
    """Transposed cofactor matrix, with ``adj([[a]]) = [[1]]``.

    Explicit cofactors are used up to 4x4. Larger matrices use
    ``det(M) * inv(M)`` unless ``|det|`` is below ``tol`` times the scale
    ``||M||^n``, in which case cofactors are used again.
    """
    A = _square(M)
    n = A.shape[0]
    if n == 1:
        return np.ones((1, 1))
    if n <= 4:
        return _adjugate_cofactor(A)
    d = determinant(A)
    scale = max(np.max(np.abs(A)), 1e-300) ** n
    if abs(d) > tol * scale:
        return d * np.linalg.inv(A)
    return _adjugate_cofactor(A)


@dataclass(frozen=True)
class RankTolerance:
    absolute: float = 1e-10
    relative: float = 1e-8

    def threshold(self, sigma_max: float) -> float:
        return self.absolute + self.relative * sigma_max


def singular_values(M) -> np.ndarray:
    return np.linalg.svd(as_matrix(M), compute_uv=False)


def numerical_rank(M, tol: RankTolerance | None = None) -> int:
    tol = tol or RankTolerance()
    s = singular_values(M)
    smax = float(s[0]) if s.size else 0.0
    return int(np.count_nonzero(s > tol.threshold(smax)))


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    tolerance_used: float = 0.0

    def pairs(self) -> list[list[float]]:
        """Eigenvalues as ``[re, im]`` pairs, the serialised form."""
        return [[float(z.real), float(z.imag)] for z in self.eigenvalues]

    def __len__(self):
        return len(self.eigenvalues)


def _eig2(A: np.ndarray) -> np.ndarray:
    a, b, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    half_tr = 0.5 * (a + d)
    # discriminant written to avoid cancellation when a ~ d
    disc = (0.5 * (a - d)) ** 2 + b * c
    if disc >= 0:
        s = np.sqrt(disc)
        big = half_tr + np.copysign(s, half_tr) if half_tr != 0 else s
        det = a * d - b * c
        other = det / big if big != 0 else half_tr - s
        return np.array([big, other], dtype=complex)
    s = np.sqrt(-disc)
    return np.array([half_tr + 1j * s, half_tr - 1j * s])


def _sort_spectrum(w: np.ndarray) -> np.ndarray:
    return w[np.lexsort((-w.imag, w.real))]


def eigenvalues(M) -> SpectrumResult:
    """All eigenvalues with multiplicity, sorted by real then imaginary part."""
    A = _square(M)
    n = A.shape[0]
    if n > MAX_DIM:
        raise DimensionError(f"eigenvalues supports dim <= {MAX_DIM}, got {n}")
    if n == 1:
        w = np.array([A[0, 0]], dtype=complex)
    elif n == 2:
        w = _eig2(A)
    else:
        try:
            w = np.linalg.eigvals(A).astype(complex)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"QR iteration failed: {exc}") from exc
        # enforce exact conjugate symmetry for real input
        real = np.abs(w.imag) <= 1e-14 * max(1.0, float(np.max(np.abs(w))))
        w[real] = w[real].real
    return SpectrumResult(_sort_spectrum(w), tolerance_used=np.finfo(float).eps * n)
