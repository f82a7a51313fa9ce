"""Transform matrices M and the spatial <-> hat domain moves of the M-product.

A tensor is stored slice-major: ``Tensor3.data`` has shape ``(p, m, n)`` so the
frontal slice index varies slowest and ``data[i]`` is the ``i``-th frontal slice.
All arithmetic is complex double precision.
"""

from enum import Enum
from numbers import Number
from typing import Iterable, Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict
from scipy.fft import dct

from ..config import settings
from ..core.errors import DimensionMismatchError, SingularTransformError


class TransformKind(str, Enum):
    DFT = "dft"
    DCT_DERIVED = "dct_derived"
    RANDOM_INVERTIBLE = "random_invertible"
    CUSTOM = "custom"


class TransformSpec(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    size: int
    matrix: np.ndarray
    inverse: np.ndarray
    kind: TransformKind
    seed: Optional[int] = None

    def inverse_error(self) -> float:
        return float(np.linalg.norm(self.matrix @ self.inverse - np.eye(self.size)))

    def condition(self) -> float:
        return float(np.linalg.cond(self.matrix))


class Tensor3:
    """Dense third-order complex tensor with dims (m, n, p)."""

    __slots__ = ("_data",)

    def __init__(self, slices: np.ndarray):
        data = np.array(slices, dtype=np.complex128)
        if data.ndim != 3:
            raise DimensionMismatchError(
                f"Tensor3 expects slice-major data of shape (p, m, n), got {data.shape}"
            )
        data.setflags(write=False)
        self._data = data

    @classmethod
    def from_array(cls, array: np.ndarray) -> "Tensor3":
        """Build from an array indexed like the math, ``array[i, j, k] = A(i, j, k)``."""
        array = np.asarray(array)
        if array.ndim != 3:
            raise DimensionMismatchError(f"Expected an (m, n, p) array, got {array.shape}")
        return cls(np.moveaxis(array, 2, 0))

    @classmethod
    def from_slices(cls, slices: Iterable[np.ndarray]) -> "Tensor3":
        return cls(np.stack([np.atleast_2d(np.asarray(s)) for s in slices], axis=0))

    @classmethod
    def zeros(cls, m: int, n: int, p: int) -> "Tensor3":
        return cls(np.zeros((p, m, n), dtype=np.complex128))

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def dims(self) -> Tuple[int, int, int]:
        p, m, n = self._data.shape
        return m, n, p

    shape = dims

    def frontal_slice(self, i: int) -> np.ndarray:
        """Read-only view of A(:, :, i), 0-based."""
        return self._data[i]

    def to_array(self) -> np.ndarray:
        return np.moveaxis(self._data, 0, 2).copy()

    def is_effectively_real(self, rtol: float = 1e-9) -> bool:
        real_norm = np.linalg.norm(self._data.real)
        return bool(np.linalg.norm(self._data.imag) <= rtol * max(real_norm, np.finfo(float).tiny))

    def _check_same_dims(self, other: "Tensor3"):
        if self.dims != other.dims:
            raise DimensionMismatchError(f"Tensor dims differ: {self.dims} vs {other.dims}")

    def __add__(self, other: "Tensor3") -> "Tensor3":
        self._check_same_dims(other)
        return Tensor3(self._data + other._data)

    def __sub__(self, other: "Tensor3") -> "Tensor3":
        self._check_same_dims(other)
        return Tensor3(self._data - other._data)

    def __neg__(self) -> "Tensor3":
        return Tensor3(-self._data)

    def __mul__(self, scalar: Number) -> "Tensor3":
        if not isinstance(scalar, Number):
            return NotImplemented
        return Tensor3(self._data * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar: Number) -> "Tensor3":
        if not isinstance(scalar, Number):
            return NotImplemented
        return Tensor3(self._data / scalar)

    def __repr__(self) -> str:
        m, n, p = self.dims
        return f"Tensor3(m={m}, n={n}, p={p})"


def _build_spec(
    matrix: np.ndarray,
    kind: TransformKind,
    inverse: Optional[np.ndarray] = None,
    cond_bound: Optional[float] = None,
    seed: Optional[int] = None,
) -> TransformSpec:
    matrix = np.array(matrix, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
        raise DimensionMismatchError(f"Transform matrix must be square, got {matrix.shape}")
    p = matrix.shape[0]
    bound = cond_bound if cond_bound is not None else settings.numerics.transform_cond_bound

    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > bound:
        raise SingularTransformError(
            f"Transform matrix of order {p} is numerically singular (cond={cond:.3e} > {bound:.1e})"
        )
    if inverse is None:
        inverse = np.linalg.inv(matrix)
    inverse = np.array(inverse, dtype=np.complex128)

    spec = TransformSpec(size=p, matrix=matrix, inverse=inverse, kind=kind, seed=seed)
    err = spec.inverse_error()
    if err > 1e-10 * p:
        raise SingularTransformError(f"Inverse inconsistency {err:.3e} exceeds {1e-10 * p:.1e}")
    matrix.setflags(write=False)
    inverse.setflags(write=False)
    logger.trace(f"Built {kind.value} transform of order {p}, cond={cond:.3e}")
    return spec


def make_dft(p: int) -> TransformSpec:
    """Unnormalized DFT matrix, M[j, k] = exp(-2*pi*i*j*k/p)."""
    if p < 1:
        raise ValueError(f"Transform order must be positive, got {p}")
    k = np.arange(p)
    matrix = np.exp(-2j * np.pi * np.outer(k, k) / p)
    return _build_spec(matrix, TransformKind.DFT, inverse=matrix.conj().T / p)


def make_m1(p: int) -> TransformSpec:
    """DCT-derived transform M1 = W^{-1} C (I + Z) of the cosine transform product."""
    if p < 1:
        raise ValueError(f"Transform order must be positive, got {p}")
    C = dct(np.eye(p), type=2, norm="ortho", axis=0)
    Z = np.eye(p, k=1)
    W_inv_C = C / C[:, :1]
    matrix = W_inv_C @ (np.eye(p) + Z)
    return _build_spec(matrix, TransformKind.DCT_DERIVED)


def make_random_invertible(p: int, seed: int) -> TransformSpec:
    """Seeded real Gaussian M, resampled until its condition number passes the gate."""
    if p < 1:
        raise ValueError(f"Transform order must be positive, got {p}")
    gate = settings.numerics.random_transform_cond_gate
    attempts = settings.numerics.random_transform_max_attempts
    rng = np.random.default_rng(seed)
    for attempt in range(1, attempts + 1):
        matrix = rng.standard_normal((p, p))
        cond = np.linalg.cond(matrix)
        if cond <= gate:
            if attempt > 1:
                logger.debug(f"Random transform (p={p}, seed={seed}) accepted after {attempt} draws")
            return _build_spec(matrix, TransformKind.RANDOM_INVERTIBLE, seed=seed)
        logger.trace(f"Rejected random transform draw {attempt}: cond={cond:.3e}")
    raise SingularTransformError(
        f"No random transform with cond <= {gate:.1e} after {attempts} attempts (p={p}, seed={seed})"
    )


def make_custom(matrix: np.ndarray) -> TransformSpec:
    return _build_spec(np.asarray(matrix), TransformKind.CUSTOM)


def make_transform(kind: str, p: int, seed: int = 0) -> TransformSpec:
    """CLI-facing factory: ``dft``, ``m1`` or ``random``."""
    if kind == "dft":
        return make_dft(p)
    if kind == "m1":
        return make_m1(p)
    if kind == "random":
        return make_random_invertible(p, seed)
    raise ValueError(f"Unknown transform kind '{kind}' (expected dft, m1 or random)")


def mode3_product(A: Tensor3, B: np.ndarray) -> Tensor3:
    """(A x_3 B)[i, j, l] = sum_s A[i, j, s] * B[l, s]."""
    B = np.asarray(B)
    if B.ndim != 2 or B.shape[1] != A.dims[2]:
        raise DimensionMismatchError(
            f"Mode-3 product needs a matrix with {A.dims[2]} columns, got shape {B.shape}"
        )
    return Tensor3(np.tensordot(B, A.data, axes=([1], [0])))


def _check_size(A: Tensor3, T: TransformSpec):
    if A.dims[2] != T.size:
        raise DimensionMismatchError(
            f"Tensor third dimension {A.dims[2]} does not match transform size {T.size}"
        )


def _fft_path(T: TransformSpec) -> bool:
    return T.kind == TransformKind.DFT and settings.numerics.use_fft_for_dft


def to_hat(A: Tensor3, T: TransformSpec) -> Tensor3:
    _check_size(A, T)
    if _fft_path(T):
        return Tensor3(np.fft.fft(A.data, axis=0))
    return mode3_product(A, T.matrix)


def from_hat(A_hat: Tensor3, T: TransformSpec) -> Tensor3:
    _check_size(A_hat, T)
    if _fft_path(T):
        return Tensor3(np.fft.ifft(A_hat.data, axis=0))
    return mode3_product(A_hat, T.inverse)
