"""Brute-force reference computations on the block-diagonal representation.

Nothing here goes through the QR or hyperpower paths: blocks are produced by a
dense einsum with M, and every inverse is built from per-block SVDs. Used by the
tests and the CLI verification mode only.
"""

from typing import List, Tuple

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict

from ..core.errors import DimensionMismatchError, OuterInverseNotExistError
from .tensor_core import MTensorContext
from .transform import Tensor3, TransformSpec

ORACLE_RTOL = 1e-10


class BlockDiagMatrix(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    blocks: List[np.ndarray]
    block_dims: Tuple[int, int]

    def to_dense(self) -> np.ndarray:
        return scipy.linalg.block_diag(*self.blocks)

    def __matmul__(self, other: "BlockDiagMatrix") -> "BlockDiagMatrix":
        blocks = [a @ b for a, b in zip(self.blocks, other.blocks)]
        return BlockDiagMatrix(blocks=blocks, block_dims=(self.block_dims[0], other.block_dims[1]))

    def conj_transpose(self) -> "BlockDiagMatrix":
        m, n = self.block_dims
        return BlockDiagMatrix(blocks=[b.conj().T for b in self.blocks], block_dims=(n, m))


def _forward(A: Tensor3, T: TransformSpec) -> np.ndarray:
    return np.einsum("ls,smn->lmn", T.matrix, A.data)


def _backward(slices: np.ndarray, T: TransformSpec) -> Tensor3:
    return Tensor3(np.einsum("ls,smn->lmn", T.inverse, slices))


def mat(A: Tensor3, ctx: MTensorContext) -> BlockDiagMatrix:
    if A.dims[2] != ctx.p:
        raise DimensionMismatchError(f"Tensor {A.dims} does not fit p={ctx.p}")
    m, n, _ = A.dims
    return BlockDiagMatrix(blocks=list(_forward(A, ctx.transform)), block_dims=(m, n))


def mat_inv(B: BlockDiagMatrix, ctx: MTensorContext) -> Tensor3:
    if len(B.blocks) != ctx.p:
        raise DimensionMismatchError(f"Expected {ctx.p} blocks, got {len(B.blocks)}")
    m, n = B.block_dims
    stack = np.array(B.blocks, dtype=np.complex128).reshape(ctx.p, m, n)
    return _backward(stack, ctx.transform)


def _pinv(block: np.ndarray, rtol: float) -> np.ndarray:
    U, s, Vh = np.linalg.svd(block, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros(block.T.shape, dtype=np.complex128)
    keep = s > rtol * s[0]
    return (Vh[keep].conj().T / s[keep]) @ U[:, keep].conj().T


def _rank(block: np.ndarray, rtol: float) -> int:
    s = np.linalg.svd(block, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def block_index(block: np.ndarray, rtol: float = ORACLE_RTOL) -> int:
    n = block.shape[0]
    power = np.eye(n, dtype=np.complex128)
    rank_k = n
    for k in range(n + 1):
        power = power @ block
        rank_next = _rank(power, rtol)
        if rank_next == rank_k:
            return k
        rank_k = rank_next
    return n


def oracle_pinv(A: Tensor3, ctx: MTensorContext, rtol: float = ORACLE_RTOL) -> Tensor3:
    m, n, _ = A.dims
    blocks = [_pinv(b, rtol) for b in mat(A, ctx).blocks]
    return mat_inv(BlockDiagMatrix(blocks=blocks, block_dims=(n, m)), ctx)


def oracle_drazin(A: Tensor3, ctx: MTensorContext, rtol: float = ORACLE_RTOL) -> Tensor3:
    """Per block A^D = A^k (A^(2k+1))^+ A^k with k the block index."""
    m, n, _ = A.dims
    if m != n:
        raise DimensionMismatchError(f"Drazin inverse needs square slices, got {m}x{n}")
    blocks = []
    for b in mat(A, ctx).blocks:
        k = block_index(b, rtol)
        b_k = np.linalg.matrix_power(b, k)
        blocks.append(b_k @ _pinv(np.linalg.matrix_power(b, 2 * k + 1), rtol) @ b_k)
    return mat_inv(BlockDiagMatrix(blocks=blocks, block_dims=(n, n)), ctx)


def outer_via_mat(
    A: Tensor3, W: Tensor3, ctx: MTensorContext, rtol: float = ORACLE_RTOL, gate: float = 1e-12
) -> Tensor3:
    """Per block X = B (C A B)^{-1} C from an SVD full-rank factorization W = B C."""
    m, n, _ = A.dims
    blocks = []
    for i, (a, w) in enumerate(zip(mat(A, ctx).blocks, mat(W, ctx).blocks)):
        U, s, Vh = np.linalg.svd(w, full_matrices=False)
        r = int(np.count_nonzero(s > rtol * s[0])) if s.size and s[0] > 0 else 0
        if r == 0:
            blocks.append(np.zeros((n, m), dtype=np.complex128))
            continue
        B = U[:, :r] * s[:r]
        C = Vh[:r]
        core = C @ a @ B
        sv = np.linalg.svd(core, compute_uv=False)
        scale = np.linalg.norm(C, 2) * np.linalg.norm(a, 2) * np.linalg.norm(B, 2)
        if sv[-1] <= gate * scale:
            raise OuterInverseNotExistError(f"Block {i} core is singular")
        blocks.append(B @ np.linalg.solve(core, C))
    return mat_inv(BlockDiagMatrix(blocks=blocks, block_dims=(n, m)), ctx)


def t_product_direct(A: Tensor3, B: Tensor3) -> Tensor3:
    """Circular convolution of frontal slices, no transform involved."""
    m, n, p = A.dims
    n2, k, p2 = B.dims
    if n != n2 or p != p2:
        raise DimensionMismatchError(f"t-product of {A.dims} and {B.dims} is undefined")
    out = np.zeros((p, m, k), dtype=np.complex128)
    for l in range(p):
        for s in range(p):
            out[l] += A.data[s] @ B.data[(l - s) % p]
    return Tensor3(out)


def is_hermitian(A: Tensor3, ctx: MTensorContext, rtol: float = 1e-10) -> bool:
    m, n, _ = A.dims
    if m != n:
        return False
    for b in mat(A, ctx).blocks:
        if np.linalg.norm(b - b.conj().T) > rtol * max(np.linalg.norm(b), 1.0):
            return False
    return True


def mat_residual(A: Tensor3, B: Tensor3, product: Tensor3, ctx: MTensorContext) -> float:
    """Relative distance between mat(product) and mat(A) mat(B)."""
    expected = (mat(A, ctx) @ mat(B, ctx)).to_dense()
    got = mat(product, ctx).to_dense()
    return float(np.linalg.norm(got - expected) / max(np.linalg.norm(expected), 1e-300))
