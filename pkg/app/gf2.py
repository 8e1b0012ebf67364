"""Binary linear algebra: packed dense matrices, row-sparse matrices, rank and row-space tests.

Bit vectors are plain ``numpy.uint8`` arrays holding 0/1; dense matrices pack
each row into little-endian 64-bit words so that elimination XORs whole rows
at once. Every type here is read-only after construction.
"""

from __future__ import annotations

import logging
import pathlib
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

WORD = 64

BitVector = np.ndarray


class DimensionError(ValueError):
    """Operands are not conformable."""


class MatrixFormatError(ValueError):
    """A matrix file could not be parsed."""


def bitvector(bits) -> BitVector:
    """Coerce any 0/1 sequence into a read-write uint8 bit vector."""
    return (np.asarray(bits).reshape(-1).astype(np.int64) & 1).astype(np.uint8)


def weight(v: BitVector) -> int:
    return int(np.count_nonzero(v))


def _word_count(cols: int) -> int:
    return max(1, -(-cols // WORD))


def _pack_rows(dense: np.ndarray, cols: int) -> np.ndarray:
    dense = np.asarray(dense, dtype=np.uint8).reshape(-1, cols)
    width = _word_count(cols) * WORD
    padded = np.zeros((dense.shape[0], width), dtype=np.uint8)
    padded[:, :cols] = dense & 1
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64)


def _unpack_rows(words: np.ndarray, cols: int) -> np.ndarray:
    raw = np.ascontiguousarray(words.astype("<u8")).view(np.uint8)
    return np.unpackbits(raw, axis=1, bitorder="little")[:, :cols]


@dataclass(frozen=True, eq=False)
class BitMatrix:
    rows: int
    cols: int
    words: np.ndarray

    def __post_init__(self):
        if self.words.shape != (self.rows, _word_count(self.cols)):
            raise DimensionError(
                f"word array {self.words.shape} does not fit a {self.rows}x{self.cols} matrix"
            )
        self.words.flags.writeable = False

    @classmethod
    def from_dense(cls, dense) -> BitMatrix:
        dense = np.asarray(dense)
        if dense.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {dense.shape}")
        rows, cols = dense.shape
        return cls(rows, cols, _pack_rows(dense.astype(np.int64) & 1, cols))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> BitMatrix:
        return cls(rows, cols, np.zeros((rows, _word_count(cols)), dtype=np.uint64))

    @classmethod
    def identity(cls, size: int) -> BitMatrix:
        return cls.from_dense(np.eye(size, dtype=np.uint8))

    def to_dense(self) -> np.ndarray:
        return _unpack_rows(self.words, self.cols)

    def get(self, i: int, j: int) -> int:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"({i}, {j}) outside a {self.rows}x{self.cols} matrix")
        w, b = divmod(j, WORD)
        return int((int(self.words[i, w]) >> b) & 1)

    def transpose(self) -> BitMatrix:
        return BitMatrix.from_dense(self.to_dense().T)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.rows, self.cols, self.words.tobytes()))


@dataclass(frozen=True, eq=False)
class SparseBitMatrix:
    """Row-adjacency (CSR) binary matrix; row i's support is indices[indptr[i]:indptr[i+1]]."""

    rows: int
    cols: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        if self.indptr.shape != (self.rows + 1,) or self.indptr[0] != 0:
            raise DimensionError("indptr must have rows + 1 entries starting at 0")
        if self.indptr[-1] != self.indices.size:
            raise DimensionError("indptr does not cover the index array")
        for i in range(self.rows):
            support = self.indices[self.indptr[i]:self.indptr[i + 1]]
            if support.size and (support[0] < 0 or support[-1] >= self.cols or np.any(np.diff(support) <= 0)):
                raise DimensionError(f"row {i} support must be strictly increasing and < {self.cols}")
        self.indptr.flags.writeable = False
        self.indices.flags.writeable = False

    @classmethod
    def from_row_support(cls, rows: int, cols: int, supports) -> SparseBitMatrix:
        supports = [np.asarray(s, dtype=np.int64) for s in supports]
        if len(supports) != rows:
            raise DimensionError(f"expected {rows} row supports, got {len(supports)}")
        indptr = np.zeros(rows + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([s.size for s in supports])
        indices = np.concatenate(supports) if supports else np.zeros(0, dtype=np.int64)
        return cls(rows, cols, indptr, indices.astype(np.int64))

    @classmethod
    def from_dense(cls, dense) -> SparseBitMatrix:
        dense = np.asarray(dense)
        if dense.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {dense.shape}")
        csr = sp.csr_matrix((dense.astype(np.int64) & 1).astype(np.int8))
        return cls.from_scipy(csr)

    @classmethod
    def from_scipy(cls, matrix) -> SparseBitMatrix:
        csr = sp.csr_matrix(matrix, dtype=np.int64)
        csr.sum_duplicates()
        csr.data %= 2
        csr.eliminate_zeros()
        csr.sort_indices()
        rows, cols = csr.shape
        return cls(rows, cols, csr.indptr.astype(np.int64), csr.indices.astype(np.int64))

    @classmethod
    def from_bitmatrix(cls, m: BitMatrix) -> SparseBitMatrix:
        return cls.from_dense(m.to_dense())

    def row_support(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray().astype(np.uint8)

    def to_bitmatrix(self) -> BitMatrix:
        return BitMatrix.from_dense(self.to_dense())

    def transpose(self) -> SparseBitMatrix:
        return SparseBitMatrix.from_scipy(self.csr.T)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        data = np.ones(self.indices.size, dtype=np.int32)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.rows, self.cols))

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def row_weights(self) -> np.ndarray:
        return np.diff(self.indptr)

    def col_weights(self) -> np.ndarray:
        return np.bincount(self.indices, minlength=self.cols)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseBitMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __hash__(self):
        return hash((self.rows, self.cols, self.indptr.tobytes(), self.indices.tobytes()))


# ─── Products ───

def mat_vec_mod2(H: SparseBitMatrix, x: BitVector) -> BitVector:
    """s = H x mod 2."""
    x = np.asarray(x)
    if x.shape != (H.cols,):
        raise DimensionError(f"vector of length {x.size} against a matrix with {H.cols} columns")
    return (np.asarray(H.csr @ x.astype(np.int32)) & 1).astype(np.uint8)


def mat_mul_mod2(A: BitMatrix, B: BitMatrix) -> BitMatrix:
    if A.cols != B.rows:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    # float64 products are exact for any realistic inner dimension (< 2**53)
    product = A.to_dense().astype(np.float64) @ B.to_dense().astype(np.float64)
    return BitMatrix.from_dense(np.rint(product).astype(np.int64) & 1)


def sparse_mat_mul_mod2(A: SparseBitMatrix, B: SparseBitMatrix) -> SparseBitMatrix:
    if A.cols != B.rows:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    return SparseBitMatrix.from_scipy(A.csr @ B.csr)


# ─── Elimination ───

def _row_reduce(words: np.ndarray, cols: int) -> tuple[np.ndarray, np.ndarray]:
    """Reduced row echelon form on a private copy; returns (basis rows, pivot columns)."""
    rows = words.copy()
    nrows = rows.shape[0]
    pivots = []
    r = 0
    for col in range(cols):
        if r == nrows:
            break
        w, b = divmod(col, WORD)
        column = (rows[:, w] >> np.uint64(b)) & np.uint64(1) != 0
        below = np.flatnonzero(column[r:])
        if below.size == 0:
            continue
        p = r + int(below[0])
        if p != r:
            rows[[r, p]] = rows[[p, r]]
            column[[r, p]] = column[[p, r]]
        hits = np.flatnonzero(column)
        hits = hits[hits != r]
        if hits.size:
            rows[hits] ^= rows[r]
        pivots.append(col)
        r += 1
    return rows[:r], np.asarray(pivots, dtype=np.int64)


def rank_mod2(M: BitMatrix) -> int:
    return int(_row_reduce(M.words, M.cols)[1].size)


class RowSpace:
    """Echelon basis of a matrix's row space, reusable for many membership tests."""

    def __init__(self, M: BitMatrix):
        self.cols = M.cols
        self.basis, self.pivots = _row_reduce(M.words, M.cols)
        self.basis.flags.writeable = False

    @property
    def rank(self) -> int:
        return int(self.pivots.size)

    def contains(self, v: BitVector) -> bool:
        v = np.asarray(v)
        if v.shape != (self.cols,):
            raise DimensionError(f"vector of length {v.size} against a row space in F2^{self.cols}")
        packed = _pack_rows(v, self.cols)[0]
        # In RREF the pivot bits of v fix the only candidate combination.
        selected = v[self.pivots].astype(bool) if self.rank else np.zeros(0, dtype=bool)
        if selected.any():
            packed = packed ^ np.bitwise_xor.reduce(self.basis[selected], axis=0)
        return not packed.any()


def in_rowspace(M: BitMatrix, v: BitVector) -> bool:
    if np.asarray(v).shape != (M.cols,):
        raise DimensionError(f"vector of length {np.asarray(v).size} against {M.cols} columns")
    return RowSpace(M).contains(v)


# ─── Text formats ───

def write_alist(path, H: SparseBitMatrix) -> None:
    """Rows/cols line, row-degree line, then one line of 1-based column indices per row."""
    lines = [f"{H.rows} {H.cols}", " ".join(str(d) for d in H.row_weights())]
    for i in range(H.rows):
        lines.append(" ".join(str(j + 1) for j in H.row_support(i)))
    pathlib.Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_alist(path) -> SparseBitMatrix:
    """Errors name the offending line number, never its contents."""
    text = pathlib.Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    lineno = 1
    try:
        rows, cols = (int(t) for t in lines[0].split())
        lineno = 2
        degrees = [int(t) for t in lines[1].split()] if rows else []
        if len(degrees) != rows:
            raise MatrixFormatError(f"{path}: expected {rows} row degrees, got {len(degrees)}")
        supports = []
        for i in range(rows):
            lineno = 3 + i
            support = sorted(int(t) - 1 for t in lines[2 + i].split())
            if len(support) != degrees[i]:
                raise MatrixFormatError(f"{path}: row {i} lists {len(support)} columns, degree says {degrees[i]}")
            supports.append(support)
    except (ValueError, IndexError) as e:
        if isinstance(e, MatrixFormatError):
            raise
        raise MatrixFormatError(f"{path}: malformed alist file at line {lineno}") from e
    try:
        return SparseBitMatrix.from_row_support(rows, cols, supports)
    except DimensionError as e:
        raise MatrixFormatError(f"{path}: {e}") from e


def write_dense(path, M) -> None:
    dense = M.to_dense() if hasattr(M, "to_dense") else np.asarray(M)
    lines = [" ".join(str(int(b)) for b in row) for row in dense]
    pathlib.Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_dense(path) -> BitMatrix:
    rows = []
    for lineno, line in enumerate(pathlib.Path(path).read_text(encoding="utf-8").splitlines(), 1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) == 1:
            tokens = list(tokens[0])
        if any(t not in ("0", "1") for t in tokens):
            raise MatrixFormatError(f"{path}: non-binary entry at line {lineno}")
        rows.append([int(t) for t in tokens])
    if rows and len({len(r) for r in rows}) != 1:
        raise MatrixFormatError(f"{path}: ragged rows")
    return BitMatrix.from_dense(np.asarray(rows, dtype=np.uint8).reshape(len(rows), -1 if rows else 0))
