"""CSS code construction: circulant lifting of quasi-cyclic base matrices and the lifted product."""

from __future__ import annotations

import json
import logging
import pathlib
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from gf2 import (
    DimensionError, MatrixFormatError, RowSpace, SparseBitMatrix,
    rank_mod2, read_alist, sparse_mat_mul_mod2, write_alist,
)

logger = logging.getLogger(__name__)

ZERO = -1


class CodeFileError(MatrixFormatError):
    """A code or base-matrix description is unusable."""


class QcBaseMatrix(BaseModel):
    """Base matrix over the circulant ring: each cell is a monomial x^e or ZERO (-1)."""

    model_config = ConfigDict(frozen=True)

    L: int
    rows: int
    cols: int
    exponents: tuple[tuple[int, ...], ...]

    @model_validator(mode="after")
    def _check_shape(self):
        if self.L < 1:
            raise ValueError("circulant size L must be >= 1")
        if len(self.exponents) != self.rows or any(len(r) != self.cols for r in self.exponents):
            raise ValueError(f"exponents must form a {self.rows}x{self.cols} grid")
        for row in self.exponents:
            for e in row:
                if e != ZERO and not 0 <= e < self.L:
                    raise ValueError(f"exponent {e} outside [0, {self.L}) and not ZERO (-1)")
        return self

    @classmethod
    def from_grid(cls, grid, L: int) -> QcBaseMatrix:
        grid = [[int(e) for e in row] for row in grid]
        cols = len(grid[0]) if grid else 0
        return cls(L=L, rows=len(grid), cols=cols, exponents=tuple(tuple(r) for r in grid))

    @classmethod
    def from_binary(cls, H) -> QcBaseMatrix:
        """A classical parity check seen as an L=1 base matrix (1 -> x^0, 0 -> ZERO)."""
        H = np.asarray(H)
        return cls.from_grid(np.where(H & 1, 0, ZERO), L=1)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.exponents, dtype=np.int64).reshape(self.rows, self.cols)

    def exponent(self, i: int, j: int) -> int:
        return self.exponents[i][j]


def identity_base(size: int, L: int) -> QcBaseMatrix:
    grid = np.full((size, size), ZERO, dtype=np.int64)
    np.fill_diagonal(grid, 0)
    return QcBaseMatrix.from_grid(grid, L)


def kron(a: QcBaseMatrix, b: QcBaseMatrix) -> QcBaseMatrix:
    """Kronecker product of monomial matrices; exponents add mod L, ZERO absorbs."""
    if a.L != b.L:
        raise DimensionError(f"lift sizes differ: {a.L} vs {b.L}")
    A, B = a.array, b.array
    summed = (A[:, None, :, None] + B[None, :, None, :]) % a.L
    absent = (A[:, None, :, None] == ZERO) | (B[None, :, None, :] == ZERO)
    grid = np.where(absent, ZERO, summed).reshape(a.rows * b.rows, a.cols * b.cols)
    return QcBaseMatrix.from_grid(grid, a.L)


def hstack(a: QcBaseMatrix, b: QcBaseMatrix) -> QcBaseMatrix:
    if a.L != b.L or a.rows != b.rows:
        raise DimensionError(f"cannot stack {a.rows}x{a.cols} (L={a.L}) beside {b.rows}x{b.cols} (L={b.L})")
    return QcBaseMatrix.from_grid(np.hstack([a.array, b.array]), a.L)


def conjugate_transpose(base: QcBaseMatrix) -> QcBaseMatrix:
    A = base.array.T
    return QcBaseMatrix.from_grid(np.where(A == ZERO, ZERO, (base.L - A) % base.L), base.L)


def lift(base: QcBaseMatrix) -> SparseBitMatrix:
    """Replace x^e by the LxL permutation sending column c to row (c + e) mod L."""
    L = base.L
    A = base.array
    bi, bj = np.nonzero(A != ZERO)
    c = np.arange(L)
    rows = (bi[:, None] * L + (c[None, :] + A[bi, bj][:, None]) % L).ravel()
    cols = (bj[:, None] * L + c[None, :]).ravel()
    data = np.ones(rows.size, dtype=np.int64)
    coo = sp.coo_matrix((data, (rows, cols)), shape=(base.rows * L, base.cols * L))
    return SparseBitMatrix.from_scipy(coo.tocsr())


def tanner_base() -> QcBaseMatrix:
    """3x5 base of the [155, 64, 20] Tanner code: exponent(i, j) = 5^i 2^j mod 31."""
    grid = [[(pow(5, i, 31) * pow(2, j, 31)) % 31 for j in range(5)] for i in range(3)]
    return QcBaseMatrix.from_grid(grid, L=31)


def classical_parameters(H: SparseBitMatrix) -> tuple[int, int]:
    return H.cols, H.cols - rank_mod2(H.to_bitmatrix())


# ─── CSS codes ───

@dataclass(frozen=True, eq=False)
class CssCode:
    name: str
    h_x: SparseBitMatrix
    h_z: SparseBitMatrix
    n: int
    k: int
    d_label: int | None = None

    @classmethod
    def from_matrices(cls, name: str, h_x: SparseBitMatrix, h_z: SparseBitMatrix,
                      d_label: int | None = None) -> CssCode:
        if h_x.cols != h_z.cols:
            raise DimensionError(f"H_X has {h_x.cols} columns but H_Z has {h_z.cols}")
        n = h_x.cols
        k = n - rank_mod2(h_x.to_bitmatrix()) - rank_mod2(h_z.to_bitmatrix())
        return cls(name, h_x, h_z, n, k, d_label)

    @cached_property
    def row_space_x(self) -> RowSpace:
        return RowSpace(self.h_x.to_bitmatrix())

    @cached_property
    def row_space_z(self) -> RowSpace:
        return RowSpace(self.h_z.to_bitmatrix())

    @property
    def label(self) -> str:
        d = self.d_label if self.d_label is not None else "?"
        return f"[[{self.n},{self.k},{d}]]"


def lifted_product_qubits(a: QcBaseMatrix, b: QcBaseMatrix) -> int:
    return a.L * (a.cols * b.cols + a.rows * b.rows)


def lifted_product(a: QcBaseMatrix, b: QcBaseMatrix, name: str = "lp",
                   d_label: int | None = None) -> CssCode:
    """H_X = [A (x) I_nb | I_ma (x) B*],  H_Z = [I_na (x) B | A* (x) I_mb]."""
    if a.L != b.L:
        raise CodeFileError(f"lift sizes differ: {a.L} vs {b.L}")
    L = a.L
    base_x = hstack(kron(a, identity_base(b.cols, L)), kron(identity_base(a.rows, L), conjugate_transpose(b)))
    base_z = hstack(kron(identity_base(a.cols, L), b), kron(conjugate_transpose(a), identity_base(b.rows, L)))
    code = CssCode.from_matrices(name, lift(base_x), lift(base_z), d_label)
    logger.info("built %s %s: H_X %dx%d, H_Z %dx%d", name, code.label,
                code.h_x.rows, code.h_x.cols, code.h_z.rows, code.h_z.cols)
    return code


def hypergraph_product(h1, h2=None, name: str = "hgp", d_label: int | None = None) -> CssCode:
    h2 = h1 if h2 is None else h2
    return lifted_product(QcBaseMatrix.from_binary(h1), QcBaseMatrix.from_binary(h2), name, d_label)


REPETITION_3 = np.array([[1, 1, 0], [0, 1, 1]], dtype=np.uint8)


@lru_cache(maxsize=None)
def builtin_code(name: str) -> CssCode:
    if name == "lp_tanner":
        return lifted_product(tanner_base(), tanner_base(), name="lp_tanner", d_label=20)
    if name == "hgp_rep3":
        return hypergraph_product(REPETITION_3, name="hgp_rep3", d_label=3)
    if name == "hgp_trivial":
        return hypergraph_product(np.ones((1, 1), dtype=np.uint8), name="hgp_trivial")
    raise CodeFileError(f"unknown built-in code '{name}'; choose from {', '.join(BUILTIN_CODES)}")


BUILTIN_CODES = ("lp_tanner", "hgp_rep3", "hgp_trivial")


# ─── Validation ───

@dataclass
class ValidationReport:
    name: str
    commutes: bool
    n: int
    k: int
    rank_x: int
    rank_z: int
    offending_pairs: list[tuple[int, int]] = field(default_factory=list)
    row_degrees_x: dict[int, int] = field(default_factory=dict)
    col_degrees_x: dict[int, int] = field(default_factory=dict)
    row_degrees_z: dict[int, int] = field(default_factory=dict)
    col_degrees_z: dict[int, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.commutes

    def summary(self) -> str:
        return f"n={self.n} k={self.k} css={'ok' if self.ok else 'fail'}"

    def to_dict(self) -> dict:
        return {
            "name": self.name, "ok": self.ok, "commutes": self.commutes,
            "n": self.n, "k": self.k, "rank_x": self.rank_x, "rank_z": self.rank_z,
            "offending_pairs": [list(p) for p in self.offending_pairs],
            "row_degrees_x": self.row_degrees_x, "col_degrees_x": self.col_degrees_x,
            "row_degrees_z": self.row_degrees_z, "col_degrees_z": self.col_degrees_z,
        }


def _profile(weights: np.ndarray) -> dict[int, int]:
    return {int(d): c for d, c in sorted(Counter(weights.tolist()).items())}


def css_validate(code: CssCode) -> ValidationReport:
    """Never raises on a bad code; violations land in the report."""
    product = sparse_mat_mul_mod2(code.h_x, code.h_z.transpose())
    offending = [(i, int(j)) for i in range(product.rows) for j in product.row_support(i)]
    rank_x = rank_mod2(code.h_x.to_bitmatrix())
    rank_z = rank_mod2(code.h_z.to_bitmatrix())
    report = ValidationReport(
        name=code.name,
        commutes=not offending,
        n=code.h_x.cols,
        k=code.h_x.cols - rank_x - rank_z,
        rank_x=rank_x,
        rank_z=rank_z,
        offending_pairs=offending,
        row_degrees_x=_profile(code.h_x.row_weights()),
        col_degrees_x=_profile(code.h_x.col_weights()),
        row_degrees_z=_profile(code.h_z.row_weights()),
        col_degrees_z=_profile(code.h_z.col_weights()),
    )
    if not report.ok:
        logger.warning("%s: H_X H_Z^T != 0 on %d row pairs", code.name, len(offending))
    return report


# ─── Files ───

def load_base_matrix(path) -> QcBaseMatrix:
    """JSON {"L": int, "rows": int, "cols": int, "exponents": [[int or -1, ...], ...]}."""
    try:
        text = pathlib.Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CodeFileError(f"cannot read base matrix {path}: {e}") from e
    return parse_base_matrix(text, source=str(path))


def parse_base_matrix(text: str | bytes, source: str = "<input>") -> QcBaseMatrix:
    try:
        return QcBaseMatrix.model_validate_json(text)
    except ValidationError as e:
        raise CodeFileError(f"{source}: invalid base matrix: {e.errors()[0]['msg']}") from e


def dump_base_matrix(base: QcBaseMatrix, path) -> None:
    payload = {"L": base.L, "rows": base.rows, "cols": base.cols,
               "exponents": [list(r) for r in base.exponents]}
    pathlib.Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def write_code_alist(code: CssCode, out_dir) -> tuple[pathlib.Path, pathlib.Path]:
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    hx_path, hz_path = out / f"{code.name}_hx.alist", out / f"{code.name}_hz.alist"
    write_alist(hx_path, code.h_x)
    write_alist(hz_path, code.h_z)
    return hx_path, hz_path


def load_code_alist(hx_path, hz_path, name: str | None = None) -> CssCode:
    try:
        h_x, h_z = read_alist(hx_path), read_alist(hz_path)
        return CssCode.from_matrices(name or pathlib.Path(hx_path).stem.removesuffix("_hx"), h_x, h_z)
    except OSError as e:
        raise CodeFileError(f"cannot read code files: {e}") from e
    except (MatrixFormatError, DimensionError) as e:
        raise CodeFileError(str(e)) from e
