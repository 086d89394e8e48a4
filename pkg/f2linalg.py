"""Dense linear algebra over GF(2) on packed bit rows."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np


class LinalgError(ValueError):
    pass


class DimensionMismatch(LinalgError):
    pass


def _width(cols: int) -> int:
    return (cols + 7) // 8


def _mask(col: int) -> Tuple[int, np.uint8]:
    return col >> 3, np.uint8(0x80 >> (col & 7))


@dataclass(frozen=True, eq=False)
class BitMatrix:
    rows: int
    cols: int
    bits: np.ndarray

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise DimensionMismatch(f"negative shape {self.rows}x{self.cols}")
        if self.bits.shape != (self.rows, _width(self.cols)):
            raise DimensionMismatch(
                f"packed shape {self.bits.shape} does not hold {self.rows}x{self.cols}"
            )
        self.bits.setflags(write=False)

    # ----------------------------------------------------------
    # construction
    # ----------------------------------------------------------
    @classmethod
    def from_array(cls, array: Iterable, cols: Optional[int] = None) -> "BitMatrix":
        arr = np.asarray(array, dtype=np.int64)
        if arr.size == 0 and arr.ndim < 2:
            arr = arr.reshape(0, cols or 0)
        if arr.ndim != 2:
            raise DimensionMismatch(f"expected a 2-d array, got shape {arr.shape}")
        arr = (arr % 2).astype(np.uint8)
        rows, width = arr.shape
        if cols is not None and cols != width:
            raise DimensionMismatch(f"expected {cols} columns, got {width}")
        return cls(rows, width, np.packbits(arr, axis=1).reshape(rows, _width(width)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, np.zeros((rows, _width(cols)), dtype=np.uint8))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_array(np.eye(n, dtype=np.uint8).reshape(n, n), cols=n)

    @classmethod
    def from_columns(cls, columns: Sequence[np.ndarray], rows: int) -> "BitMatrix":
        if not columns:
            return cls.zeros(rows, 0)
        return cls.from_array(np.stack([np.asarray(c, dtype=np.uint8) for c in columns], axis=1))

    @classmethod
    def hstack(cls, parts: Sequence["BitMatrix"], rows: Optional[int] = None) -> "BitMatrix":
        if not parts:
            return cls.zeros(rows or 0, 0)
        heights = {p.rows for p in parts}
        if len(heights) != 1:
            raise DimensionMismatch(f"hstack of mismatched heights {sorted(heights)}")
        return cls.from_array(np.concatenate([p.to_array() for p in parts], axis=1))

    @classmethod
    def vstack(cls, parts: Sequence["BitMatrix"], cols: Optional[int] = None) -> "BitMatrix":
        if not parts:
            return cls.zeros(0, cols or 0)
        widths = {p.cols for p in parts}
        if len(widths) != 1:
            raise DimensionMismatch(f"vstack of mismatched widths {sorted(widths)}")
        return cls(sum(p.rows for p in parts), parts[0].cols, np.concatenate([p.bits for p in parts], axis=0))

    # ----------------------------------------------------------
    # access
    # ----------------------------------------------------------
    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    def to_array(self) -> np.ndarray:
        if self.cols == 0:
            return np.zeros((self.rows, 0), dtype=np.uint8)
        return np.unpackbits(self.bits, axis=1, count=self.cols).astype(np.uint8)

    def to_lists(self) -> List[List[int]]:
        return self.to_array().tolist()

    def __getitem__(self, index: Tuple[int, int]) -> int:
        i, j = index
        byte, mask = _mask(j)
        return int(bool(self.bits[i, byte] & mask))

    def column(self, j: int) -> np.ndarray:
        return self.to_array()[:, j].copy()

    def select_columns(self, indices: Sequence[int]) -> "BitMatrix":
        return BitMatrix.from_array(self.to_array()[:, list(indices)].reshape(self.rows, len(indices)))

    def select_rows(self, indices: Sequence[int]) -> "BitMatrix":
        return BitMatrix.from_array(self.to_array()[list(indices), :].reshape(len(indices), self.cols))

    def block(self, row_start: int, row_stop: int, col_start: int, col_stop: int) -> "BitMatrix":
        arr = self.to_array()[row_start:row_stop, col_start:col_stop]
        return BitMatrix.from_array(arr.reshape(row_stop - row_start, col_stop - col_start))

    def is_zero(self) -> bool:
        return not self.bits.any()

    # ----------------------------------------------------------
    # arithmetic (mod 2)
    # ----------------------------------------------------------
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.bits, other.bits)

    __hash__ = None  # type: ignore[assignment]

    def __add__(self, other: "BitMatrix") -> "BitMatrix":
        if self.shape != other.shape:
            raise DimensionMismatch(f"cannot add {self.shape} and {other.shape}")
        return BitMatrix(self.rows, self.cols, np.bitwise_xor(self.bits, other.bits))

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch(f"cannot multiply {self.shape} by {other.shape}")
        left = self.to_array().astype(np.int64)
        right = other.to_array().astype(np.int64)
        return BitMatrix.from_array(((left @ right) % 2).reshape(self.rows, other.cols))

    def apply(self, vector: np.ndarray) -> np.ndarray:
        vec = np.asarray(vector, dtype=np.int64).reshape(self.cols)
        return ((self.to_array().astype(np.int64) @ vec) % 2).astype(np.uint8)

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_array(self.to_array().T.reshape(self.cols, self.rows))

    @property
    def T(self) -> "BitMatrix":
        return self.transpose()

    def power(self, k: int) -> "BitMatrix":
        if self.rows != self.cols:
            raise DimensionMismatch(f"power of non-square {self.shape}")
        out = BitMatrix.identity(self.rows)
        for _ in range(k):
            out = out @ self
        return out

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols}, {self.to_lists()})"


# --------------------------------------------------------------
# elimination
# --------------------------------------------------------------
def _rref(bits: np.ndarray, cols: int, stop: Optional[int] = None) -> Tuple[np.ndarray, List[int]]:
    # pivots are taken in the first `stop` columns only
    work = np.array(bits, dtype=np.uint8, copy=True)
    n_rows = work.shape[0]
    pivots: List[int] = []
    row = 0
    for col in range(cols if stop is None else stop):
        if row == n_rows:
            break
        byte, mask = _mask(col)
        hits = np.flatnonzero(work[row:, byte] & mask)
        if hits.size == 0:
            continue
        pivot = row + int(hits[0])
        if pivot != row:
            work[[row, pivot]] = work[[pivot, row]]
        others = np.flatnonzero(work[:, byte] & mask)
        others = others[others != row]
        if others.size:
            work[others] ^= work[row]
        pivots.append(col)
        row += 1
    return work, pivots


def row_reduce(m: BitMatrix) -> Tuple[BitMatrix, List[int]]:
    work, pivots = _rref(m.bits, m.cols)
    return BitMatrix(m.rows, m.cols, work), pivots


def rank(m: BitMatrix) -> int:
    if m.rows == 0 or m.cols == 0:
        return 0
    return len(_rref(m.bits, m.cols)[1])


def pivot_columns(m: BitMatrix) -> List[int]:
    return _rref(m.bits, m.cols)[1]


def kernel_basis(m: BitMatrix) -> BitMatrix:
    """Columns of the result form a basis of {v : m.v = 0}."""
    reduced, pivots = row_reduce(m)
    arr = reduced.to_array()
    taken = set(pivots)
    free = [c for c in range(m.cols) if c not in taken]
    vectors = []
    for f in free:
        vec = np.zeros(m.cols, dtype=np.uint8)
        vec[f] = 1
        for i, p in enumerate(pivots):
            vec[p] = arr[i, f]
        vectors.append(vec)
    return BitMatrix.from_columns(vectors, m.cols)


def solve(m: BitMatrix, b: np.ndarray) -> Optional[np.ndarray]:
    """One solution x of m.x = b, or None when b is outside the column space."""
    rhs = np.asarray(b, dtype=np.uint8).reshape(m.rows, 1) % 2
    augmented = BitMatrix.from_array(np.concatenate([m.to_array(), rhs], axis=1))
    work, pivots = _rref(augmented.bits, augmented.cols, stop=m.cols)
    arr = BitMatrix(augmented.rows, augmented.cols, work).to_array()
    if arr[len(pivots):, m.cols].any():
        return None
    x = np.zeros(m.cols, dtype=np.uint8)
    for i, p in enumerate(pivots):
        x[p] = arr[i, m.cols]
    return x


def inverse(m: BitMatrix) -> BitMatrix:
    if m.rows != m.cols:
        raise DimensionMismatch(f"cannot invert non-square {m.shape}")
    n = m.rows
    augmented = BitMatrix.hstack([m, BitMatrix.identity(n)], rows=n)
    work, pivots = _rref(augmented.bits, augmented.cols, stop=n)
    if len(pivots) < n:
        raise LinalgError(f"matrix of rank {len(pivots)} < {n} is singular")
    return BitMatrix(n, 2 * n, work).block(0, n, n, 2 * n)


def is_invertible(m: BitMatrix) -> bool:
    return m.rows == m.cols and rank(m) == m.rows


def complete_basis(columns: BitMatrix) -> BitMatrix:
    """Extend independent columns by standard vectors to an invertible matrix, given columns first."""
    n, k = columns.shape
    if rank(columns) != k:
        raise LinalgError("columns to complete are not independent")
    if k == 0:
        return BitMatrix.identity(n)
    _, pivots = row_reduce(columns.transpose())
    taken = set(pivots)
    extra = [np.eye(n, dtype=np.uint8)[:, j] for j in range(n) if j not in taken]
    return BitMatrix.hstack([columns, BitMatrix.from_columns(extra, n)], rows=n)


# --------------------------------------------------------------
# normal forms
# --------------------------------------------------------------
@dataclass(frozen=True)
class BasisChange:
    left: BitMatrix
    right: BitMatrix

    def __post_init__(self) -> None:
        if not is_invertible(self.left) or not is_invertible(self.right):
            raise LinalgError("basis change matrices must be invertible")

    def apply(self, f: BitMatrix) -> BitMatrix:
        return self.left @ f @ self.right


def projection_form(rows: int, cols: int, r: int) -> BitMatrix:
    arr = np.zeros((rows, cols), dtype=np.uint8)
    arr[list(range(r)), list(range(r))] = 1
    return BitMatrix.from_array(arr.reshape(rows, cols))


def normalize_projection(f: BitMatrix) -> Tuple[BasisChange, int]:
    """Basis change with left.f.right = [[I_r, 0], [0, 0]], r = rank(f)."""
    pivots = pivot_columns(f)
    r = len(pivots)
    eye = np.eye(f.cols, dtype=np.uint8)
    chosen = BitMatrix.from_columns([eye[:, j] for j in pivots], f.cols)
    right = BitMatrix.hstack([chosen, kernel_basis(f)], rows=f.cols)
    images = f @ chosen
    left = inverse(complete_basis(images))
    return BasisChange(left=left, right=right), r


def assemble_blocks(
    blocks: Iterable[Tuple[int, int, BitMatrix]],
    row_bands: Optional[Sequence[int]] = None,
    col_bands: Optional[Sequence[int]] = None,
) -> BitMatrix:
    """Place (row-band, col-band, block) entries into one matrix; coincident blocks add."""
    items = list(blocks)
    rows: Dict[int, int] = dict(enumerate(row_bands)) if row_bands is not None else {}
    cols: Dict[int, int] = dict(enumerate(col_bands)) if col_bands is not None else {}
    for rb, cb, m in items:
        for bands, band, size, axis in ((rows, rb, m.rows, "row"), (cols, cb, m.cols, "column")):
            if band < 0:
                raise DimensionMismatch(f"negative {axis} band {band}")
            if bands.setdefault(band, size) != size:
                raise DimensionMismatch(f"{axis} band {band} holds {bands[band]} but block has {size}")
    n_row_bands = max(rows, default=-1) + 1
    n_col_bands = max(cols, default=-1) + 1
    for bands, count, axis in ((rows, n_row_bands, "row"), (cols, n_col_bands, "column")):
        missing = [b for b in range(count) if b not in bands]
        if missing:
            raise DimensionMismatch(f"{axis} bands {missing} have no size")
    row_off = np.concatenate([[0], np.cumsum([rows[b] for b in range(n_row_bands)])]).astype(int)
    col_off = np.concatenate([[0], np.cumsum([cols[b] for b in range(n_col_bands)])]).astype(int)
    out = np.zeros((int(row_off[-1]), int(col_off[-1])), dtype=np.uint8)
    for rb, cb, m in items:
        out[row_off[rb]:row_off[rb + 1], col_off[cb]:col_off[cb + 1]] ^= m.to_array()
    return BitMatrix.from_array(out.reshape(int(row_off[-1]), int(col_off[-1])))


# --------------------------------------------------------------
# homology
# --------------------------------------------------------------
def homology_rank(d: BitMatrix) -> int:
    if d.rows != d.cols:
        raise DimensionMismatch(f"differential must be square, got {d.shape}")
    return d.rows - 2 * rank(d)


@dataclass(frozen=True)
class HomologyBasis:
    """Image basis plus cycle representatives spanning ker d / im d."""

    image: BitMatrix
    reps: BitMatrix

    @property
    def dim(self) -> int:
        return self.reps.cols

    def coordinates(self, cycle: np.ndarray) -> np.ndarray:
        frame = BitMatrix.hstack([self.image, self.reps], rows=self.reps.rows)
        x = solve(frame, cycle)
        if x is None:
            raise LinalgError("vector is not a cycle of this complex")
        return x[self.image.cols:]


def homology_basis(d: BitMatrix) -> HomologyBasis:
    n = d.rows
    image = d.select_columns(pivot_columns(d))
    kernel = kernel_basis(d)
    frame = BitMatrix.hstack([image, kernel], rows=n)
    chosen = [j - image.cols for j in pivot_columns(frame) if j >= image.cols]
    return HomologyBasis(image=image, reps=kernel.select_columns(chosen))
