"""Arithmetic over GF(2^8) and Gauss-Jordan elimination on matrices over it.

Elements are plain ints in [0, 255]. The reduction polynomial is fixed at
x^8 + x^4 + x^3 + x^2 + 1 (0x11D) so coefficient streams are reproducible.

Byte vectors (``bytes``/``bytearray``) are used for both coefficient rows and
payload rows; scaling a vector by a constant is a single ``bytes.translate``
through a precomputed 256-entry table.
"""

from __future__ import annotations

from typing import Iterable, Sequence

POLY = 0x11D
GENERATOR = 0x02


class DivisionByZero(ZeroDivisionError):
    pass


class DimensionError(ValueError):
    pass


def _build_tables() -> tuple[list[int], list[int]]:
    exp = [0] * 512
    log = [0] * 256
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= POLY
    for i in range(255, 512):
        exp[i] = exp[i - 255]
    return exp, log


EXP, LOG = _build_tables()


def gf_add(a: int, b: int) -> int:
    return a ^ b


gf_sub = gf_add


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_inv(a: int) -> int:
    if a == 0:
        raise DivisionByZero("0 has no multiplicative inverse in GF(2^8)")
    return EXP[255 - LOG[a]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise DivisionByZero("division by zero in GF(2^8)")
    if a == 0:
        return 0
    return EXP[LOG[a] + 255 - LOG[b]]


# MUL_TABLES[c] maps byte v -> c*v; usable directly with bytes.translate.
MUL_TABLES: list[bytes] = [bytes(gf_mul(c, v) for v in range(256)) for c in range(256)]


def scale(vec: bytes, c: int) -> bytes:
    """Return ``c * vec`` elementwise."""
    if c == 1:
        return bytes(vec)
    return bytes(vec).translate(MUL_TABLES[c])


def xor_bytes(a: bytes, b: bytes) -> bytes:
    """Elementwise field addition of two equal-length vectors."""
    n = len(a)
    if n != len(b):
        raise DimensionError(f"length mismatch: {n} != {len(b)}")
    return (int.from_bytes(a, "little") ^ int.from_bytes(b, "little")).to_bytes(n, "little")


def axpy(y: bytes, c: int, x: bytes) -> bytes:
    """Return ``y + c*x``."""
    if c == 0:
        return bytes(y)
    return xor_bytes(y, scale(x, c))


def linear_combination(coeffs: Sequence[int], vectors: Sequence[bytes]) -> bytes:
    """Sum of ``coeffs[k] * vectors[k]``; all vectors must share one length."""
    if len(coeffs) != len(vectors):
        raise DimensionError("coefficient count does not match vector count")
    if not vectors:
        raise DimensionError("empty combination")
    n = len(vectors[0])
    acc = 0
    for c, v in zip(coeffs, vectors):
        if len(v) != n:
            raise DimensionError("vectors differ in length")
        if c:
            acc ^= int.from_bytes(scale(v, c), "little")
    return acc.to_bytes(n, "little")


class FieldMatrix:
    """Dense matrix over GF(2^8) stored as a list of byte rows."""

    def __init__(self, rows: Iterable[Iterable[int]] = (), n_cols: int | None = None):
        self.rows: list[bytes] = [bytes(r) for r in rows]
        if n_cols is None:
            if not self.rows:
                raise DimensionError("n_cols is required for an empty matrix")
            n_cols = len(self.rows[0])
        self.n_cols = n_cols
        for r in self.rows:
            if len(r) != n_cols:
                raise DimensionError(f"row of length {len(r)} in matrix with {n_cols} columns")

    def __len__(self) -> int:
        return len(self.rows)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.n_cols == other.n_cols and self.rows == other.rows

    def __repr__(self) -> str:
        return f"FieldMatrix({[list(r) for r in self.rows]!r}, n_cols={self.n_cols})"

    def copy(self) -> FieldMatrix:
        return FieldMatrix(self.rows, self.n_cols)

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.rows]

    def reduce(self) -> tuple[FieldMatrix, list[int]]:
        rref, pivots, _ = reduce(self)
        return rref, pivots

    def rank(self) -> int:
        return len(reduce(self)[1])


def reduce(
    m: FieldMatrix, augment: Sequence[bytes] | None = None
) -> tuple[FieldMatrix, list[int], list[bytes]]:
    """Gauss-Jordan elimination to reduced row echelon form.

    Returns ``(rref, pivots, augmented_rows)``. Zero rows are dropped, so the
    row count of ``rref`` equals the rank and ``pivots[i]`` is the pivot
    column of row ``i``. If ``augment`` is given, each of its rows receives the
    same row operations as the corresponding matrix row (and is dropped along
    with it); otherwise the third element is an empty list.
    """
    rows = list(m.rows)
    aug = list(augment) if augment is not None else None
    if aug is not None and len(aug) != len(rows):
        raise DimensionError("augment must have one row per matrix row")
    pivots: list[int] = []
    r = 0
    for col in range(m.n_cols):
        sel = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if sel is None:
            continue
        rows[r], rows[sel] = rows[sel], rows[r]
        if aug is not None:
            aug[r], aug[sel] = aug[sel], aug[r]
        inv = gf_inv(rows[r][col])
        rows[r] = scale(rows[r], inv)
        if aug is not None:
            aug[r] = scale(aug[r], inv)
        for i in range(len(rows)):
            f = rows[i][col]
            if i != r and f:
                rows[i] = axpy(rows[i], f, rows[r])
                if aug is not None:
                    aug[i] = axpy(aug[i], f, aug[r])
        pivots.append(col)
        r += 1
    return FieldMatrix(rows[:r], m.n_cols), pivots, (aug[:r] if aug is not None else [])


def rank(m: FieldMatrix) -> int:
    return len(reduce(m)[1])


def rank_increases(m: FieldMatrix, row: Sequence[int]) -> bool:
    """True iff appending ``row`` to ``m`` raises its rank. ``m`` is not modified."""
    if len(row) != m.n_cols:
        raise DimensionError(f"row has {len(row)} entries, matrix has {m.n_cols} columns")
    rref, pivots, _ = reduce(m)
    residual = bytes(row)
    for prow, col in zip(rref.rows, pivots):
        f = residual[col]
        if f:
            residual = axpy(residual, f, prow)
    return any(residual)
