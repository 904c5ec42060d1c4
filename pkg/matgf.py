"""
Dense matrices over F_p and F_{p^2}, integer matrices, and the exact
linear algebra the frame code needs: rank, p-rank, determinants, the
basic-submatrix discriminant and congruence factorization of Gram matrices.

A MatGF stores coordinates in an integer array of shape (l, rows, cols);
slice 0 is the F_p part and slice 1 (l = 2) the t-part.
"""
import logging
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from gf import FieldCtx, FieldElem, is_square, make_field, sqrt

logger = logging.getLogger(__name__)

# int64 products stay exact while n * p^2 fits; larger primes fall back to objects
INT64_PRIME_LIMIT = 1 << 24


def _dtype(p: int):
    return np.int64 if p < INT64_PRIME_LIMIT else object


# ---------------------------------------------------------
# Coordinate-array arithmetic (axis 0 is the field degree)
# ---------------------------------------------------------
def _add(ctx: FieldCtx, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a + b) % ctx.p


def _sub(ctx: FieldCtx, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a - b) % ctx.p


def _mul(ctx: FieldCtx, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    p = ctx.p
    if ctx.l == 1:
        return (a * b) % p
    re = (a[0] * b[0] + ctx.nu_value * ((a[1] * b[1]) % p)) % p
    im = (a[0] * b[1] + a[1] * b[0]) % p
    return np.stack([re, im])


def _matmul(ctx: FieldCtx, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    p = ctx.p
    if ctx.l == 1:
        return ((a[0] @ b[0]) % p)[None]
    ac = (a[0] @ b[0]) % p
    bd = (a[1] @ b[1]) % p
    re = (ac + ctx.nu_value * bd) % p
    im = ((a[0] @ b[1]) % p + (a[1] @ b[0]) % p) % p
    return np.stack([re, im])


def _coords(e: FieldElem) -> np.ndarray:
    return np.array([e.x, e.y][: e.ctx.l], dtype=_dtype(e.ctx.p))


def _elem(ctx: FieldCtx, coords: np.ndarray) -> FieldElem:
    return FieldElem(ctx, int(coords[0]), int(coords[1]) if ctx.l == 2 else 0)


class DiscriminantClass(Enum):
    SQUARE = "square"
    NONSQUARE = "nonsquare"


class MatGF:
    """
    Immutable dense matrix over a FieldCtx.
    """
    __slots__ = ("ctx", "data")
    __hash__ = None

    def __init__(self, ctx: FieldCtx, data: np.ndarray):
        arr = np.asarray(data)
        if arr.ndim != 3 or arr.shape[0] != ctx.l:
            raise ValueError(f"coordinate array must have shape ({ctx.l}, rows, cols), got {arr.shape}")
        arr = np.mod(arr, ctx.p).astype(_dtype(ctx.p))
        arr.setflags(write=False)
        self.ctx = ctx
        self.data = arr

    # -- constructors --------------------------------------------------
    @classmethod
    def from_ints(cls, ctx: FieldCtx, rows: Union[Sequence[Sequence[int]], np.ndarray]) -> "MatGF":
        """
        Matrix whose entries are the images of the given integers.
        """
        base = np.array(rows, dtype=object)
        if base.ndim != 2:
            raise ValueError("from_ints expects a 2-d array of integers")
        base = np.mod(base, ctx.p).astype(_dtype(ctx.p))
        parts = [base] + [np.zeros_like(base)] * (ctx.l - 1)
        return cls(ctx, np.stack(parts))

    @classmethod
    def from_elems(cls, ctx: FieldCtx, rows: Sequence[Sequence[FieldElem]]) -> "MatGF":
        r = len(rows)
        c = len(rows[0]) if r else 0
        data = np.zeros((ctx.l, r, c), dtype=_dtype(ctx.p))
        for i, row in enumerate(rows):
            if len(row) != c:
                raise ValueError("ragged rows")
            for j, e in enumerate(row):
                data[:, i, j] = _coords(e)
        return cls(ctx, data)

    @classmethod
    def zeros(cls, ctx: FieldCtx, rows: int, cols: int) -> "MatGF":
        return cls(ctx, np.zeros((ctx.l, rows, cols), dtype=_dtype(ctx.p)))

    @classmethod
    def identity(cls, ctx: FieldCtx, n: int) -> "MatGF":
        return cls.from_ints(ctx, np.eye(n, dtype=np.int64))

    @classmethod
    def ones(cls, ctx: FieldCtx, rows: int, cols: Optional[int] = None) -> "MatGF":
        return cls.from_ints(ctx, np.ones((rows, rows if cols is None else cols), dtype=np.int64))

    @classmethod
    def diagonal(cls, ctx: FieldCtx, entries: Sequence[FieldElem]) -> "MatGF":
        n = len(entries)
        data = np.zeros((ctx.l, n, n), dtype=_dtype(ctx.p))
        for i, e in enumerate(entries):
            data[:, i, i] = _coords(e)
        return cls(ctx, data)

    # -- shape and access ----------------------------------------------
    @property
    def rows(self) -> int:
        return self.data.shape[1]

    @property
    def cols(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @property
    def T(self) -> "MatGF":
        return MatGF(self.ctx, self.data.transpose(0, 2, 1))

    def __getitem__(self, ij: Tuple[int, int]) -> FieldElem:
        i, j = ij
        return _elem(self.ctx, self.data[:, i, j])

    def diagonal_entries(self) -> List[FieldElem]:
        return [self[i, i] for i in range(min(self.shape))]

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "MatGF":
        return MatGF(self.ctx, self.data[:, list(rows)][:, :, list(cols)])

    def in_base_field(self) -> bool:
        return self.ctx.l == 1 or not np.any(self.data[1])

    def over(self, ctx: FieldCtx) -> "MatGF":
        """
        Re-express the matrix over another degree of the same prime field.
        """
        if ctx.p != self.ctx.p:
            raise ValueError(f"cannot move a matrix from characteristic {self.ctx.p} to {ctx.p}")
        if ctx.l == self.ctx.l:
            return MatGF(ctx, self.data)
        if ctx.l == 1:
            if not self.in_base_field():
                raise ValueError("matrix has entries outside F_p")
            return MatGF(ctx, self.data[:1])
        return MatGF(ctx, np.stack([self.data[0], np.zeros_like(self.data[0])]))

    def base_ints(self) -> np.ndarray:
        """
        F_p coordinates as a 2-d integer array (entries must lie in F_p).
        """
        if not self.in_base_field():
            raise ValueError("matrix has entries outside F_p")
        return np.array(self.data[0])

    # -- algebra ---------------------------------------------------------
    def _check(self, other: "MatGF") -> None:
        if not isinstance(other, MatGF) or other.ctx != self.ctx:
            raise ValueError("matrices live over different fields")

    def __add__(self, other: "MatGF") -> "MatGF":
        self._check(other)
        return MatGF(self.ctx, _add(self.ctx, self.data, other.data))

    def __sub__(self, other: "MatGF") -> "MatGF":
        self._check(other)
        return MatGF(self.ctx, _sub(self.ctx, self.data, other.data))

    def __neg__(self) -> "MatGF":
        return MatGF(self.ctx, -self.data)

    def __matmul__(self, other: "MatGF") -> "MatGF":
        self._check(other)
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        return MatGF(self.ctx, _matmul(self.ctx, self.data, other.data))

    def hadamard(self, other: "MatGF") -> "MatGF":
        """
        Entrywise product.
        """
        self._check(other)
        return MatGF(self.ctx, _mul(self.ctx, self.data, other.data))

    def scale(self, alpha: Union[FieldElem, int]) -> "MatGF":
        if isinstance(alpha, int):
            alpha = self.ctx.elem(alpha)
        return MatGF(self.ctx, _mul(self.ctx, self.data, _coords(alpha)[:, None, None]))

    def __mul__(self, alpha: Union[FieldElem, int]) -> "MatGF":
        return self.scale(alpha)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MatGF):
            return NotImplemented
        return self.ctx == other.ctx and self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def is_square(self) -> bool:
        return self.rows == self.cols

    def is_symmetric(self) -> bool:
        return self.is_square() and bool(np.array_equal(self.data, self.data.transpose(0, 2, 1)))

    def is_zero(self) -> bool:
        return not np.any(self.data)

    def to_text_rows(self) -> List[List[str]]:
        return [[str(self[i, j]) for j in range(self.cols)] for i in range(self.rows)]

    def __repr__(self) -> str:
        return f"MatGF({self.rows}x{self.cols} over F_{self.ctx.q})"


class IntMat:
    """
    Rectangular matrix of arbitrary-precision integers.
    """
    __slots__ = ("data",)
    __hash__ = None

    def __init__(self, data: Union[Sequence[Sequence[int]], np.ndarray]):
        arr = np.array(data, dtype=object)
        if arr.ndim != 2:
            raise ValueError("IntMat expects a 2-d array")
        arr = np.vectorize(int, otypes=[object])(arr) if arr.size else arr
        arr.setflags(write=False)
        self.data = arr

    @classmethod
    def identity(cls, n: int) -> "IntMat":
        return cls(np.eye(n, dtype=np.int64))

    @classmethod
    def ones(cls, rows: int, cols: Optional[int] = None) -> "IntMat":
        return cls(np.ones((rows, rows if cols is None else cols), dtype=np.int64))

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @property
    def T(self) -> "IntMat":
        return IntMat(self.data.T)

    def __getitem__(self, ij: Tuple[int, int]) -> int:
        return int(self.data[ij])

    def __add__(self, other: "IntMat") -> "IntMat":
        return IntMat(self.data + other.data)

    def __sub__(self, other: "IntMat") -> "IntMat":
        return IntMat(self.data - other.data)

    def __neg__(self) -> "IntMat":
        return IntMat(-self.data)

    def __matmul__(self, other: "IntMat") -> "IntMat":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        return IntMat(self.data.dot(other.data))

    def scale(self, k: int) -> "IntMat":
        return IntMat(self.data * k)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntMat):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def is_symmetric(self) -> bool:
        return self.rows == self.cols and bool(np.array_equal(self.data, self.data.T))

    def reduce(self, ctx: FieldCtx) -> MatGF:
        """
        Image of the matrix over the field.
        """
        return MatGF.from_ints(ctx, self.data)

    def __repr__(self) -> str:
        return f"IntMat({self.rows}x{self.cols})"


# ---------------------------------------------------------
# Elimination
# ---------------------------------------------------------
def _row_echelon(ctx: FieldCtx, data: np.ndarray) -> Tuple[np.ndarray, List[int], FieldElem]:
    # returns (echelon form with unit pivots, pivot columns, signed product of pivots)
    A = np.array(data, dtype=_dtype(ctx.p))
    m, n = A.shape[1], A.shape[2]
    r = 0
    pivots: List[int] = []
    det = ctx.one()
    for c in range(n):
        if r == m:
            break
        nz = np.nonzero(np.any(A[:, r:, c] != 0, axis=0))[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            A[:, [r, piv], :] = A[:, [piv, r], :]
            det = -det
        pivot = _elem(ctx, A[:, r, c])
        det = det * pivot
        A[:, r, :] = _mul(ctx, A[:, r, :], _coords(pivot.inverse())[:, None])
        below = np.nonzero(np.any(A[:, r + 1:, c] != 0, axis=0))[0] + r + 1
        if below.size:
            f = A[:, below, c]
            A[:, below, :] = _sub(ctx, A[:, below, :], _mul(ctx, f[:, :, None], A[:, r, :][:, None, :]))
        pivots.append(c)
        r += 1
    return A, pivots, det


def row_echelon(M: MatGF) -> Tuple[MatGF, List[int]]:
    """
    Row echelon form with unit pivots and the pivot column indices.
    """
    A, pivots, _ = _row_echelon(M.ctx, M.data)
    return MatGF(M.ctx, A), pivots


def rank(M: MatGF) -> int:
    """
    Rank over the matrix's field by exact Gaussian elimination.
    """
    if M.rows == 0 or M.cols == 0:
        return 0
    return len(_row_echelon(M.ctx, M.data)[1])


def p_rank(M: IntMat, p: int) -> int:
    """
    Rank of the mod-p reduction of an integer matrix.
    """
    return rank(M.reduce(make_field(p)))


def determinant(M: MatGF) -> FieldElem:
    if not M.is_square():
        raise ValueError(f"determinant of a non-square {M.rows}x{M.cols} matrix")
    if M.rows == 0:
        return M.ctx.one()
    _, pivots, det = _row_echelon(M.ctx, M.data)
    return det if len(pivots) == M.rows else M.ctx.zero()


def rational_rank(M: IntMat) -> int:
    """
    Rank over Q by fraction-exact elimination.
    """
    A = [[Fraction(int(v)) for v in row] for row in M.data]
    m, n = M.rows, M.cols
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        for i in range(r + 1, m):
            if A[i][c] != 0:
                f = A[i][c] / A[r][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[r])]
        r += 1
        if r == m:
            break
    return r


def discriminant_class(M: MatGF) -> DiscriminantClass:
    """
    Square class of the determinant of a basic submatrix.

    The basic submatrix is the principal submatrix on the lowest-index
    column basis of the column space.
    """
    if not M.is_symmetric():
        raise ValueError("discriminant_class needs a symmetric matrix")
    if M.is_zero():
        raise ValueError("discriminant_class is undefined for the zero matrix")
    _, pivots, _ = _row_echelon(M.ctx, M.data)
    det = determinant(M.submatrix(pivots, pivots))
    return DiscriminantClass.SQUARE if is_square(det) else DiscriminantClass.NONSQUARE


# ---------------------------------------------------------
# Congruence factorization
# ---------------------------------------------------------
def _congruence_diagonalize(ctx: FieldCtx, data: np.ndarray) -> Tuple[List[FieldElem], np.ndarray]:
    # Maintains A = E^T G E and Q = E^{-1}, so G = Q^T A Q throughout.
    p = ctx.p
    A = np.array(data, dtype=_dtype(p))
    n = A.shape[1]
    Q = np.zeros_like(A)
    Q[0] = np.eye(n, dtype=A.dtype)
    r = 0
    while r < n:
        block = A[:, r:, r:]
        if not np.any(block):
            break
        diag = np.diagonal(A, axis1=1, axis2=2)[:, r:]
        nz = np.nonzero(np.any(diag != 0, axis=0))[0]
        if nz.size:
            j = r + int(nz[0])
        else:
            # zero diagonal: fold column j into column i so that A[i, i] = 2 A[i, j]
            i, j = (r + int(v) for v in np.argwhere(np.any(block != 0, axis=0))[0])
            A[:, :, i] = (A[:, :, i] + A[:, :, j]) % p
            A[:, i, :] = (A[:, i, :] + A[:, j, :]) % p
            Q[:, j, :] = (Q[:, j, :] - Q[:, i, :]) % p
            j = i
        if j != r:
            A[:, [r, j], :] = A[:, [j, r], :]
            A[:, :, [r, j]] = A[:, :, [j, r]]
            Q[:, [r, j], :] = Q[:, [j, r], :]
        inv = _coords(_elem(ctx, A[:, r, r]).inverse())
        f = (-_mul(ctx, A[:, r, r + 1:], inv[:, None])) % p
        A[:, :, r + 1:] = _add(ctx, A[:, :, r + 1:], _mul(ctx, A[:, :, r][:, :, None], f[:, None, :]))
        A[:, r + 1:, :] = _add(ctx, A[:, r + 1:, :], _mul(ctx, f[:, :, None], A[:, r, :][:, None, :]))
        Q[:, r, :] = _sub(ctx, Q[:, r, :], _matmul(ctx, f[:, None, :], Q[:, r + 1:, :])[:, 0, :])
        r += 1
    pivots = [_elem(ctx, A[:, i, i]) for i in range(r)]
    return pivots, Q[:, :r, :]


def _unit_pair(zeta: FieldElem) -> Tuple[FieldElem, FieldElem]:
    # x, y with zeta * (x^2 + y^2) = 1
    target = zeta.inverse()
    for x in zeta.ctx.elements():
        roots = sqrt(target - x * x)
        if roots is not None:
            return x, roots[0]
    raise ArithmeticError(f"{target} is not a sum of two squares")


def gram_factor(G: MatGF) -> Tuple[MatGF, MatGF]:
    """
    Factor a symmetric matrix as the Gram matrix of a frame.

    Parameters
    ----------
    G : MatGF
        Symmetric matrix of rank d >= 1.

    Returns
    -------
    Tuple[MatGF, MatGF]
        X of shape d x n and the diagonal geometry Gram M (all ones, or
        ones followed by the field's non-square) with X^T M X = G.
    """
    if not G.is_symmetric():
        raise ValueError("gram_factor needs a symmetric matrix")
    ctx = G.ctx
    pivots, Q = _congruence_diagonalize(ctx, G.data)
    if not pivots:
        raise ValueError("gram_factor needs a matrix of rank at least 1")
    zeta = ctx.nonsquare()
    rows = [Q[:, i, :].copy() for i in range(len(pivots))]
    odd: List[int] = []
    for i, d_i in enumerate(pivots):
        if is_square(d_i):
            u = sqrt(d_i)[0]
        else:
            u = sqrt(d_i / zeta)[0]
            odd.append(i)
        rows[i] = _mul(ctx, rows[i], _coords(u)[:, None])
    if len(odd) >= 2:
        x, y = _unit_pair(zeta)
        cx, cy, cz = _coords(x)[:, None], _coords(y)[:, None], _coords(zeta)[:, None]
        for i, j in zip(odd[0::2], odd[1::2]):
            ri, rj = rows[i], rows[j]
            rows[i] = _mul(ctx, _add(ctx, _mul(ctx, ri, cx), _mul(ctx, rj, cy)), cz)
            rows[j] = _mul(ctx, _sub(ctx, _mul(ctx, rj, cx), _mul(ctx, ri, cy)), cz)
        odd = odd[-1:] if len(odd) % 2 else []
    order = [i for i in range(len(rows)) if i not in odd] + odd
    X = MatGF(ctx, np.stack([rows[i] for i in order], axis=1))
    geometry = [ctx.one()] * (len(order) - len(odd)) + [zeta] * len(odd)
    logger.debug("gram_factor: rank %d, geometry %s", len(order), "nonsquare" if odd else "square")
    return X, MatGF.diagonal(ctx, geometry)


# ---------------------------------------------------------
# Matrix files
# ---------------------------------------------------------
def format_matrix(M: Union[MatGF, IntMat]) -> str:
    if isinstance(M, IntMat):
        lines = [f"0 0 {M.rows} {M.cols}"]
        lines += [" ".join(str(int(v)) for v in row) for row in M.data]
    else:
        lines = [f"{M.ctx.p} {M.ctx.l} {M.rows} {M.cols}"]
        lines += [" ".join(row) for row in M.to_text_rows()]
    return "\n".join(lines) + "\n"


def write_matrix(M: Union[MatGF, IntMat], path: Union[str, Path]) -> None:
    Path(path).write_text(format_matrix(M))


def parse_matrix(text: str, source: str = "<text>") -> Union[MatGF, IntMat]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{source}: empty matrix file")
    try:
        p, l, r, c = (int(v) for v in lines[0].split())
    except ValueError:
        raise ValueError(f"{source}:1: header must be 'p l rows cols'")
    if len(lines) - 1 != r:
        raise ValueError(f"{source}: expected {r} rows, found {len(lines) - 1}")
    tokens = [ln.split() for ln in lines[1:]]
    for k, row in enumerate(tokens, start=2):
        if len(row) != c:
            raise ValueError(f"{source}:{k}: expected {c} entries, found {len(row)}")
    if p == 0 and l == 0:
        try:
            return IntMat([[int(v) for v in row] for row in tokens] if r else np.zeros((0, c), dtype=object))
        except ValueError:
            raise ValueError(f"{source}: integer matrix has a non-integer entry")
    ctx = make_field(p, l)
    entries = []
    for k, row in enumerate(tokens, start=2):
        try:
            entries.append([ctx.parse(v) for v in row])
        except ValueError as e:
            raise ValueError(f"{source}:{k}: {e}")
    if r == 0:
        return MatGF.zeros(ctx, 0, c)
    return MatGF.from_elems(ctx, entries)


def read_matrix(path: Union[str, Path]) -> Union[MatGF, IntMat]:
    """
    Read a matrix file: header 'p l rows cols' ('0 0' for integers), then rows.
    """
    path = Path(path)
    return parse_matrix(path.read_text(), str(path))
