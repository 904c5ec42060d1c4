"""
Exact arithmetic in F_p and F_{p^2} = F_p[t]/(t^2 - nu) for odd primes p.

Elements are value objects bound to an immutable FieldCtx. The textual
encoding is the decimal integer x for F_p and ``x+y*t`` for F_{p^2}.
"""
import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterator, Optional, Tuple, Union

from utils import require_odd_prime

logger = logging.getLogger(__name__)

# sqrt switches from a lookup table to Tonelli-Shanks above this prime
EXHAUSTIVE_SQRT_LIMIT = 256

_ELEM_RE = re.compile(r"^\s*(?:(\d+)\s*\+\s*)?(?:(\d+)\s*\*\s*)?t\s*$")


def least_nonresidue(p: int) -> int:
    """
    Least quadratic non-residue of F_p in [2, p).
    """
    for x in range(2, p):
        if pow(x, (p - 1) // 2, p) == p - 1:
            return x
    raise ValueError(f"no quadratic non-residue mod {p}")


@dataclass(frozen=True)
class FieldCtx:
    """
    A finite field F_{p^l}, l in {1, 2}.

    For l = 2 the field is F_p[t]/(t^2 - nu) with nu the least non-residue
    of F_p; for l = 1 nu is None.
    """
    p: int
    l: int = 1
    nu: Optional[int] = None

    @property
    def q(self) -> int:
        return self.p ** self.l

    @property
    def nu_value(self) -> int:
        # t^2 = nu; 0 in the prime field so the F_{p^2} formulas degrade cleanly
        return self.nu if self.nu is not None else 0

    def elem(self, x: int, y: int = 0) -> "FieldElem":
        if self.l == 1 and y % self.p:
            raise ValueError(f"F_{self.p} has no t-component")
        return FieldElem(self, x % self.p, y % self.p)

    def zero(self) -> "FieldElem":
        return FieldElem(self, 0, 0)

    def one(self) -> "FieldElem":
        return FieldElem(self, 1, 0)

    def base(self) -> "FieldCtx":
        return FieldCtx(self.p, 1, None)

    def elements(self) -> Iterator["FieldElem"]:
        """
        All elements in canonical order (index x + p*y).
        """
        for y in range(self.p if self.l == 2 else 1):
            for x in range(self.p):
                yield FieldElem(self, x, y)

    def nonsquare(self) -> "FieldElem":
        """
        Least non-square of the field in canonical order.
        """
        return _nonsquare(self)

    def format(self, e: "FieldElem") -> str:
        if e.y:
            return f"{e.x}+{e.y}*t"
        return str(e.x)

    def parse(self, text: str) -> "FieldElem":
        """
        Parse the textual element encoding; values must already be reduced.
        """
        token = text.strip()
        if token.lstrip("-").isdigit():
            x, y = int(token), 0
        else:
            m = _ELEM_RE.match(token)
            if m is None:
                raise ValueError(f"malformed field element {text!r}")
            x = int(m.group(1) or 0)
            y = int(m.group(2)) if m.group(2) is not None else 1
            if self.l == 1:
                raise ValueError(f"element {text!r} has a t-component but the field is F_{self.p}")
        if not (0 <= x < self.p and 0 <= y < self.p):
            raise ValueError(f"element {text!r} is not reduced mod {self.p}")
        return FieldElem(self, x, y)


@dataclass(frozen=True, eq=False)
class FieldElem:
    ctx: FieldCtx
    x: int
    y: int = 0

    def _coerce(self, other: Union["FieldElem", int]) -> "FieldElem":
        if isinstance(other, FieldElem):
            if other.ctx != self.ctx:
                raise ValueError(f"field mismatch: F_{self.ctx.q} vs F_{other.ctx.q}")
            return other
        if isinstance(other, int):
            return lift_int(other, self.ctx)
        raise TypeError(f"cannot combine a field element with {type(other).__name__}")

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int):
            other = lift_int(other, self.ctx)
        if not isinstance(other, FieldElem):
            return NotImplemented
        return self.ctx == other.ctx and self.x == other.x and self.y == other.y

    def __hash__(self) -> int:
        return hash((self.ctx, self.x, self.y))

    def __add__(self, other):
        o = self._coerce(other)
        return FieldElem(self.ctx, (self.x + o.x) % self.ctx.p, (self.y + o.y) % self.ctx.p)

    __radd__ = __add__

    def __neg__(self) -> "FieldElem":
        return FieldElem(self.ctx, -self.x % self.ctx.p, -self.y % self.ctx.p)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        p, nu = self.ctx.p, self.ctx.nu_value
        return FieldElem(
            self.ctx,
            (self.x * o.x + nu * self.y * o.y) % p,
            (self.x * o.y + self.y * o.x) % p,
        )

    __rmul__ = __mul__

    def norm(self) -> int:
        """
        Norm down to F_p: x^2 - nu*y^2.
        """
        p = self.ctx.p
        return (self.x * self.x - self.ctx.nu_value * self.y * self.y) % p

    def inverse(self) -> "FieldElem":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        p = self.ctx.p
        n_inv = pow(self.norm(), -1, p)
        return FieldElem(self.ctx, self.x * n_inv % p, -self.y * n_inv % p)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int) -> "FieldElem":
        base, result = self, self.ctx.one()
        if k < 0:
            base, k = self.inverse(), -k
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def is_zero(self) -> bool:
        return self.x == 0 and self.y == 0

    def in_base_field(self) -> bool:
        return self.y == 0

    def index(self) -> int:
        return self.x + self.ctx.p * self.y

    def __int__(self) -> int:
        if self.y:
            raise ValueError(f"{self} is not in F_{self.ctx.p}")
        return self.x

    def __str__(self) -> str:
        return self.ctx.format(self)

    def __repr__(self) -> str:
        return f"FieldElem({self.ctx.format(self)} in F_{self.ctx.q})"


def make_field(p: int, l: int = 1) -> FieldCtx:
    """
    Canonical field context.

    Parameters
    ----------
    p : int
        Odd prime.
    l : int
        Degree, 1 or 2.

    Returns
    -------
    FieldCtx
        F_p, or F_{p^2} with nu the least non-residue in [2, p).
    """
    require_odd_prime(p)
    if l not in (1, 2):
        raise ValueError(f"degree l must be 1 or 2, got {l}")
    return FieldCtx(p, l, least_nonresidue(p) if l == 2 else None)


def lift_int(k: int, ctx: FieldCtx) -> FieldElem:
    """
    Image of an integer under Z -> F_{p^l}.
    """
    return FieldElem(ctx, k % ctx.p, 0)


def is_square(x: FieldElem) -> bool:
    if x.is_zero():
        return True
    p = x.ctx.p
    if x.ctx.l == 1:
        return pow(x.x, (p - 1) // 2, p) == 1
    # squares of F_{p^2} are exactly the elements of square norm
    return pow(x.norm(), (p - 1) // 2, p) == 1


def _tonelli_shanks(n: int, p: int) -> int:
    n %= p
    if n == 0:
        return 0
    if p % 4 == 3:
        return pow(n, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = least_nonresidue(p)
    m, c, t, r = s, pow(z, q, p), pow(n, q, p), pow(n, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


@lru_cache(maxsize=None)
def _sqrt_table(ctx: FieldCtx) -> Dict[Tuple[int, int], FieldElem]:
    table: Dict[Tuple[int, int], FieldElem] = {}
    for r in ctx.elements():
        sq = r * r
        key = (sq.x, sq.y)
        if key not in table or r.index() < table[key].index():
            table[key] = r
    return table


@lru_cache(maxsize=None)
def _nonsquare(ctx: FieldCtx) -> FieldElem:
    if ctx.l == 1:
        return FieldElem(ctx, least_nonresidue(ctx.p), 0)
    for e in ctx.elements():
        if not is_square(e):
            return e
    raise ValueError(f"F_{ctx.q} has no non-square")


def _base_sqrt(n: int, p: int) -> Optional[int]:
    n %= p
    if n and pow(n, (p - 1) // 2, p) != 1:
        return None
    return _tonelli_shanks(n, p)


def _large_sqrt(x: FieldElem) -> Optional[FieldElem]:
    ctx, p = x.ctx, x.ctx.p
    if ctx.l == 1:
        r = _base_sqrt(x.x, p)
        return None if r is None else FieldElem(ctx, r, 0)
    if x.y == 0:
        r = _base_sqrt(x.x, p)
        if r is not None:
            return FieldElem(ctx, r, 0)
        # x/nu is a square in F_p, and (z*t)^2 = z^2 * nu
        z = _base_sqrt(x.x * pow(ctx.nu_value, -1, p), p)
        return FieldElem(ctx, 0, z)
    n = _base_sqrt(x.norm(), p)
    if n is None:
        return None
    half = pow(2, -1, p)
    for root in (n, -n % p):
        a = _base_sqrt((x.x + root) * half, p)
        if a:
            b = x.y * pow(2 * a, -1, p) % p
            return FieldElem(ctx, a, b)
    raise ArithmeticError(f"square root of {x} not found despite square norm")


def sqrt(x: FieldElem) -> Optional[Tuple[FieldElem, ...]]:
    """
    Square roots of x.

    Parameters
    ----------
    x : FieldElem
        Any element of a valid field.

    Returns
    -------
    Optional[Tuple[FieldElem, ...]]
        (0,) for x = 0, the pair (r, -r) in canonical order for a nonzero
        square, None for a non-square.
    """
    if x.is_zero():
        return (x,)
    if not is_square(x):
        return None
    if x.ctx.p <= EXHAUSTIVE_SQRT_LIMIT:
        r = _sqrt_table(x.ctx)[(x.x, x.y)]
    else:
        r = _large_sqrt(x)
    return tuple(sorted((r, -r), key=FieldElem.index))
