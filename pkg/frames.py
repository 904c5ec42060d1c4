"""
Equiangular tight frame verification and transformation over F_q.

A Gram matrix G certifies an (a,b,c)-ETF of n vectors in dimension
d = rank G when it is symmetric with constant diagonal a, constant squared
off-diagonal b and G^2 = cG.
"""
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from gf import FieldCtx, FieldElem, lift_int, make_field, sqrt
from matgf import (DiscriminantClass, IntMat, MatGF, discriminant_class, rank,
                   read_matrix, write_matrix)
from utils import is_perfect_square, odd_primes_up_to

logger = logging.getLogger(__name__)

UNBOUNDED = "unbounded"


class TheoremViolation(RuntimeError):
    """
    Raised when a computed object contradicts a proven statement; always a bug.
    """


class GerzonStatus(Enum):
    WITHIN = "within"
    AT_BOUND = "at-bound"
    VIOLATION = "violation"


class IntegralityResult(Enum):
    PASS = "pass"
    FAIL = "fail"
    INAPPLICABLE = "inapplicable"


@dataclass(frozen=True)
class FrameParams:
    a: FieldElem
    b: FieldElem
    c: FieldElem
    d: int
    n: int

    @property
    def ctx(self) -> FieldCtx:
        return self.a.ctx

    @property
    def q(self) -> int:
        return self.ctx.q

    def normalized(self) -> Tuple[FieldElem, FieldElem]:
        """
        The lexicographically smaller of (a, c) and (-a, -c).
        """
        return min((self.a, self.c), (-self.a, -self.c), key=lambda ac: (ac[0].index(), ac[1].index()))

    def __str__(self) -> str:
        return f"({self.a},{self.b},{self.c})-ETF of {self.n} vectors in dimension {self.d} over F_{self.q}"


@dataclass(frozen=True, eq=False)
class EtfCertificate:
    params: FrameParams
    discriminant: DiscriminantClass
    gram: MatGF
    provenance: str = "verify"

    def with_provenance(self, tag: str) -> "EtfCertificate":
        return replace(self, provenance=tag)

    def same_params(self, other: "EtfCertificate") -> bool:
        return self.params == other.params and self.discriminant == other.discriminant


def _offdiag_square(G: MatGF) -> Optional[FieldElem]:
    n = G.rows
    if n == 1:
        return G.ctx.zero()
    sq = G.hadamard(G).data
    mask = ~np.eye(n, dtype=bool)
    vals = sq[:, mask]
    if np.any(vals != vals[:, :1]):
        return None
    return FieldElem(G.ctx, int(vals[0, 0]), int(vals[1, 0]) if G.ctx.l == 2 else 0)


def verify_etf(G: MatGF, provenance: str = "verify") -> Optional[EtfCertificate]:
    """
    Certify G as the Gram matrix of an ETF.

    Parameters
    ----------
    G : MatGF
        Square matrix over F_q.
    provenance : str
        Tag recorded in the certificate.

    Returns
    -------
    Optional[EtfCertificate]
        The certificate, or None when G is not an ETF Gram matrix.
    """
    if not G.is_square():
        raise ValueError(f"verify_etf needs a square matrix, got {G.rows}x{G.cols}")
    n = G.rows
    if n == 0 or not G.is_symmetric():
        return None
    diag = np.diagonal(G.data, axis1=1, axis2=2)
    if np.any(diag != diag[:, :1]):
        return None
    a = G[0, 0]
    b = _offdiag_square(G)
    if b is None:
        return None
    G2 = G @ G
    if G2.is_zero():
        c = G.ctx.zero()
    else:
        if G.is_zero():
            return None
        i, j = (int(v) for v in np.argwhere(np.any(G.data != 0, axis=0))[0])
        c = G2[i, j] / G[i, j]
        if G2 != G.scale(c):
            return None
    d = rank(G)
    if d == 0:
        return None
    params = FrameParams(a, b, c, d, n)
    if a * n != c * d or welch_residual(params) != 0:
        raise TheoremViolation(f"tight equiangular Gram violates na = dc or Welch: {params}")
    return EtfCertificate(params, discriminant_class(G), G, provenance)


def welch_residual(params: FrameParams) -> FieldElem:
    """
    a(c-a) - (n-1)b.
    """
    return params.a * (params.c - params.a) - params.b * (params.n - 1)


def gerzon_check(d: int, n: int) -> GerzonStatus:
    bound = d * (d + 1) // 2
    if n < bound:
        return GerzonStatus.WITHIN
    if n == bound:
        return GerzonStatus.AT_BOUND
    return GerzonStatus.VIOLATION


def naimark(cert: EtfCertificate) -> EtfCertificate:
    """
    Naimark complement cI - G: a (c-a, b, c)-ETF of rank n-d.
    """
    c = cert.params.c
    if c.is_zero():
        raise ValueError("Naimark complement needs c != 0")
    G = cert.gram
    out = verify_etf(MatGF.identity(G.ctx, G.rows).scale(c) - G, f"naimark({cert.provenance})")
    if out is None or out.params.d != cert.params.n - cert.params.d:
        raise TheoremViolation("Naimark complement failed to certify with rank n-d")
    return out


def rescale(G: MatGF, alpha: Union[FieldElem, int]) -> MatGF:
    """
    alpha*G; an (a,b,c) Gram becomes (alpha a, alpha^2 b, alpha c).
    """
    if isinstance(alpha, int):
        alpha = lift_int(alpha, G.ctx)
    if alpha.is_zero():
        raise ValueError("rescale needs a nonzero scalar")
    return G.scale(alpha)


def normalize_switching(G: MatGF) -> MatGF:
    """
    Switch frame vectors by signs so that row 0 is +1 off the diagonal.
    """
    n = G.rows
    if n < 2:
        raise ValueError("normalize_switching needs at least two vectors")
    one = G.ctx.one()
    signs = np.ones(n, dtype=np.int64)
    for j in range(1, n):
        e = G[0, j]
        if e == one:
            continue
        if e == -one:
            signs[j] = -1
        elif e.is_zero():
            raise ValueError(f"entry (0,{j}) is 0; switching normalization needs b = 1")
        else:
            raise ValueError(f"entry (0,{j}) = {e} is not +-1; switching normalization needs b = 1")
    return MatGF(G.ctx, G.data * np.outer(signs, signs)[None])


def _check_signature(S: IntMat) -> None:
    if S.rows != S.cols or S.rows < 2:
        raise ValueError("a signature matrix is square with at least two rows")
    if not S.is_symmetric():
        raise ValueError("signature matrix is not symmetric")
    A = np.array(S.data, dtype=np.int64)
    if np.any(np.diagonal(A)):
        raise ValueError("signature matrix has a nonzero diagonal")
    off = A[~np.eye(S.rows, dtype=bool)]
    if np.any(np.abs(off) != 1):
        raise ValueError("signature matrix has an off-diagonal entry other than +-1")


def project_real_signature(S: IntMat, d: int, p: int, l: int = 1,
                           delta: Optional[FieldElem] = None) -> EtfCertificate:
    """
    Project the signature matrix of a real d x n ETF into F_{p^l}.

    Parameters
    ----------
    S : IntMat
        Symmetric {0, +-1} signature matrix with zero diagonal.
    d : int
        Real dimension of the ETF that S describes.
    p, l : int
        Target field F_{p^l}.
    delta : FieldElem, optional
        Square root of n-1 to use when n = 2d; found by sqrt otherwise.

    Returns
    -------
    EtfCertificate
        Certificate for S + aI over F_{p^l}; its rank is at most d and
        equals d whenever c != 0.
    """
    _check_signature(S)
    n = S.rows
    if not 1 <= d < n:
        raise ValueError(f"real dimension must satisfy 1 <= d < n, got d={d}, n={n}")
    ctx = make_field(p, l)
    S2 = S @ S
    if n == 2 * d:
        if S2 != IntMat.identity(n).scale(n - 1):
            raise ValueError(f"S^2 != (n-1)I: not the signature of a real {d}x{n} ETF")
        target = lift_int(n - 1, ctx)
        if delta is None:
            roots = sqrt(target)
            if roots is None:
                raise ValueError(f"n-1 = {n - 1} is a non-square in F_{ctx.q}")
            delta = roots[0]
        elif delta.ctx != ctx or delta * delta != target:
            raise ValueError(f"delta = {delta} does not square to n-1 in F_{ctx.q}")
        a, c = delta, delta * 2
    else:
        num = d * (n - 1)
        if num % (n - d) or not is_perfect_square(num // (n - d)):
            raise ValueError(f"d(n-1)/(n-d) is not a perfect square for d={d}, n={n}")
        a_hat = math.isqrt(num // (n - d))
        if (n * a_hat) % d:
            raise ValueError(f"n*a/d is not an integer for d={d}, n={n}")
        c_hat = n * a_hat // d
        expected = S.scale(c_hat - 2 * a_hat) + IntMat.identity(n).scale(a_hat * (c_hat - a_hat))
        if S2 != expected:
            raise ValueError(f"S does not satisfy the minimal polynomial of a real {d}x{n} ETF")
        a, c = lift_int(a_hat, ctx), lift_int(c_hat, ctx)
    G = S.reduce(ctx) + MatGF.identity(ctx, n).scale(a)
    cert = verify_etf(G, "project-real")
    if cert is None or cert.params.a != a or cert.params.c != c:
        raise TheoremViolation("projected real signature did not certify with the predicted (a, c)")
    if cert.params.d > d or (not c.is_zero() and cert.params.d != d):
        raise TheoremViolation(f"projected rank {cert.params.d} inconsistent with real dimension {d}")
    logger.info("projected real %dx%d ETF to F_%d: rank %d", d, n, ctx.q, cert.params.d)
    return cert


def descend_base_field(cert: EtfCertificate) -> Tuple[EtfCertificate, int]:
    """
    Re-express an (a,1,c)-ETF over the smallest F_{p^j}, j in {1, 2}.
    """
    params = cert.params
    if params.b != 1:
        raise ValueError("descend_base_field needs b = 1")
    j = 1 if params.a.in_base_field() and params.c.in_base_field() else 2
    if j == 2 and (params.n != 2 * params.d or params.c.is_zero()):
        raise TheoremViolation(f"a, c outside F_p although n != 2d or c = 0: {params}")
    ctx = cert.gram.ctx
    if ctx.l == 1 or j == 2:
        return cert, j
    n = params.n
    S = cert.gram - MatGF.identity(ctx, n).scale(params.a)
    if not S.in_base_field():
        raise TheoremViolation("signature matrix has entries outside F_p")
    base = ctx.base()
    G = S.over(base) + MatGF.identity(base, n).scale(FieldElem(base, params.a.x))
    out = verify_etf(G, f"descend({cert.provenance})")
    if out is None or out.params.d != params.d:
        raise TheoremViolation("descended Gram failed to re-certify")
    return out, 1


def integrality_test(d: int, n: int, p: int) -> IntegralityResult:
    """
    Necessary condition for an ETF with n != d mod p over F_p: the ratio
    d(n-1)/(n-d) must be a nonzero square.
    """
    if n in (d, 2 * d):
        raise ValueError(f"integrality test needs n not in {{d, 2d}}, got d={d}, n={n}")
    if d % p == 0 or n % p == 1:
        return IntegralityResult.INAPPLICABLE
    if (n - d) % p == 0:
        return IntegralityResult.FAIL
    ratio = d * (n - 1) * pow(n - d, -1, p) % p
    return IntegralityResult.PASS if pow(ratio, (p - 1) // 2, p) == 1 else IntegralityResult.FAIL


def admissible_a(d: int, n: int, p: int) -> List[int]:
    """
    Values of a in F_p allowed for an (a,1,c)-ETF with d, n.

    When p divides both d and n the trace and Welch relations say nothing
    and every a is kept; otherwise a is restricted to solutions of
    na = dc and a(c-a) = n-1.
    """
    if d % p == 0 and n % p == 0:
        return list(range(p))
    found = set()
    for a in range(p):
        for c in range(p):
            if (n * a - d * c) % p == 0 and (a * (c - a) - (n - 1)) % p == 0:
                found.add(a)
    return sorted(found)


def candidate_primes(d: int, n: int, real_exists: bool) -> Union[List[int], str]:
    """
    Odd primes p <= 2n-5 at which an n-vector ETF in dimension d is not
    excluded by integrality or the Welch/trace relations.

    Returns UNBOUNDED when a real ETF exists, since then no prime is excluded.
    """
    if real_exists:
        return UNBOUNDED
    out = []
    for p in odd_primes_up_to(2 * n - 5):
        if n not in (d, 2 * d) and integrality_test(d, n, p) is IntegralityResult.FAIL:
            continue
        if not admissible_a(d, n, p):
            continue
        out.append(p)
    logger.debug("candidate primes for (%d,%d): %s", d, n, out)
    return out


def lift_to_real(cert: EtfCertificate) -> Tuple[IntMat, int]:
    """
    Lift an (a,1,c)-ETF over F_p with p > 2n-5 to a real ETF.

    Returns the integer signature matrix and the real dimension it defines,
    which is d or n-d.
    """
    params = cert.params
    ctx = cert.gram.ctx
    n, p = params.n, ctx.p
    if ctx.l != 1 or params.b != 1:
        raise ValueError("lift_to_real needs an (a,1,c)-ETF over a prime field")
    if p <= 2 * n - 5:
        raise ValueError(f"lift_to_real needs p > 2n-5 = {2 * n - 5}, got p = {p}")
    S = (cert.gram - MatGF.identity(ctx, n).scale(params.a)).base_ints()
    S_hat = IntMat(np.where(S > p // 2, S - p, S))
    S2 = S_hat @ S_hat
    beta = S2[0, 1] * S_hat[0, 1]
    if S2 != S_hat.scale(beta) + IntMat.identity(n).scale(n - 1):
        raise TheoremViolation("signature does not lift to a two-eigenvalue integer matrix")
    disc = beta * beta + 4 * (n - 1)
    if is_perfect_square(disc):
        root = math.isqrt(disc)
        num = n * (root - beta)
        if num % (2 * root):
            raise TheoremViolation("non-integral real multiplicity")
        real_d = num // (2 * root)
    else:
        if beta != 0:
            raise TheoremViolation("irrational eigenvalues with unbalanced multiplicities")
        real_d = n // 2
    if real_d not in (params.d, n - params.d):
        raise TheoremViolation(f"real dimension {real_d} is neither d nor n-d")
    return S_hat, real_d


# ---------------------------------------------------------
# Certificate records
# ---------------------------------------------------------
def certificate_record(cert: EtfCertificate, sign: str = "lex") -> Dict[str, object]:
    """
    Flat record in the table schema; sign is 'lex' or 'raw'.
    """
    params = cert.params
    a, c = params.normalized() if sign == "lex" and params.b == 1 else (params.a, params.c)
    return {
        "p": params.ctx.p,
        "l": params.ctx.l,
        "d": params.d,
        "n": params.n,
        "a": str(a),
        "b": str(params.b),
        "c": str(c),
        "discriminant": cert.discriminant.value,
        "gerzon": gerzon_check(params.d, params.n).value,
        "provenance": cert.provenance,
    }


def save_certificate(cert: EtfCertificate, path: Union[str, Path]) -> Path:
    """
    Write the certificate record and its Gram file next to it.
    """
    path = Path(path)
    gram_path = path.with_name(path.stem + ".gram")
    write_matrix(cert.gram, gram_path)
    params = cert.params
    fields = [
        ("p", params.ctx.p), ("l", params.ctx.l), ("a", params.a), ("b", params.b), ("c", params.c),
        ("d", params.d), ("n", params.n), ("discriminant", cert.discriminant.value),
        ("provenance", cert.provenance), ("gram", gram_path.name),
    ]
    path.write_text("".join(f"{k}: {v}\n" for k, v in fields))
    return gram_path


def read_certificate_record(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    record: Dict[str, str] = {}
    for k, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ValueError(f"{path}:{k}: expected 'key: value'")
        record[key.strip()] = value.strip()
    missing = {"p", "l", "a", "b", "c", "d", "n", "discriminant", "provenance", "gram"} - record.keys()
    if missing:
        raise ValueError(f"{path}: missing fields {sorted(missing)}")
    return record


def load_certificate(path: Union[str, Path]) -> EtfCertificate:
    """
    Read a certificate record, re-verify its Gram file and check that the
    recorded fields match.
    """
    path = Path(path)
    record = read_certificate_record(path)
    G = read_matrix(path.parent / record["gram"])
    if not isinstance(G, MatGF):
        raise ValueError(f"{path}: Gram file holds an integer matrix")
    cert = verify_etf(G, record["provenance"])
    if cert is None:
        raise ValueError(f"{path}: Gram matrix is not an ETF")
    params, ctx = cert.params, G.ctx
    recorded = (int(record["p"]), int(record["l"]), ctx.parse(record["a"]), ctx.parse(record["b"]),
                ctx.parse(record["c"]), int(record["d"]), int(record["n"]), record["discriminant"])
    actual = (ctx.p, ctx.l, params.a, params.b, params.c, params.d, params.n, cert.discriminant.value)
    if recorded != actual:
        raise ValueError(f"{path}: recorded fields do not match the Gram matrix")
    return cert
