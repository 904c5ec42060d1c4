"""
ETFs from strongly regular graphs: the bordered and centroidal Gram
constructions, the modular Seidel-Waldron pair, the triangular Gerzon family,
the Steiner modular-Hadamard frame and the SRG parameter scan.
"""
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import partial
from itertools import combinations
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from frames import (EtfCertificate, TheoremViolation, normalize_switching,
                    verify_etf)
from gf import lift_int, make_field, sqrt
from graphs import (Graph, ModularSrgParams, SrgParams, check_modular_srg,
                    check_srg, generate, registry_graph_for, seidel_matrix,
                    srg_spectrum)
from matgf import IntMat, MatGF
from utils import (odd_prime_divisors, odd_primes_up_to, p_adic_valuation,
                   parallel_map, require_odd_prime)

logger = logging.getLogger(__name__)

BORDERED = "bordered"
CENTROIDAL = "centroidal"

# prime bound used when every hypothesis quantity of a row vanishes
DEFAULT_PMAX = 73

SIGN_CONVENTIONS = ("theorem", "lex")

SCAN_COLUMNS = ["v", "k", "lambda", "mu", "p", "d", "d_status", "n", "a", "c", "theorem", "flags"]


class DStatus(Enum):
    EXACT = "exact"
    BOUND = "bound"
    COMPUTED = "computed-from-graph"


def get_available_modes() -> Dict[str, str]:
    """
    Graph-to-ETF constructions and what they build.
    """
    return {
        BORDERED: "[[2r+1, 1^T], [1, S+(2r+1)I]]: n = v+1 vectors",
        CENTROIDAL: "S+(2r+1)I: n = v vectors with the all-ones eigenvector",
        "seidel-waldron": "[[0, 1^T], [1, S]] + aI for both roots delta of the SRG_p condition",
    }


@dataclass(frozen=True)
class ConstructionPrediction:
    params: SrgParams
    p: int
    mode: str
    a: int
    c: int
    n: int
    d: int
    d_status: DStatus
    case: str
    flags: Tuple[str, ...] = ()

    @property
    def theorem(self) -> str:
        return "2-graph*" if self.mode == BORDERED else "2-graph"

    def sign_pair(self, sign: str = "theorem") -> Tuple[int, int]:
        """
        (a, c) as constructed, or the lexicographically smaller of +-(a, c).
        """
        if sign == "theorem":
            return self.a, self.c
        if sign == "lex":
            return min((self.a, self.c), (-self.a % self.p, -self.c % self.p))
        raise ValueError(f"sign convention must be one of {SIGN_CONVENTIONS}, got {sign!r}")


@dataclass(frozen=True)
class ScanRow:
    v: int
    k: int
    lam: int
    mu: int
    p: int
    d: int
    d_status: DStatus
    n: int
    a: int
    c: int
    theorem: str
    flags: Tuple[str, ...] = ()

    def to_record(self) -> Dict[str, object]:
        return {
            "v": self.v, "k": self.k, "lambda": self.lam, "mu": self.mu,
            "p": self.p, "d": self.d, "d_status": self.d_status.value, "n": self.n,
            "a": self.a, "c": self.c, "theorem": self.theorem, "flags": ";".join(self.flags),
        }


# ---------------------------------------------------------
# Hypotheses and predictions
# ---------------------------------------------------------
def hypothesis_quantities(params: SrgParams, mode: str) -> Tuple[int, ...]:
    """
    Integers an odd prime p must divide for the construction to apply.
    """
    v, k, lam, mu = params.as_tuple()
    if mode == BORDERED:
        return (k - 2 * mu, v - 3 * k + 2 * lam + 1)
    elif mode == CENTROIDAL:
        return (v - 4 * k + 2 * lam + 2 * mu,)
    raise ValueError(f"unknown mode {mode!r}; available: {BORDERED}, {CENTROIDAL}")


def hypotheses_hold(params: SrgParams, p: int, mode: str) -> bool:
    return all(q % p == 0 for q in hypothesis_quantities(params, mode))


def applicable_primes(params: SrgParams, mode: str, pmax: Optional[int] = None) -> List[int]:
    """
    Odd primes meeting the hypotheses of a mode, ascending.

    A vanishing quantity constrains nothing; if all vanish every odd prime up
    to pmax (or DEFAULT_PMAX) qualifies.
    """
    nonzero = [q for q in hypothesis_quantities(params, mode) if q]
    if not nonzero:
        return odd_primes_up_to(pmax or DEFAULT_PMAX)
    primes = odd_prime_divisors(math.gcd(*nonzero))
    if pmax is not None:
        primes = [p for p in primes if p <= pmax]
    return primes


def _annotate(params: SrgParams, mode: str, p: int, a: int, c: int, n: int,
              d: int, status: DStatus) -> Tuple[DStatus, Tuple[str, ...]]:
    v, k, lam, mu = params.as_tuple()
    flags: List[str] = []
    gerzon = d * (d + 1) // 2
    a2_is_b = (a * a - 1) % p == 0
    if n == gerzon:
        flags.append("gerzon-equality")
        # a smaller d would put n above Gerzon's bound
        if status is DStatus.BOUND and not a2_is_b:
            status = DStatus.EXACT
            flags.append("forced-by-gerzon")
    elif n > gerzon:
        flags.append("gerzon-violation")
        if not a2_is_b:
            flags.append("srg-nonexistent")
    if (mode == BORDERED and k == 2 * mu) or (mode == CENTROIDAL and v == 4 * k - 2 * lam - 2 * mu):
        flags.append("real-etf")
    if c == 0:
        flags.append("c-zero")
    return status, tuple(flags)


def predict(params: SrgParams, p: int, mode: str) -> ConstructionPrediction:
    """
    Parameter-mode prediction of the bordered or centroidal construction.

    Parameters
    ----------
    params : SrgParams
        Nontrivial SRG parameters with f != g.
    p : int
        Odd prime meeting the mode's divisibility hypotheses.
    mode : str
        BORDERED (n = v+1) or CENTROIDAL (n = v).

    Returns
    -------
    ConstructionPrediction
        a = 2r+1 and c = 2r-2s mod p, and d exact or as an upper bound.
    """
    require_odd_prime(p)
    spec = srg_spectrum(params)
    if spec.f == spec.g:
        raise ValueError(f"{params}: the constructions exclude f = g")
    quantities = hypothesis_quantities(params, mode)
    if any(q % p for q in quantities):
        raise ValueError(f"{params}: p = {p} must divide {quantities} for the {mode} construction")
    v, k, lam, mu = params.as_tuple()
    r, s, f, g = spec.r, spec.s, spec.f, spec.g
    separated = (r - s) % p != 0
    if mode == BORDERED:
        n = v + 1
        if separated:
            d, status, case = g + 1, DStatus.EXACT, "exact"
        else:
            d, status, case = min(f, g) + 1, DStatus.BOUND, "bound"
    else:
        n = v
        x = v - 2 * k + 2 * r
        if separated:
            if x % p:
                d, status, case = g + 1, DStatus.EXACT, "a"
            else:
                d, status, case = g, DStatus.EXACT, "b"
        else:
            d, status, case = min(f, g) + 1, DStatus.BOUND, "c"
            m = p_adic_valuation(v, p)
            if x % p ** (m + 1) == 0 and g < d:
                d, case = g, "d"
    a, c = (2 * r + 1) % p, (2 * r - 2 * s) % p
    status, flags = _annotate(params, mode, p, a, c, n, d, status)
    return ConstructionPrediction(params, p, mode, a, c, n, d, status, case, flags)


# ---------------------------------------------------------
# Graph-mode constructions
# ---------------------------------------------------------
def _bordered_signature(G: Graph) -> IntMat:
    n = G.v + 1
    S = np.ones((n, n), dtype=np.int64)
    S[0, 0] = 0
    S[1:, 1:] = np.array(seidel_matrix(G).data, dtype=np.int64)
    return IntMat(S)


def _graph_params(G: Graph) -> SrgParams:
    params = check_srg(G)
    if params is None:
        raise ValueError(f"{G!r} is not a nontrivial strongly regular graph")
    return params


def _check_rank(cert: EtfCertificate, pred: ConstructionPrediction) -> None:
    d = cert.params.d
    if pred.d_status is DStatus.EXACT and d != pred.d:
        raise TheoremViolation(f"{pred.params} at p={pred.p}: rank {d}, predicted exactly {pred.d}")
    if d > pred.d:
        raise TheoremViolation(f"{pred.params} at p={pred.p}: rank {d} exceeds the bound {pred.d}")


def two_graph_star(source: Union[SrgParams, Graph], p: int) -> Union[ConstructionPrediction, EtfCertificate]:
    """
    Bordered construction: predict from parameters, or build and verify the
    Gram matrix [[2r+1, 1^T], [1, S+(2r+1)I]] of a concrete SRG.
    """
    if isinstance(source, SrgParams):
        return predict(source, p, BORDERED)
    pred = predict(_graph_params(source), p, BORDERED)
    ctx = make_field(p)
    S = _bordered_signature(source)
    G = S.reduce(ctx) + MatGF.identity(ctx, S.rows).scale(pred.a)
    cert = verify_etf(G, "2-graph*")
    if cert is None or cert.params.a != pred.a or cert.params.c != pred.c:
        raise TheoremViolation(f"bordered Gram of {pred.params} failed to certify at p={p}")
    _check_rank(cert, pred)
    logger.info("2-graph* %s at p=%d: %s", pred.params, p, cert.params)
    return cert


def centroidal(source: Union[SrgParams, Graph], p: int) -> Union[ConstructionPrediction, EtfCertificate]:
    """
    Centroidal construction: predict from parameters, or build and verify the
    Gram matrix S+(2r+1)I of a concrete SRG and check that the all-ones
    vector is an eigenvector.
    """
    if isinstance(source, SrgParams):
        return predict(source, p, CENTROIDAL)
    pred = predict(_graph_params(source), p, CENTROIDAL)
    ctx = make_field(p)
    n = source.v
    G = seidel_matrix(source).reduce(ctx) + MatGF.identity(ctx, n).scale(pred.a)
    cert = verify_etf(G, "2-graph")
    if cert is None or cert.params.a != pred.a or cert.params.c != pred.c:
        raise TheoremViolation(f"centroidal Gram of {pred.params} failed to certify at p={p}")
    row_sums = (G @ MatGF.ones(ctx, n, 1)).data
    if np.any(row_sums != row_sums[:, :1]):
        raise TheoremViolation(f"centroidal Gram of {pred.params} lacks the all-ones eigenvector")
    _check_rank(cert, pred)
    logger.info("2-graph %s at p=%d: %s", pred.params, p, cert.params)
    return cert


def seidel_waldron(graph: Graph, p: int) -> Optional[List[EtfCertificate]]:
    """
    Bordered ETFs from a p-modular SRG.

    With k = 2mu and v = 3k - 2lambda - 1 mod p and delta a square root of
    (lambda-mu)^2 + 4(k-mu), the matrix [[0, 1^T], [1, S]] + aI is the Gram
    matrix of an ETF for a = lambda - mu + eps*delta + 1, c = 2*eps*delta.
    delta is taken in F_{p^2} when F_p has none.

    Returns
    -------
    Optional[List[EtfCertificate]]
        One certificate per sign eps (one when delta = 0), or None when a
        condition fails.
    """
    require_odd_prime(p)
    mod = check_modular_srg(graph, p)
    if mod is None:
        logger.debug("%r is not SRG_%d", graph, p)
        return None
    k, lam, mu = mod.k, mod.lam, mod.mu
    if (k - 2 * mu) % p or (graph.v - 3 * k + 2 * lam + 1) % p:
        return None
    target = (lam - mu) ** 2 + 4 * (k - mu)
    ctx = make_field(p)
    roots = sqrt(lift_int(target, ctx))
    if roots is None:
        ctx = make_field(p, 2)
        roots = sqrt(lift_int(target, ctx))
    delta = roots[0]
    S = _bordered_signature(graph)
    base = S.reduce(ctx)
    certs = []
    for eps in ((1,) if delta.is_zero() else (1, -1)):
        a = delta * eps + (lam - mu + 1)
        cert = verify_etf(base + MatGF.identity(ctx, S.rows).scale(a), "seidel-waldron")
        if cert is None or cert.params.c != delta * (2 * eps):
            raise TheoremViolation(f"Seidel-Waldron Gram with a={a} failed to certify over F_{ctx.q}")
        certs.append(cert)
    logger.info("seidel-waldron %r at p=%d: %d certificate(s)", graph, p, len(certs))
    return certs


def construct(graph: Graph, p: int, mode: str) -> List[EtfCertificate]:
    """
    Run one named construction on a concrete graph; empty when it does not apply.
    """
    if mode == "seidel-waldron":
        return seidel_waldron(graph, p) or []
    elif mode in (BORDERED, CENTROIDAL):
        params = check_srg(graph)
        if params is None or not hypotheses_hold(params, p, mode):
            return []
        builder = two_graph_star if mode == BORDERED else centroidal
        return [builder(graph, p)]
    raise ValueError(f"unknown mode {mode!r}; available: {', '.join(get_available_modes())}")


def graph_from_etf(cert: EtfCertificate) -> Tuple[Graph, Optional[ModularSrgParams]]:
    """
    Read the graph off an (a,1,c)-ETF: switch so vector 0 has +1 inner
    products with all others, drop it, and take -1 entries as edges.
    """
    params = cert.params
    if params.b != 1:
        raise ValueError("graph_from_etf needs b = 1")
    G = normalize_switching(cert.gram)
    block = G.data[:, 1:, 1:]
    p = G.ctx.p
    adjacency = block[0] == p - 1
    if G.ctx.l == 2:
        adjacency &= block[1] == 0
    np.fill_diagonal(adjacency, False)
    graph = Graph(adjacency)
    return graph, check_modular_srg(graph, p)


# ---------------------------------------------------------
# Explicit families
# ---------------------------------------------------------
def triangular_gerzon(d: int, p: int) -> EtfCertificate:
    """
    ETF of d(d+1)/2 vectors in F_p^d, attaining Gerzon's bound, from the
    centroidal construction on the complement of T(d+1).
    """
    require_odd_prime(p)
    if d < 4:
        raise ValueError(f"d must be at least 4 so that the complement of T(d+1) is a nontrivial SRG, got {d}")
    if (d - 7) % p:
        raise ValueError(f"p = {p} must divide d-7 = {d - 7}")
    cert = centroidal(generate("triangular_complement", d + 1), p)
    n = d * (d + 1) // 2
    if cert.params.d != d or cert.params.n != n:
        raise TheoremViolation(f"triangular Gerzon family gave rank {cert.params.d}, n={cert.params.n}; expected {d}, {n}")
    return cert.with_provenance("triangular-gerzon")


def steiner_modular(m: int, p: int) -> EtfCertificate:
    """
    Steiner ETF of m^2 vectors in dimension m(m-1)/2 over F_p.

    Each point of the 2-subset Steiner system on [m] lies in m-1 blocks;
    the t-th of them carries row t+1 of the modular Hadamard matrix
    H = [[1, 1^T], [1, 2I-J]], which satisfies H^2 = mI mod p when
    m = 4 mod p.
    """
    require_odd_prime(p)
    if m < 4:
        raise ValueError(f"m must be at least 4, got {m}")
    if (m - 4) % p:
        raise ValueError(f"m = {m} must be 4 mod {p}")
    H = np.ones((m, m), dtype=np.int64)
    H[1:, 1:] = 2 * np.eye(m - 1, dtype=np.int64) - 1
    blocks = list(combinations(range(m), 2))
    Phi = np.zeros((len(blocks), m * m), dtype=np.int64)
    for j in range(m):
        containing = [i for i, block in enumerate(blocks) if j in block]
        for t, i in enumerate(containing):
            Phi[i, j * m:(j + 1) * m] = H[t + 1]
    ctx = make_field(p)
    F = MatGF.from_ints(ctx, Phi)
    cert = verify_etf(F.T @ F, "steiner")
    if cert is None or cert.params.d != len(blocks):
        raise TheoremViolation(f"Steiner frame for m={m} failed to certify with rank {len(blocks)} at p={p}")
    if not (cert.gram @ MatGF.ones(ctx, m * m, 1)).is_zero():
        raise TheoremViolation("Steiner frame lacks centroidal symmetry")
    logger.info("steiner m=%d at p=%d: %s", m, p, cert.params)
    return cert


# ---------------------------------------------------------
# Parameter scan
# ---------------------------------------------------------
def _scan_one(params: SrgParams, pmax: Optional[int], dmax: Optional[int], sign: str,
              use_registry: bool) -> List[ScanRow]:
    if not params.satisfies_counting_identity() or not 0 < params.k < params.v - 1:
        raise ValueError(f"{params}: inconsistent SRG parameters")
    spec = srg_spectrum(params)
    if spec.f == spec.g:
        logger.info("%s: conference parameters, skipped", params)
        return []
    per_mode = {mode: applicable_primes(params, mode, pmax) for mode in (BORDERED, CENTROIDAL)}
    registry = registry_graph_for(params) if use_registry else None
    graph: Optional[Graph] = None
    out = []
    for p in sorted(set(per_mode[BORDERED]) | set(per_mode[CENTROIDAL])):
        for mode in (BORDERED, CENTROIDAL):
            if p not in per_mode[mode]:
                continue
            pred = predict(params, p, mode)
            if pred.d_status is DStatus.BOUND and registry is not None:
                if graph is None:
                    graph = generate(*registry)
                builder = two_graph_star if mode == BORDERED else centroidal
                d = builder(graph, p).params.d
                _, flags = _annotate(params, mode, p, pred.a, pred.c, pred.n, d, DStatus.EXACT)
                pred = replace(pred, d=d, d_status=DStatus.COMPUTED, flags=flags)
            if dmax is not None and pred.d > dmax:
                continue
            a, c = pred.sign_pair(sign)
            out.append(ScanRow(params.v, params.k, params.lam, params.mu, p, pred.d, pred.d_status,
                               pred.n, a, c, pred.theorem, pred.flags))
    logger.info("%s: %d scan row(s)", params, len(out))
    return out


def scan(rows: Sequence[SrgParams], pmax: Optional[int] = None, dmax: Optional[int] = None,
         workers: int = 1, sign: str = "theorem", use_registry: bool = True) -> List[ScanRow]:
    """
    Predict the ETFs the bordered and centroidal constructions give for each
    parameter set.

    Parameters
    ----------
    rows : Sequence[SrgParams]
        SRG parameter sets; conference sets (f = g) are skipped.
    pmax : int, optional
        Largest prime considered.
    dmax : int, optional
        Drop predictions with d above this.
    workers : int
        Parameter sets are processed in parallel; output order is input
        order, then ascending p, bordered before centroidal.
    sign : str
        'theorem' keeps (2r+1, 2r-2s) mod p; 'lex' takes the smaller of +-(a, c).
    use_registry : bool
        Replace rank bounds by the computed rank when a registered graph
        family has these parameters.

    Returns
    -------
    List[ScanRow]
    """
    if sign not in SIGN_CONVENTIONS:
        raise ValueError(f"sign convention must be one of {SIGN_CONVENTIONS}, got {sign!r}")
    job = partial(_scan_one, pmax=pmax, dmax=dmax, sign=sign, use_registry=use_registry)
    return [row for chunk in parallel_map(job, list(rows), workers) for row in chunk]


def read_scan_input(path: Union[str, Path]) -> List[SrgParams]:
    """
    Read SRG parameters from a CSV with columns v, k, lambda, mu and an
    optional status column.
    """
    df = pd.read_csv(path)
    missing = {"v", "k", "lambda", "mu"} - set(df.columns)
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    if df[["v", "k", "lambda", "mu"]].isna().any().any():
        raise ValueError(f"{path}: empty parameter cells")
    if "status" in df.columns:
        logger.info("%s: status counts %s", path, df["status"].value_counts().to_dict())
    return [SrgParams(int(r.v), int(r.k), int(r["lambda"]), int(r.mu)) for _, r in df.iterrows()]


def scan_frame(rows: Iterable[ScanRow]) -> pd.DataFrame:
    return pd.DataFrame([row.to_record() for row in rows], columns=SCAN_COLUMNS)


def write_scan_csv(rows: Iterable[ScanRow], path: Union[str, Path]) -> None:
    scan_frame(rows).to_csv(path, index=False)


def etf_coverage(rows: Iterable[SrgParams], pmax: Optional[int] = None) -> pd.DataFrame:
    """
    Which route gives an ETF for each parameter set: '2-graph*' (some odd
    prime meets the bordered hypotheses), '2-graph' (centroidal),
    'conference' (f = g, covered by real projection) or 'none'.
    """
    records = []
    for params in rows:
        spec = srg_spectrum(params)
        bordered = applicable_primes(params, BORDERED, pmax)
        centroid = applicable_primes(params, CENTROIDAL, pmax)
        if spec.is_conference or spec.f == spec.g:
            route = "conference"
        elif bordered:
            route = "2-graph*"
        elif centroid:
            route = "2-graph"
        else:
            route = "none"
        records.append({
            "v": params.v, "k": params.k, "lambda": params.lam, "mu": params.mu, "route": route,
            "bordered_primes": " ".join(map(str, bordered)),
            "centroidal_primes": " ".join(map(str, centroid)),
        })
    return pd.DataFrame(records, columns=["v", "k", "lambda", "mu", "route", "bordered_primes", "centroidal_primes"])
