"""
Clique-search nonexistence engine for (a,1,c)-ETFs in small orthogonal
geometries over F_p.

Any (a,1)-equiangular system of n vectors can be moved by an isometry so
that two of its vectors are a fixed seed pair (psi1, psi2) with
<psi1,psi1> = <psi2,psi2> = a and <psi1,psi2> = 1; after switching, the
remaining n-2 vectors form a clique in the compatibility graph on

    V = {psi : <psi,psi> = a, <psi,psi1> = 1, <psi,psi2>^2 = 1},

where psi ~ phi iff <psi,phi>^2 = 1. A clique number below n-2, or no
maximal clique spanning F_p^d together with the seed, rules the system out.
"""
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from functools import partial
from itertools import combinations, product
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from frames import (UNBOUNDED, EtfCertificate, admissible_a, candidate_primes,
                    verify_etf)
from gf import FieldElem, least_nonresidue, make_field
from matgf import DiscriminantClass, MatGF, discriminant_class, rank
from utils import parallel_map, require_odd_prime

logger = logging.getLogger(__name__)

# degree-ordered start vertices tried by the greedy lower bound
GREEDY_STARTS = 64

# (n - |seed|)-subsets examined per spanning clique before giving up
WITNESS_SUBSET_CAP = 100_000

Vector = Tuple[int, ...]


@dataclass(frozen=True)
class GeometryCtx:
    """
    F_p^d with the diagonal form diag(1,...,1) (s = 0, square
    discriminant) or diag(1,...,1,nu) (s = 1, nu the least non-residue).
    """
    p: int
    d: int
    s: int

    @property
    def weights(self) -> np.ndarray:
        w = np.ones(self.d, dtype=np.int64)
        if self.s:
            w[-1] = least_nonresidue(self.p)
        return w

    @property
    def gram(self) -> MatGF:
        return MatGF.from_ints(make_field(self.p), np.diag(self.weights))

    def form(self, x: Sequence[int], y: Sequence[int]) -> int:
        return int(np.dot(np.asarray(x, dtype=np.int64) * self.weights, np.asarray(y, dtype=np.int64)) % self.p)


def make_geometry(p: int, d: int, s: int) -> GeometryCtx:
    require_odd_prime(p)
    if d < 1:
        raise ValueError(f"dimension must be at least 1, got {d}")
    if s not in (0, 1):
        raise ValueError(f"discriminant flag s must be 0 or 1, got {s}")
    geom = GeometryCtx(p, d, s)
    expected = DiscriminantClass.NONSQUARE if s else DiscriminantClass.SQUARE
    if discriminant_class(geom.gram) is not expected:
        raise ValueError(f"geometry diag{tuple(geom.weights)} does not have discriminant type s={s}")
    return geom


def _as_int(a: Union[int, FieldElem], p: int) -> int:
    if isinstance(a, FieldElem):
        return int(a) % p
    return a % p


# ---------------------------------------------------------
# Compatibility graph
# ---------------------------------------------------------
def seed_pair(geom: GeometryCtx, a: Union[int, FieldElem],
              antipodal: Optional[bool] = None) -> Tuple[Vector, Vector]:
    """
    Lexicographically least seed pair (psi1, psi2).

    psi1 is the least nonzero vector of norm a. When a = -1 the seed is
    antipodal, (psi1, -psi1); otherwise psi2 is the least vector of norm a,
    independent of psi1, with <psi1,psi2> = 1.

    Raises
    ------
    ValueError
        If the geometry holds no such pair.
    """
    p, d = geom.p, geom.d
    a = _as_int(a, p)
    if antipodal is None:
        antipodal = a == p - 1
    vectors = (v for v in product(range(p), repeat=d) if any(v))
    psi1 = next((v for v in vectors if geom.form(v, v) == a), None)
    if psi1 is None:
        raise ValueError(f"no nonzero vector of norm {a} in F_{p}^{d} (s={geom.s})")
    if antipodal:
        if a != p - 1:
            raise ValueError(f"an antipodal seed needs a = -1, got a = {a}")
        return psi1, tuple(-x % p for x in psi1)
    ctx = make_field(p)
    for v in product(range(p), repeat=d):
        if geom.form(v, v) != a or geom.form(psi1, v) != 1:
            continue
        if rank(MatGF.from_ints(ctx, [psi1, v])) == 2:
            logger.debug("seed pair for p=%d s=%d a=%d: %s, %s", p, geom.s, a, psi1, v)
            return psi1, v
    raise ValueError(f"no independent pair of norm-{a} vectors with inner product 1 in F_{p}^{d} (s={geom.s})")


def _bitsets(adjacency: np.ndarray) -> List[int]:
    out = []
    for row in adjacency:
        bits = 0
        for j in np.flatnonzero(row):
            bits |= 1 << int(j)
        out.append(bits)
    return out


@dataclass(frozen=True, eq=False)
class CompatGraph:
    geom: GeometryCtx
    a: int
    seed: Tuple[Vector, Vector]
    vertices: np.ndarray
    adjacency: np.ndarray
    adj: List[int] = field(repr=False)

    @property
    def size(self) -> int:
        return self.vertices.shape[0]

    @property
    def antipodal(self) -> bool:
        psi1, psi2 = self.seed
        return all((x + y) % self.geom.p == 0 for x, y in zip(psi1, psi2))

    def vertex(self, i: int) -> Vector:
        return tuple(int(x) for x in self.vertices[i])

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)


def build_compat_graph(geom: GeometryCtx, a: Union[int, FieldElem],
                       seed: Optional[Tuple[Vector, Vector]] = None) -> CompatGraph:
    """
    Enumerate V and its compatibility graph.

    The linear constraint <psi,psi1> = 1 is solved for one coordinate, so
    only p^(d-1) candidates are examined. Vertices are in lexicographic
    order of their coordinates.
    """
    p, d = geom.p, geom.d
    a = _as_int(a, p)
    psi1, psi2 = seed if seed is not None else seed_pair(geom, a)
    w = geom.weights
    u = w * np.asarray(psi1, dtype=np.int64) % p
    j = int(np.flatnonzero(u)[0])
    others = [i for i in range(d) if i != j]
    if d > 1:
        grid = np.indices((p,) * (d - 1)).reshape(d - 1, -1).T.astype(np.int64)
    else:
        grid = np.zeros((1, 0), dtype=np.int64)
    V = np.empty((grid.shape[0], d), dtype=np.int64)
    V[:, others] = grid
    V[:, j] = (1 - grid @ u[others]) * pow(int(u[j]), -1, p) % p
    V = V[(V * V) @ w % p == a]
    t = V @ (w * np.asarray(psi2, dtype=np.int64)) % p
    V = V[t * t % p == 1]
    V = V[np.lexsort(V.T[::-1])]
    inner = (V * w) @ V.T % p
    adjacency = inner * inner % p == 1
    np.fill_diagonal(adjacency, False)
    adjacency.setflags(write=False)
    V.setflags(write=False)
    logger.info("compatibility graph p=%d s=%d a=%d: |V| = %d", p, geom.s, a, V.shape[0])
    return CompatGraph(geom, a, (tuple(psi1), tuple(psi2)), V, adjacency, _bitsets(adjacency))


# ---------------------------------------------------------
# Bitset clique search
# ---------------------------------------------------------
def _lsb(x: int) -> int:
    return (x & -x).bit_length() - 1


def _bits_to_tuple(bits: int) -> Tuple[int, ...]:
    out = []
    while bits:
        out.append(_lsb(bits))
        bits &= bits - 1
    return tuple(out)


def _color_sort(P: int, adj: List[int]) -> Tuple[List[int], List[int]]:
    # greedy colouring of P; colours[i] bounds the clique through order[:i+1]
    order, colors = [], []
    color = 0
    rest = P
    while rest:
        color += 1
        Q = rest
        used = 0
        while Q:
            v = _lsb(Q)
            order.append(v)
            colors.append(color)
            used |= 1 << v
            Q &= ~(1 << v)
            Q &= ~adj[v]
        rest &= ~used
    return order, colors


def _greedy_clique(adj: List[int]) -> int:
    n = len(adj)
    starts = sorted(range(n), key=lambda v: (-adj[v].bit_count(), v))[:GREEDY_STARTS]
    best, best_size = 0, 0
    for s in starts:
        C, P = 1 << s, adj[s]
        while P:
            v = max(_bits_to_tuple(P), key=lambda x: ((adj[x] & P).bit_count(), -x))
            C |= 1 << v
            P &= adj[v]
        if C.bit_count() > best_size:
            best, best_size = C, C.bit_count()
    return best


class _MaxCliqueSearch:
    """
    Branch and bound below one top-level vertex at a time, keeping only
    strictly larger cliques than the running bound.
    """

    def __init__(self, adj: List[int], lower: int):
        self.adj = adj
        self.best_size = lower
        self.best_bits = 0
        self.nodes = 0

    def run(self, i: int) -> bool:
        before = self.best_size
        later = self.adj[i] & ~((1 << (i + 1)) - 1)
        self._expand(1, 1 << i, later)
        return self.best_size > before

    def _expand(self, size: int, R: int, P: int) -> None:
        if P == 0:
            if size > self.best_size:
                self.best_size, self.best_bits = size, R
            return
        order, colors = _color_sort(P, self.adj)
        for idx in range(len(order) - 1, -1, -1):
            if size + colors[idx] <= self.best_size:
                break
            v = order[idx]
            bit = 1 << v
            if not P & bit:
                continue
            self.nodes += 1
            self._expand(size + 1, R | bit, P & self.adj[v])
            P &= ~bit


def _max_clique_chunk(branches: Sequence[int], adj: List[int], lower: int) -> Tuple[int, int, int, int]:
    search = _MaxCliqueSearch(adj, lower)
    best = (lower, -1, 0)
    for i in branches:
        if search.run(i):
            best = (search.best_size, i, search.best_bits)
    return best + (search.nodes,)


def _chunks(n: int, workers: int) -> List[List[int]]:
    k = max(1, min(workers, n))
    return [list(range(c, n, k)) for c in range(k)]


def max_clique(g: CompatGraph, workers: int = 1) -> Tuple[int, Tuple[int, ...]]:
    """
    Clique number and a witness clique (sorted vertex indices).

    Top-level branches are split across workers; the witness is the first
    maximum clique of the lowest branch that has one, or the greedy clique
    when nothing beats it, so the result does not depend on workers.
    """
    adj = g.adj
    if not adj:
        return 0, ()
    greedy = _greedy_clique(adj)
    lower = greedy.bit_count()
    job = partial(_max_clique_chunk, adj=adj, lower=lower)
    results = parallel_map(job, _chunks(len(adj), workers), workers)
    nodes = sum(r[3] for r in results)
    found = [r for r in results if r[1] >= 0]
    if not found:
        size, bits = lower, greedy
    else:
        size, _, bits, _ = max(found, key=lambda r: (r[0], -r[1]))
    logger.debug("max clique: omega=%d (greedy %d), %d nodes", size, lower, nodes)
    return size, _bits_to_tuple(bits)


class _MaximalCliqueSearch:
    """
    Bron-Kerbosch with pivoting (most candidate neighbours, then lowest
    index), pruned to cliques of size lo..hi.
    """

    def __init__(self, adj: List[int], lo: int, hi: int):
        self.adj = adj
        self.lo = lo
        self.hi = hi
        self.out: List[int] = []

    def run(self, i: int) -> None:
        low_mask = (1 << i) - 1
        self._expand(1, 1 << i, self.adj[i] & ~low_mask & ~(1 << i), self.adj[i] & low_mask)

    def _expand(self, size: int, R: int, P: int, X: int) -> None:
        if not P:
            if not X and self.lo <= size <= self.hi:
                self.out.append(R)
            return
        if size >= self.hi:
            return
        _, colors = _color_sort(P, self.adj)
        if size + colors[-1] < self.lo:
            return
        pivot = max(_bits_to_tuple(P | X), key=lambda u: ((P & self.adj[u]).bit_count(), -u))
        cand = P & ~self.adj[pivot]
        while cand:
            v = _lsb(cand)
            bit = 1 << v
            self._expand(size + 1, R | bit, P & self.adj[v], X & self.adj[v])
            P &= ~bit
            X |= bit
            cand &= ~bit


def _maximal_chunk(branches: Sequence[int], adj: List[int], lo: int, hi: int) -> List[int]:
    search = _MaximalCliqueSearch(adj, lo, hi)
    for i in branches:
        search.run(i)
    return search.out


def maximal_cliques_in_range(g: CompatGraph, lo: int, hi: int, workers: int = 1) -> List[Tuple[int, ...]]:
    """
    All inclusion-maximal cliques M with lo <= |M| <= hi, as sorted index
    tuples in sorted order.
    """
    if lo > hi:
        raise ValueError(f"empty size range [{lo}, {hi}]")
    adj = g.adj
    if not adj or hi < 1:
        return []
    job = partial(_maximal_chunk, adj=adj, lo=max(lo, 1), hi=hi)
    found = [bits for chunk in parallel_map(job, _chunks(len(adj), workers), workers) for bits in chunk]
    return sorted(_bits_to_tuple(bits) for bits in found)


def is_maximal_clique(g: CompatGraph, clique: Sequence[int]) -> bool:
    bits = 0
    for v in clique:
        bits |= 1 << v
    for v in clique:
        if (g.adj[v] | (1 << v)) & bits != bits:
            return False
    common = ~0
    for v in clique:
        common &= g.adj[v]
    return (common & ~bits & ((1 << g.size) - 1)) == 0


# ---------------------------------------------------------
# Nonexistence pipeline
# ---------------------------------------------------------
@dataclass
class SearchRecord:
    p: int
    s: int
    a: int
    seed: Tuple[Vector, Vector]
    V_size: int
    omega: int
    cliques_examined: int = 0
    clique_sizes: Dict[int, int] = field(default_factory=dict)
    rank_multiset: Dict[int, int] = field(default_factory=dict)
    refuted: bool = True
    # maximal cliques of full rank that yielded no witness
    rank_d_unresolved: int = 0

    def to_dict(self) -> Dict[str, object]:
        return {
            "p": self.p, "s": self.s, "a": self.a,
            "seed": [list(v) for v in self.seed],
            "V_size": self.V_size, "omega": self.omega,
            "cliques_examined": self.cliques_examined,
            "clique_sizes": {str(k): v for k, v in sorted(self.clique_sizes.items())},
            "rank_multiset": {str(k): v for k, v in sorted(self.rank_multiset.items())},
            "refuted": self.refuted,
            "rank_d_unresolved": self.rank_d_unresolved,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "SearchRecord":
        seed = tuple(tuple(int(x) for x in v) for v in data["seed"])
        return cls(
            int(data["p"]), int(data["s"]), int(data["a"]), seed,
            int(data["V_size"]), int(data["omega"]), int(data["cliques_examined"]),
            {int(k): int(v) for k, v in data.get("clique_sizes", {}).items()},
            {int(k): int(v) for k, v in data["rank_multiset"].items()},
            bool(data["refuted"]), int(data.get("rank_d_unresolved", 0)),
        )


@dataclass
class NonexistenceCertificate:
    d: int
    n: int
    primes: List[int]
    records: List[SearchRecord]

    @property
    def verdict(self) -> str:
        return "nonexistent" if all(r.refuted for r in self.records) else "inconclusive"

    def to_frame(self) -> pd.DataFrame:
        cols = ["p", "s", "a", "V_size", "omega", "cliques_examined", "refuted"]
        return pd.DataFrame([{c: getattr(r, c) for c in cols} for r in self.records], columns=cols)

    def to_dict(self) -> Dict[str, object]:
        return {
            "kind": "nonexistence", "d": self.d, "n": self.n, "primes": self.primes,
            "verdict": self.verdict, "records": [r.to_dict() for r in self.records],
        }


@dataclass
class ExistenceWitness:
    d: int
    n: int
    geom: GeometryCtx
    a: int
    vectors: List[Vector]
    certificate: EtfCertificate

    def to_dict(self) -> Dict[str, object]:
        params = self.certificate.params
        return {
            "kind": "witness", "d": self.d, "n": self.n,
            "p": self.geom.p, "s": self.geom.s, "a": self.a, "c": str(params.c),
            "vectors": [list(v) for v in self.vectors],
        }


def system_gram(geom: GeometryCtx, vectors: Sequence[Vector]) -> MatGF:
    """
    Gram matrix of a vector system under the geometry's form.
    """
    Psi = np.asarray(vectors, dtype=np.int64)
    return MatGF.from_ints(make_field(geom.p), (Psi * geom.weights) @ Psi.T % geom.p)


def _find_witness(g: CompatGraph, clique: Sequence[int], n: int) -> Tuple[Optional[ExistenceWitness], bool]:
    # (witness or None, whether the subset search finished under the cap)
    geom = g.geom
    base = [g.seed[0]] if g.antipodal else list(g.seed)
    need = n - len(base)
    pool = [v for v in clique if g.vertex(v) not in base]
    if need < 0 or len(pool) < need:
        return None, True
    ctx = make_field(geom.p)
    for count, subset in enumerate(combinations(pool, need)):
        if count >= WITNESS_SUBSET_CAP:
            return None, False
        vectors = base + [g.vertex(v) for v in subset]
        if rank(MatGF.from_ints(ctx, vectors)) != geom.d:
            continue
        cert = verify_etf(system_gram(geom, vectors), "clique-search")
        if cert is not None and cert.params.d == geom.d:
            return ExistenceWitness(geom.d, n, geom, g.a, vectors, cert), True
    return None, True


def search_geometry(geom: GeometryCtx, a: int, n: int,
                    workers: int = 1) -> Tuple[SearchRecord, Optional[ExistenceWitness]]:
    """
    Run the clique test for one (p, s, a).
    """
    p, d = geom.p, geom.d
    try:
        g = build_compat_graph(geom, a)
    except ValueError as exc:
        # no seed pair: not even two of the n vectors fit
        logger.info("p=%d s=%d a=%d: %s", p, geom.s, a, exc)
        return SearchRecord(p, geom.s, a, ((), ()), 0, 0), None
    omega, _ = max_clique(g, workers)
    record = SearchRecord(p, geom.s, a, g.seed, g.size, omega)
    if omega < n - 2:
        logger.info("p=%d s=%d a=%d: omega %d < %d, refuted", p, geom.s, a, omega, n - 2)
        return record, None
    ctx = make_field(p)
    cliques = maximal_cliques_in_range(g, n - 2, omega, workers)
    record.cliques_examined = len(cliques)
    record.clique_sizes = dict(Counter(len(m) for m in cliques))
    ranks: Counter = Counter()
    for m in cliques:
        rows = list(g.seed) + [g.vertex(v) for v in m]
        r = rank(MatGF.from_ints(ctx, rows))
        ranks[r] += 1
        if r == d:
            witness, complete = _find_witness(g, m, n)
            if witness is not None:
                record.rank_multiset = dict(ranks)
                record.refuted = False
                logger.info("p=%d s=%d a=%d: existence witness found", p, geom.s, a)
                return record, witness
            if not complete:
                logger.warning("p=%d s=%d a=%d: subset cap reached in a spanning clique", p, geom.s, a)
            record.rank_d_unresolved += 1
    # a full-rank clique without a witness leaves this block unrefuted
    record.refuted = record.rank_d_unresolved == 0
    record.rank_multiset = dict(ranks)
    logger.info("p=%d s=%d a=%d: %d maximal cliques, ranks %s", p, geom.s, a, len(cliques), dict(ranks))
    return record, None


def nonexistence_pipeline(d: int, n: int, primes: Optional[Sequence[int]] = None,
                          real_exists: bool = False,
                          workers: int = 1) -> Union[NonexistenceCertificate, ExistenceWitness]:
    """
    Search every admissible (p, s, a) for an (a,1)-equiangular system of n
    vectors spanning F_p^d.

    Parameters
    ----------
    d, n : int
        Dimension and number of vectors, n > d >= 2.
    primes : Sequence[int], optional
        Primes to search; defaults to candidate_primes(d, n, real_exists).
    real_exists : bool
        Whether a real ETF with these (d, n) is known, which leaves the
        default prime set unbounded.
    workers : int
        Clique searches fan out over this many workers.

    Returns
    -------
    NonexistenceCertificate or ExistenceWitness
        The first witness found, or the per-(p, s, a) evidence.
    """
    if not n > d >= 2:
        raise ValueError(f"need n > d >= 2, got d={d}, n={n}")
    if primes is None:
        found = candidate_primes(d, n, real_exists)
        if found == UNBOUNDED:
            raise ValueError("a real ETF exists, so every prime is a candidate; pass explicit primes")
        primes = found
    primes = sorted(set(primes))
    for p in primes:
        require_odd_prime(p)
    records = []
    for p in primes:
        for s in (0, 1):
            geom = make_geometry(p, d, s)
            for a in admissible_a(d, n, p):
                record, witness = search_geometry(geom, a, n, workers)
                if witness is not None:
                    return witness
                records.append(record)
    cert = NonexistenceCertificate(d, n, list(primes), records)
    logger.info("(%d,%d): %s over primes %s", d, n, cert.verdict, primes)
    return cert


def replay_record(record: SearchRecord, d: int, workers: int = 1) -> bool:
    """
    Rebuild the compatibility graph from a record's seed and confirm |V|
    and the clique number.
    """
    if record.V_size == 0:
        return True
    geom = make_geometry(record.p, d, record.s)
    g = build_compat_graph(geom, record.a, record.seed)
    return g.size == record.V_size and max_clique(g, workers)[0] == record.omega


# ---------------------------------------------------------
# Files
# ---------------------------------------------------------
def save_search_result(result: Union[NonexistenceCertificate, ExistenceWitness], path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(result.to_dict(), indent=2) + "\n")


def load_search_result(path: Union[str, Path]) -> Union[NonexistenceCertificate, ExistenceWitness]:
    """
    Read a search result; witnesses are re-verified.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})")
    kind = data.get("kind")
    if kind == "nonexistence":
        cert = NonexistenceCertificate(int(data["d"]), int(data["n"]), [int(p) for p in data["primes"]],
                                       [SearchRecord.from_dict(r) for r in data["records"]])
        if cert.verdict != data["verdict"]:
            raise ValueError(f"{path}: recorded verdict {data['verdict']!r} disagrees with its records")
        for r in cert.records:
            if r.refuted and (r.rank_d_unresolved or r.rank_multiset.get(cert.d, 0)):
                raise ValueError(f"{path}: block p={r.p} s={r.s} a={r.a} is marked refuted "
                                 f"but has maximal cliques of rank {cert.d}")
        return cert
    elif kind == "witness":
        geom = make_geometry(int(data["p"]), int(data["d"]), int(data["s"]))
        vectors = [tuple(int(x) for x in v) for v in data["vectors"]]
        cert = verify_etf(system_gram(geom, vectors), "clique-search")
        if cert is None or cert.params.d != geom.d or cert.params.n != int(data["n"]):
            raise ValueError(f"{path}: witness vectors do not form an ETF spanning F_{geom.p}^{geom.d}")
        return ExistenceWitness(geom.d, int(data["n"]), geom, int(data["a"]), vectors, cert)
    raise ValueError(f"{path}: unknown result kind {kind!r}")
