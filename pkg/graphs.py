"""
Simple graphs, Seidel matrices, strongly regular graph parameter algebra,
p-modular SRG recognition and the graph families the constructions use.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import networkx as nx
import numpy as np

from gf import is_square, make_field
from matgf import IntMat
from utils import is_perfect_square, is_prime

logger = logging.getLogger(__name__)


class Graph:
    """
    Simple undirected graph on vertices 0..v-1 with a boolean adjacency matrix.
    """
    __slots__ = ("adjacency",)
    __hash__ = None

    def __init__(self, adjacency: np.ndarray):
        A = np.array(adjacency, dtype=bool)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diagonal(A)):
            raise ValueError("graphs are simple: no loops")
        A.setflags(write=False)
        self.adjacency = A

    @property
    def v(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def from_edges(cls, v: int, edges: Iterable[Tuple[int, int]]) -> "Graph":
        A = np.zeros((v, v), dtype=bool)
        for i, j in edges:
            if not (0 <= i < v and 0 <= j < v):
                raise ValueError(f"edge ({i},{j}) out of range for v={v}")
            if i == j:
                raise ValueError(f"loop at vertex {i}")
            A[i, j] = A[j, i] = True
        return cls(A)

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> "Graph":
        nodes = sorted(g.nodes())
        A = nx.to_numpy_array(g, nodelist=nodes, dtype=int) != 0
        np.fill_diagonal(A, False)
        return cls(A)

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.v))
        g.add_edges_from(self.edges())
        return g

    def edges(self) -> List[Tuple[int, int]]:
        iu, ju = np.nonzero(np.triu(self.adjacency, 1))
        return [(int(i), int(j)) for i, j in zip(iu, ju)]

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def complement(self) -> "Graph":
        A = ~self.adjacency
        np.fill_diagonal(A, False)
        return Graph(A)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return bool(np.array_equal(self.adjacency, other.adjacency))

    def __repr__(self) -> str:
        return f"Graph(v={self.v}, edges={len(self.edges())})"


@dataclass(frozen=True)
class SrgParams:
    v: int
    k: int
    lam: int
    mu: int

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.v, self.k, self.lam, self.mu)

    def satisfies_counting_identity(self) -> bool:
        return self.k * (self.k - self.lam - 1) == self.mu * (self.v - self.k - 1)

    def mod(self, p: int) -> "ModularSrgParams":
        return ModularSrgParams(p, self.v % p, self.k % p, self.lam % p, self.mu % p)

    def __str__(self) -> str:
        return f"({self.v},{self.k},{self.lam},{self.mu})"


@dataclass(frozen=True)
class ModularSrgParams:
    """
    SRG_p parameters: v mod p and k, lambda, mu canonical in [0, p).
    """
    p: int
    v: int
    k: int
    lam: int
    mu: int

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.v, self.k, self.lam, self.mu)


@dataclass(frozen=True)
class Surd:
    """
    Exact value a + b*sqrt(radicand).
    """
    a: Fraction
    b: Fraction
    radicand: int

    def __str__(self) -> str:
        sign = "+" if self.b >= 0 else "-"
        return f"{self.a}{sign}{abs(self.b)}*sqrt({self.radicand})"


Eigenvalue = Union[int, Surd]


@dataclass(frozen=True)
class SrgSpectrum:
    r: Eigenvalue
    s: Eigenvalue
    f: int
    g: int
    theta_k: int
    theta_r: Eigenvalue
    theta_s: Eigenvalue

    @property
    def is_conference(self) -> bool:
        return self.f == self.g and isinstance(self.r, Surd)


def seidel_matrix(G: Graph) -> IntMat:
    """
    Seidel adjacency matrix J - 2A - I.
    """
    A = G.adjacency.astype(np.int64)
    S = np.ones_like(A) - 2 * A - np.eye(G.v, dtype=np.int64)
    return IntMat(S)


def srg_spectrum(params: SrgParams) -> SrgSpectrum:
    """
    Restricted eigenvalues, multiplicities and Seidel eigenvalues of an SRG.

    Parameters
    ----------
    params : SrgParams
        Nontrivial SRG parameters.

    Returns
    -------
    SrgSpectrum
        r > s as integers (or exact surds in the conference case f = g),
        f = mult(r), g = mult(s), theta_k = v-2k-1, theta_r = -2r-1,
        theta_s = -2s-1.
    """
    v, k, lam, mu = params.as_tuple()
    lm = lam - mu
    disc = lm * lm + 4 * (k - mu)
    if disc <= 0:
        raise ValueError(f"{params}: discriminant (lambda-mu)^2+4(k-mu) = {disc} gives no two eigenvalues")
    theta_k = v - 2 * k - 1
    if is_perfect_square(disc):
        root = math.isqrt(disc)
        if (lm + root) % 2:
            raise ValueError(f"{params}: eigenvalues are non-integral rationals")
        r, s = (lm + root) // 2, (lm - root) // 2
        f_num, g_num = -k - s * (v - 1), k + r * (v - 1)
        if f_num % root or g_num % root:
            raise ValueError(f"{params}: non-integral multiplicities")
        return SrgSpectrum(r, s, f_num // root, g_num // root, theta_k, -2 * r - 1, -2 * s - 1)
    # irrational eigenvalues force the conference case
    if 2 * k + (v - 1) * lm != 0 or (v - 1) % 2:
        raise ValueError(f"{params}: f != g but r, s are non-integral")
    half = Fraction(1, 2)
    r = Surd(Fraction(lm, 2), half, disc)
    s = Surd(Fraction(lm, 2), -half, disc)
    theta_r = Surd(Fraction(-lm - 1), Fraction(-1), disc)
    theta_s = Surd(Fraction(-lm - 1), Fraction(1), disc)
    return SrgSpectrum(r, s, (v - 1) // 2, (v - 1) // 2, theta_k, theta_r, theta_s)


def complement_params(params: SrgParams) -> SrgParams:
    v, k, lam, mu = params.as_tuple()
    return SrgParams(v, v - k - 1, v - 2 * k + mu - 2, v - 2 * k + lam)


def check_srg(G: Graph) -> Optional[SrgParams]:
    """
    Parameters of G if it is a nontrivial strongly regular graph, else None.
    """
    v = G.v
    if v < 3:
        return None
    deg = G.degrees()
    k = int(deg[0])
    if np.any(deg != k) or k == 0 or k == v - 1:
        return None
    A = G.adjacency.astype(np.int64)
    A2 = A @ A
    off = ~np.eye(v, dtype=bool)
    adj_counts = np.unique(A2[G.adjacency])
    non_counts = np.unique(A2[~G.adjacency & off])
    if adj_counts.size != 1 or non_counts.size != 1:
        return None
    return SrgParams(v, k, int(adj_counts[0]), int(non_counts[0]))


def check_modular_srg(G: Graph, p: int) -> Optional[ModularSrgParams]:
    """
    SRG_p parameters of G, or None.

    Valencies and the common-neighbour counts of adjacent and of distinct
    non-adjacent pairs must each be constant mod p. A count with no pairs
    to constrain it (edgeless or complete graphs) is reported as 0.
    """
    v = G.v
    if v == 0:
        return None
    deg = G.degrees() % p
    if np.any(deg != deg[0]):
        return None
    A = G.adjacency.astype(np.int64)
    A2 = (A @ A) % p
    off = ~np.eye(v, dtype=bool)
    adj_counts = np.unique(A2[G.adjacency])
    non_counts = np.unique(A2[~G.adjacency & off])
    if adj_counts.size > 1 or non_counts.size > 1:
        return None
    lam = int(adj_counts[0]) if adj_counts.size else 0
    mu = int(non_counts[0]) if non_counts.size else 0
    return ModularSrgParams(p, v % p, int(deg[0]), lam, mu)


def seidel_relations(S: IntMat, p: int) -> Optional[Tuple[int, int, int, int]]:
    """
    (alpha, beta, gamma, theta) mod p with S1 = theta*1 and
    S^2 = alpha*J + beta*S + gamma*I, or None if no such relations hold.
    """
    n = S.rows
    if n < 2:
        return None
    M = np.array(np.mod(S.data, p), dtype=np.int64)
    ones_row = M.sum(axis=1) % p
    if np.any(ones_row != ones_row[0]):
        return None
    theta = int(ones_row[0])
    M2 = (M @ M) % p
    off = ~np.eye(n, dtype=bool)
    plus = M2[(M == 1) & off]
    minus = M2[(M == p - 1) & off]
    inv2 = pow(2, -1, p)
    if plus.size and minus.size:
        u, w = int(plus[0]), int(minus[0])
        alpha = (u + w) * inv2 % p
        beta = (u - w) * inv2 % p
    else:
        alpha, beta = int((plus if plus.size else minus)[0]), 0
    gamma = (int(M2[0, 0]) - alpha) % p
    expected = (alpha * np.ones((n, n), dtype=np.int64) + beta * M + gamma * np.eye(n, dtype=np.int64)) % p
    if not np.array_equal(M2, expected):
        return None
    return alpha, beta, gamma, theta


def modular_params_from_seidel(S: IntMat, p: int) -> Optional[ModularSrgParams]:
    """
    SRG_p parameters recovered from the Seidel relations alone.
    """
    rel = seidel_relations(S, p)
    if rel is None:
        return None
    alpha, beta, gamma, theta = rel
    inv2, inv4 = pow(2, -1, p), pow(4, -1, p)
    v = (alpha + gamma + 1) % p
    k = (alpha + gamma - theta) * inv2 % p
    lam = (2 * alpha - beta + gamma - 2 * theta - 3) * inv4 % p
    mu = (2 * alpha + beta + gamma - 2 * theta + 1) * inv4 % p
    return ModularSrgParams(p, v, k, lam, mu)


# ---------------------------------------------------------
# Families
# ---------------------------------------------------------
def get_available_families() -> Dict[str, str]:
    """
    Registered graph families and their arguments.
    """
    return {
        "triangular": "T(m): 2-subsets of [m], adjacent when they meet",
        "triangular_complement": "complement of T(m): adjacent when disjoint",
        "lattice": "rook's graph K_m x K_m",
        "paley": "Paley graph on F_q, q = p or p^2 with q = 1 mod 4",
        "from_edge_list": "graph read from an edge-list file",
    }


def _triangular_nx(m: int) -> nx.Graph:
    if m < 2:
        raise ValueError(f"triangular graphs need m >= 2, got {m}")
    return nx.line_graph(nx.complete_graph(m))


def _paley(q: int) -> Graph:
    if q % 4 != 1:
        raise ValueError(f"paley(q) needs q = 1 mod 4, got {q}")
    root = math.isqrt(q)
    if is_prime(q):
        ctx = make_field(q, 1)
    elif root * root == q and is_prime(root) and root % 2:
        ctx = make_field(root, 2)
    else:
        raise ValueError(f"paley(q) needs q an odd prime or the square of one, got {q}")
    elems = list(ctx.elements())
    squares = {(e.x, e.y) for e in elems if not e.is_zero() and is_square(e)}
    A = np.zeros((q, q), dtype=bool)
    for i, a in enumerate(elems):
        for j, b in enumerate(elems):
            d = a - b
            A[i, j] = (d.x, d.y) in squares
    return Graph(A)


def generate(family: str, arg: Union[int, str, Path]) -> Graph:
    """
    Build a graph from a registered family.

    Parameters
    ----------
    family : str
        One of get_available_families().
    arg : int or path
        m for triangular, triangular_complement and lattice; q for paley;
        a file path for from_edge_list.

    Returns
    -------
    Graph
    """
    if family == "triangular":
        return Graph.from_networkx(_triangular_nx(int(arg)))
    elif family == "triangular_complement":
        return Graph.from_networkx(nx.complement(_triangular_nx(int(arg))))
    elif family == "lattice":
        m = int(arg)
        if m < 2:
            raise ValueError(f"lattice graphs need m >= 2, got {m}")
        return Graph.from_networkx(nx.cartesian_product(nx.complete_graph(m), nx.complete_graph(m)))
    elif family == "paley":
        return _paley(int(arg))
    elif family == "from_edge_list":
        return read_edge_list(arg)
    raise ValueError(f"unknown graph family {family!r}; available: {', '.join(get_available_families())}")


def family_params(family: str, m: int) -> SrgParams:
    """
    SRG parameters of a registered family member, without building it.
    """
    if family == "triangular":
        return SrgParams(m * (m - 1) // 2, 2 * (m - 2), m - 2, 4)
    elif family == "triangular_complement":
        return complement_params(family_params("triangular", m))
    elif family == "lattice":
        return SrgParams(m * m, 2 * (m - 1), m - 2, 2)
    elif family == "paley":
        return SrgParams(m, (m - 1) // 2, (m - 5) // 4, (m - 1) // 4)
    raise ValueError(f"family {family!r} has no parameter formula")


def registry_graph_for(params: SrgParams) -> Optional[Tuple[str, int]]:
    """
    A registered (family, argument) whose SRG parameters equal params.
    """
    v = params.v
    m_tri = (1 + math.isqrt(1 + 8 * v)) // 2
    candidates: List[Tuple[str, int]] = []
    if m_tri * (m_tri - 1) // 2 == v and m_tri >= 5:
        candidates += [("triangular", m_tri), ("triangular_complement", m_tri)]
    m_lat = math.isqrt(v)
    if m_lat * m_lat == v and m_lat >= 3:
        candidates.append(("lattice", m_lat))
    if v % 4 == 1:
        root = math.isqrt(v)
        if is_prime(v) or (root * root == v and is_prime(root)):
            candidates.append(("paley", v))
    for family, m in candidates:
        if family_params(family, m) == params:
            return family, m
    return None


# ---------------------------------------------------------
# Edge lists
# ---------------------------------------------------------
def read_edge_list(path: Union[str, Path]) -> Graph:
    """
    Edge-list file: first line v, then one 'i j' pair per line (0-based).
    """
    path = Path(path)
    lines = [ln.split() for ln in path.read_text().splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 1:
        raise ValueError(f"{path}:1: expected the vertex count")
    try:
        v = int(lines[0][0])
        edges = [(int(a), int(b)) for a, b in lines[1:]]
    except ValueError:
        raise ValueError(f"{path}: edge lines must be two integers")
    return Graph.from_edges(v, edges)


def write_edge_list(G: Graph, path: Union[str, Path]) -> None:
    lines = [str(G.v)] + [f"{i} {j}" for i, j in G.edges()]
    Path(path).write_text("\n".join(lines) + "\n")
