import json
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd
import pytest

import cliquesearch
from cliquesearch import (CompatGraph, ExistenceWitness, GeometryCtx,
                          NonexistenceCertificate, SearchRecord,
                          build_compat_graph, is_maximal_clique,
                          load_search_result, make_geometry,
                          maximal_cliques_in_range, max_clique,
                          nonexistence_pipeline, replay_record,
                          save_search_result, search_geometry, seed_pair,
                          system_gram)
from frames import project_real_signature, verify_etf
from gf import make_field
from graphs import Graph
from matgf import IntMat, MatGF, gram_factor, rank

DATA = Path(__file__).parent / "data"

DIM5_ROWS = pd.read_csv(DATA / "table5.csv").to_dict("records")


def _bare_graph(adjacency: np.ndarray) -> CompatGraph:
    A = np.array(adjacency, dtype=bool)
    adj = [sum(1 << int(j) for j in np.flatnonzero(row)) for row in A]
    n = A.shape[0]
    return CompatGraph(GeometryCtx(3, 1, 0), 0, ((), ()), np.zeros((n, 0), dtype=np.int64), A, adj)


def _random_adjacency(n: int, density: float, rng) -> np.ndarray:
    upper = np.triu(rng.random((n, n)) < density, 1)
    return upper | upper.T


def _six_line_signature() -> IntMat:
    S = np.ones((6, 6), dtype=np.int64)
    S[0, 0] = 0
    cycle = Graph.from_networkx(nx.cycle_graph(5)).adjacency.astype(np.int64)
    S[1:, 1:] = 1 - 2 * cycle - np.eye(5, dtype=np.int64)
    return IntMat(S)


# --------------------------------------------------------------------------- #
# geometry and seeds
# --------------------------------------------------------------------------- #

def test_geometry_weights():
    assert make_geometry(3, 5, 0).weights.tolist() == [1, 1, 1, 1, 1]
    assert make_geometry(5, 5, 1).weights.tolist() == [1, 1, 1, 1, 2]
    assert make_geometry(7, 3, 1).gram == MatGF.diagonal(make_field(7), [make_field(7).elem(x) for x in (1, 1, 3)])


@pytest.mark.parametrize("p,d,s", [(4, 3, 0), (3, 0, 0), (3, 3, 2)])
def test_geometry_rejects(p, d, s):
    with pytest.raises(ValueError):
        make_geometry(p, d, s)


def test_seed_pair_is_lex_least():
    geom = make_geometry(3, 5, 0)
    psi1, psi2 = seed_pair(geom, 1)
    assert psi1 == (0, 0, 0, 0, 1)
    assert psi2 == (0, 1, 1, 1, 1)
    assert geom.form(psi1, psi2) == 1
    assert geom.form(psi2, psi2) == 1


def test_seed_pair_antipodal_at_minus_one():
    geom = make_geometry(5, 5, 0)
    psi1, psi2 = seed_pair(geom, 4)
    assert geom.form(psi1, psi1) == 4
    assert all((x + y) % 5 == 0 for x, y in zip(psi1, psi2))


def test_seed_pair_missing():
    with pytest.raises(ValueError):
        seed_pair(make_geometry(3, 1, 0), 1)
    with pytest.raises(ValueError):
        seed_pair(make_geometry(3, 1, 0), 2)


# --------------------------------------------------------------------------- #
# compatibility graphs
# --------------------------------------------------------------------------- #

def test_compat_graph_vertices_satisfy_constraints():
    geom = make_geometry(5, 4, 1)
    g = build_compat_graph(geom, 1)
    psi1, psi2 = g.seed
    for i in range(g.size):
        v = g.vertex(i)
        assert geom.form(v, v) == 1
        assert geom.form(v, psi1) == 1
        assert geom.form(v, psi2) ** 2 % 5 == 1
    assert [g.vertex(i) for i in range(g.size)] == sorted(g.vertex(i) for i in range(g.size))
    assert not np.any(np.diagonal(g.adjacency))


@pytest.mark.parametrize("row", [
    pytest.param(r, marks=pytest.mark.slow) if r["p"] == 19 else r for r in DIM5_ROWS
], ids=lambda r: f"p{r['p']}-s{r['s']}-a{r['a']}")
def test_dimension_five_graphs(row):
    geom = make_geometry(int(row["p"]), 5, int(row["s"]))
    g = build_compat_graph(geom, int(row["a"]))
    assert g.size == row["V_size"]
    omega, witness = max_clique(g)
    assert omega == row["omega"]
    assert len(witness) == omega
    assert all(g.adjacency[i, j] for i in witness for j in witness if i != j)


def test_compat_graph_independent_of_seed():
    geom = make_geometry(3, 5, 0)
    g = build_compat_graph(geom, 1)
    other = build_compat_graph(geom, 1, seed=((1, 0, 0, 0, 0), (1, 1, 1, 1, 0)))
    assert other.size == g.size == 24
    assert sorted(other.degrees()) == sorted(g.degrees())
    assert max_clique(other)[0] == max_clique(g)[0] == 9


# --------------------------------------------------------------------------- #
# clique search
# --------------------------------------------------------------------------- #

def test_edgeless_graph():
    g = _bare_graph(np.zeros((3, 3), dtype=bool))
    assert max_clique(g) == (1, (0,))
    assert maximal_cliques_in_range(g, 1, 1) == [(0,), (1,), (2,)]
    assert max_clique(_bare_graph(np.zeros((0, 0), dtype=bool))) == (0, ())


@pytest.mark.parametrize("n,density", [(12, 0.5), (24, 0.4), (30, 0.7)])
def test_cliques_match_networkx(n, density):
    rng = np.random.default_rng(n)
    A = _random_adjacency(n, density, rng)
    g = _bare_graph(A)
    G = nx.from_numpy_array(A.astype(int))
    reference = [tuple(sorted(c)) for c in nx.find_cliques(G)]
    omega, witness = max_clique(g)
    assert omega == max(len(c) for c in reference)
    assert is_maximal_clique(g, witness)
    lo, hi = min(3, omega), omega
    assert maximal_cliques_in_range(g, lo, hi) == sorted(c for c in reference if lo <= len(c) <= hi)


def test_search_is_worker_independent():
    rng = np.random.default_rng(23)
    g = _bare_graph(_random_adjacency(40, 0.6, rng))
    assert max_clique(g, workers=3) == max_clique(g, workers=1)
    omega = max_clique(g)[0]
    assert maximal_cliques_in_range(g, omega - 1, omega, workers=3) == \
        maximal_cliques_in_range(g, omega - 1, omega, workers=1)


def test_is_maximal_clique():
    g = _bare_graph(nx.to_numpy_array(nx.complete_graph(4)).astype(bool))
    assert is_maximal_clique(g, (0, 1, 2, 3))
    assert not is_maximal_clique(g, (0, 1, 2))
    with pytest.raises(ValueError):
        maximal_cliques_in_range(g, 3, 2)


@pytest.mark.slow
@pytest.mark.parametrize("a,count", [(1, 16), (4, 156)])
def test_dimension_five_spanning_cliques(a, count):
    geom = make_geometry(5, 5, 0)
    g = build_compat_graph(geom, a)
    cliques = maximal_cliques_in_range(g, 13, 25)
    assert len(cliques) == count
    ctx = make_field(5)
    for m in cliques:
        assert is_maximal_clique(g, m)
        rows = list(g.seed) + [g.vertex(v) for v in m]
        assert rank(MatGF.from_ints(ctx, rows)) in (3, 4)


# --------------------------------------------------------------------------- #
# soundness: a known frame sits inside the graph it should
# --------------------------------------------------------------------------- #

def test_projected_frame_is_a_clique():
    cert = project_real_signature(_six_line_signature(), 3, 11)
    G = cert.gram
    X, M = gram_factor(G)
    s = 0 if M == MatGF.identity(G.ctx, 3) else 1
    geom = make_geometry(11, 3, s)
    assert geom.gram == M
    cols = X.base_ints().T
    signs = [1] + [1 if G[0, j] == 1 else -1 for j in range(1, 6)]
    vectors = [tuple(int(x) for x in sign * col % 11) for sign, col in zip(signs, cols)]
    g = build_compat_graph(geom, int(cert.params.a), seed=(vectors[0], vectors[1]))
    index = {g.vertex(i): i for i in range(g.size)}
    members = [index[v] for v in vectors[2:]]
    assert all(g.adjacency[i, j] for i in members for j in members if i != j)
    assert max_clique(g)[0] >= 4


# --------------------------------------------------------------------------- #
# pipeline
# --------------------------------------------------------------------------- #

def test_witness_in_plane():
    result = nonexistence_pipeline(2, 3, primes=[5])
    assert isinstance(result, ExistenceWitness)
    cert = verify_etf(system_gram(result.geom, result.vectors))
    assert (cert.params.d, cert.params.n) == (2, 3)
    assert int(cert.params.b) == 1


def test_witness_for_six_lines():
    result = nonexistence_pipeline(3, 6, primes=[11])
    assert isinstance(result, ExistenceWitness)
    assert result.certificate.params.d == 3
    assert result.certificate.params.n == 6
    assert int(result.a) in (4, 7)


def test_small_primes_refute_fifteen_vectors(tmp_path):
    result = nonexistence_pipeline(5, 15, primes=[3, 7])
    assert isinstance(result, NonexistenceCertificate)
    assert result.verdict == "nonexistent"
    expected = {(r["p"], r["s"], r["a"]): (r["V_size"], r["omega"]) for r in DIM5_ROWS}
    assert len(result.records) == 6
    for record in result.records:
        assert (record.V_size, record.omega) == expected[(record.p, record.s, record.a)]
        assert replay_record(record, 5)
    path = tmp_path / "dim5.json"
    save_search_result(result, path)
    loaded = load_search_result(path)
    assert loaded.verdict == "nonexistent"
    assert [r.to_dict() for r in loaded.records] == [r.to_dict() for r in result.records]


def test_tampered_verdict_is_rejected(tmp_path):
    record = SearchRecord(3, 0, 1, ((0, 0, 0, 0, 1), (0, 1, 1, 1, 1)), 24, 9)
    cert = NonexistenceCertificate(5, 15, [3], [record])
    path = tmp_path / "cert.json"
    save_search_result(cert, path)
    data = json.loads(path.read_text())
    data["verdict"] = "inconclusive"
    path.write_text(json.dumps(data))
    with pytest.raises(ValueError):
        load_search_result(path)
    path.write_text("{not json")
    with pytest.raises(ValueError):
        load_search_result(path)


def test_spanning_clique_without_witness_is_inconclusive(tmp_path, monkeypatch):
    monkeypatch.setattr(cliquesearch, "_find_witness", lambda g, m, n: (None, True))
    result = nonexistence_pipeline(2, 3, primes=[5])
    assert isinstance(result, NonexistenceCertificate)
    assert result.verdict == "inconclusive"
    open_blocks = [r for r in result.records if not r.refuted]
    assert open_blocks
    for record in open_blocks:
        assert record.rank_d_unresolved >= 1
        assert record.rank_multiset.get(2, 0) >= record.rank_d_unresolved
    path = tmp_path / "plane.json"
    save_search_result(result, path)
    loaded = load_search_result(path)
    assert loaded.verdict == "inconclusive"
    assert [r.rank_d_unresolved for r in loaded.records] == [r.rank_d_unresolved for r in result.records]
    # claiming refutation while holding a spanning clique
    data = json.loads(path.read_text())
    for r in data["records"]:
        r["refuted"] = True
    data["verdict"] = "nonexistent"
    path.write_text(json.dumps(data))
    with pytest.raises(ValueError):
        load_search_result(path)


def test_witness_file_round_trip(tmp_path):
    result = nonexistence_pipeline(2, 3, primes=[5])
    path = tmp_path / "witness.json"
    save_search_result(result, path)
    loaded = load_search_result(path)
    assert isinstance(loaded, ExistenceWitness)
    assert loaded.vectors == result.vectors


def test_search_geometry_without_seed():
    record, witness = search_geometry(make_geometry(5, 2, 0), 2, 3)
    assert witness is None
    assert (record.V_size, record.omega, record.refuted) == (0, 0, True)
    assert replay_record(record, 2)


def test_pipeline_rejects():
    with pytest.raises(ValueError):
        nonexistence_pipeline(3, 3)
    with pytest.raises(ValueError):
        nonexistence_pipeline(3, 6, real_exists=True)
    with pytest.raises(ValueError):
        nonexistence_pipeline(3, 7, primes=[9])


@pytest.mark.slow
def test_fifteen_vectors_in_dimension_five_do_not_exist():
    result = nonexistence_pipeline(5, 15)
    assert result.primes == [3, 5, 7, 19]
    assert result.verdict == "nonexistent"
    assert len(result.records) == len(DIM5_ROWS)
    for record in result.records:
        assert replay_record(record, 5)
