import networkx as nx
import numpy as np
import pytest

from frames import (UNBOUNDED, GerzonStatus, IntegralityResult, admissible_a,
                    candidate_primes, certificate_record, descend_base_field,
                    gerzon_check, integrality_test, lift_to_real,
                    load_certificate, naimark, normalize_switching,
                    project_real_signature, rescale, save_certificate,
                    verify_etf, welch_residual)
from gf import make_field
from graphs import Graph, generate, seidel_matrix
from matgf import IntMat, MatGF, gram_factor, rank


def petersen_signature() -> IntMat:
    # S^2 = 9I: the real 5 x 10 ETF
    return seidel_matrix(generate("triangular_complement", 5))


def six_line_signature() -> IntMat:
    # pentagon Seidel matrix bordered by a row of ones: the real 3 x 6 ETF
    inner = np.array(seidel_matrix(Graph.from_networkx(nx.cycle_graph(5))).data, dtype=np.int64)
    S = np.ones((6, 6), dtype=np.int64)
    S[0, 0] = 0
    S[1:, 1:] = inner
    return IntMat(S)


def _ints(cert):
    params = cert.params
    return int(params.a), int(params.b), int(params.c)


# --------------------------------------------------------------------------- #
# verification
# --------------------------------------------------------------------------- #

def test_identity_is_orthonormal_frame():
    cert = verify_etf(MatGF.identity(make_field(3), 4))
    assert _ints(cert) == (1, 0, 1)
    assert (cert.params.d, cert.params.n) == (4, 4)


@pytest.mark.parametrize("n,p,c", [(4, 5, 4), (5, 5, 0), (3, 7, 3)])
def test_all_ones_is_rank_one_frame(n, p, c):
    cert = verify_etf(MatGF.ones(make_field(p), n))
    assert _ints(cert) == (1, 1, c)
    assert cert.params.d == 1
    assert welch_residual(cert.params) == 0


def test_verify_rejects_non_etf():
    F = make_field(5)
    assert verify_etf(MatGF.from_ints(F, [[1, 2], [2, 0]])) is None
    assert verify_etf(MatGF.from_ints(F, [[1, 2], [3, 1]])) is None
    assert verify_etf(MatGF.from_ints(F, [[1, 1, 2], [1, 1, 1], [2, 1, 1]])) is None
    assert verify_etf(MatGF.zeros(F, 3, 3)) is None
    with pytest.raises(ValueError):
        verify_etf(MatGF.ones(F, 2, 3))


def test_gerzon_check():
    assert gerzon_check(10, 54) is GerzonStatus.WITHIN
    assert gerzon_check(10, 55) is GerzonStatus.AT_BOUND
    assert gerzon_check(10, 56) is GerzonStatus.VIOLATION


# --------------------------------------------------------------------------- #
# projections of real signatures
# --------------------------------------------------------------------------- #

@pytest.mark.parametrize("p,a,c,d", [(3, 0, 0, 4), (5, 2, 4, 5), (7, 3, 6, 5), (17, 3, 6, 5)])
def test_petersen_projection(p, a, c, d):
    cert = project_real_signature(petersen_signature(), 5, p)
    assert _ints(cert) == (a, 1, c)
    assert (cert.params.d, cert.params.n) == (d, 10)
    assert cert.provenance == "project-real"


def test_six_lines_projection_with_chosen_root():
    F = make_field(11)
    cert = project_real_signature(six_line_signature(), 3, 11)
    assert _ints(cert) == (4, 1, 8)
    other = project_real_signature(six_line_signature(), 3, 11, delta=F.elem(7))
    assert _ints(other) == (7, 1, 3)
    assert other.params.d == 3
    with pytest.raises(ValueError):
        project_real_signature(six_line_signature(), 3, 11, delta=F.elem(5))


def test_projection_needs_square_root():
    # 5 is a non-square mod 7; F_49 has it
    with pytest.raises(ValueError):
        project_real_signature(six_line_signature(), 3, 7)
    cert = project_real_signature(six_line_signature(), 3, 7, l=2)
    assert cert.params.ctx.l == 2
    assert cert.params.d == 3


def test_projection_rejects_non_signature():
    with pytest.raises(ValueError):
        project_real_signature(IntMat([[0, 2], [2, 0]]), 1, 3)
    with pytest.raises(ValueError):
        project_real_signature(petersen_signature(), 4, 3)


# --------------------------------------------------------------------------- #
# transformations
# --------------------------------------------------------------------------- #

def test_naimark_complement_is_involution():
    cert = project_real_signature(petersen_signature(), 5, 7)
    comp = naimark(cert)
    assert _ints(comp) == (3, 1, 6)
    assert comp.params.d == 5
    again = naimark(comp)
    assert again.gram == cert.gram


def test_naimark_needs_nonzero_c():
    with pytest.raises(ValueError):
        naimark(project_real_signature(petersen_signature(), 5, 3))


def test_rescale():
    cert = project_real_signature(petersen_signature(), 5, 7)
    scaled = verify_etf(rescale(cert.gram, 2))
    assert _ints(scaled) == (6, 4, 5)
    with pytest.raises(ValueError):
        rescale(cert.gram, 7)


@pytest.mark.parametrize("alpha,beta", [(2, 3), (3, 5), (6, 6), (4, 2)])
def test_rescale_composes(alpha, beta):
    cert = project_real_signature(petersen_signature(), 5, 7)
    G = cert.gram
    twice = rescale(rescale(G, alpha), beta)
    assert twice == rescale(G, alpha * beta)
    a, b, c = _ints(cert)
    ab = alpha * beta % 7
    assert _ints(verify_etf(twice)) == (ab * a % 7, ab * ab * b % 7, ab * c % 7)
    assert verify_etf(twice).params.d == cert.params.d


@pytest.mark.parametrize("p", [3, 5, 7, 17])
def test_verify_is_invariant_under_permutation(p):
    cert = project_real_signature(petersen_signature(), 5, p)
    rng = np.random.default_rng(p)
    for _ in range(3):
        perm = rng.permutation(10)
        shuffled = MatGF(cert.gram.ctx, cert.gram.data[:, perm][:, :, perm])
        assert verify_etf(shuffled).params == cert.params


def test_switching_normalization_is_canonical():
    cert = project_real_signature(petersen_signature(), 5, 7)
    rng = np.random.default_rng(3)
    signs = rng.choice([-1, 1], size=10)
    switched = MatGF(cert.gram.ctx, cert.gram.data * np.outer(signs, signs)[None])
    assert verify_etf(switched).params == cert.params
    normalized = normalize_switching(switched)
    assert normalized == normalize_switching(cert.gram)
    assert all(normalized[0, j] == 1 for j in range(1, 10))


def test_descend_to_prime_field():
    cert = project_real_signature(petersen_signature(), 5, 3, l=2)
    assert cert.gram.ctx.l == 2
    down, j = descend_base_field(cert)
    assert j == 1
    assert down.gram.ctx == make_field(3)
    assert down.params.d == cert.params.d == 4


def test_factorization_realizes_projected_frame():
    cert = project_real_signature(petersen_signature(), 5, 7)
    X, M = gram_factor(cert.gram)
    assert X.rows == cert.params.d
    assert X.T @ M @ X == cert.gram
    assert rank(X) == cert.params.d


# --------------------------------------------------------------------------- #
# lifting and existence conditions
# --------------------------------------------------------------------------- #

def test_lift_recovers_real_signature():
    cert = project_real_signature(petersen_signature(), 5, 17)
    S_hat, real_d = lift_to_real(cert)
    assert S_hat == petersen_signature()
    assert real_d == 5


def test_lift_needs_large_prime():
    with pytest.raises(ValueError):
        lift_to_real(project_real_signature(petersen_signature(), 5, 7))


def test_integrality():
    assert integrality_test(5, 15, 3) is IntegralityResult.PASS
    assert integrality_test(5, 15, 5) is IntegralityResult.INAPPLICABLE
    assert integrality_test(5, 15, 7) is IntegralityResult.INAPPLICABLE
    assert integrality_test(5, 15, 11) is IntegralityResult.FAIL
    assert integrality_test(5, 15, 19) is IntegralityResult.PASS
    with pytest.raises(ValueError):
        integrality_test(3, 6, 5)


def test_admissible_a_for_fifteen_vectors_in_dimension_five():
    assert admissible_a(5, 15, 3) == [1, 2]
    assert admissible_a(5, 15, 5) == [0, 1, 2, 3, 4]
    assert admissible_a(5, 15, 7) == [0]
    assert admissible_a(5, 15, 19) == [8, 11]


def test_candidate_primes():
    assert candidate_primes(5, 15, False) == [3, 5, 7, 19]
    assert candidate_primes(5, 15, True) == UNBOUNDED


# --------------------------------------------------------------------------- #
# certificate files
# --------------------------------------------------------------------------- #

def test_certificate_record_sign_conventions():
    cert = project_real_signature(petersen_signature(), 5, 7)
    raw = certificate_record(cert, sign="raw")
    assert (raw["a"], raw["c"]) == ("3", "6")
    lex = certificate_record(verify_etf(cert.gram.scale(-1)))
    assert (lex["a"], lex["c"]) == ("3", "6")
    assert lex["gerzon"] == "within"


def test_certificate_round_trip(tmp_path):
    cert = project_real_signature(six_line_signature(), 3, 7, l=2)
    path = tmp_path / "six.cert"
    gram_path = save_certificate(cert, path)
    assert gram_path == tmp_path / "six.gram"
    loaded = load_certificate(path)
    assert loaded.same_params(cert)
    assert loaded.provenance == "project-real"


def test_tampered_certificate_is_rejected(tmp_path):
    cert = project_real_signature(petersen_signature(), 5, 7)
    path = tmp_path / "pet.cert"
    save_certificate(cert, path)
    path.write_text(path.read_text().replace("d: 5", "d: 4"))
    with pytest.raises(ValueError):
        load_certificate(path)
