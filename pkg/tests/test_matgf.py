import numpy as np
import pytest

from gf import make_field
from matgf import (DiscriminantClass, IntMat, MatGF, determinant,
                   discriminant_class, format_matrix, gram_factor,
                   p_rank, parse_matrix, rank, rational_rank, read_matrix,
                   row_echelon, write_matrix)


def _random_symmetric(ctx, n, rng):
    A = rng.integers(0, ctx.p, size=(ctx.l, n, n))
    return MatGF(ctx, A + np.swapaxes(A, 1, 2))


# --------------------------------------------------------------------------- #
# arithmetic
# --------------------------------------------------------------------------- #

def test_entries_reduced_on_construction():
    F = make_field(5)
    M = MatGF.from_ints(F, [[7, -1], [10, 3]])
    assert M.base_ints().tolist() == [[2, 4], [0, 3]]


def test_matmul_and_scale_over_extension():
    F = make_field(3, 2)
    t = F.elem(0, 1)
    M = MatGF.diagonal(F, [t, F.one()])
    assert M @ M == MatGF.diagonal(F, [t * t, F.one()])
    assert M.scale(2) == M + M
    assert (M - M).is_zero()


def test_shape_mismatch_raises():
    F = make_field(3)
    with pytest.raises(ValueError):
        MatGF.identity(F, 2) @ MatGF.identity(F, 3)
    with pytest.raises(ValueError):
        MatGF.identity(F, 2) + MatGF.identity(make_field(5), 2)


def test_intmat_reduce():
    S = IntMat([[0, -1], [-1, 0]])
    assert (S @ S) == IntMat.identity(2)
    assert S.reduce(make_field(7)) == MatGF.from_ints(make_field(7), [[0, 6], [6, 0]])


# --------------------------------------------------------------------------- #
# elimination
# --------------------------------------------------------------------------- #

def test_rank_small_cases():
    F = make_field(5)
    assert rank(MatGF.identity(F, 4)) == 4
    assert rank(MatGF.ones(F, 6)) == 1
    assert rank(MatGF.from_ints(F, [[1, 2], [2, 4]])) == 1
    assert rank(MatGF.zeros(F, 3, 3)) == 0
    assert rank(MatGF.zeros(F, 0, 3)) == 0


def test_row_echelon_pivots():
    F = make_field(5)
    E, pivots = row_echelon(MatGF.from_ints(F, [[0, 1, 2], [0, 2, 4], [0, 0, 0]]))
    assert pivots == [1]
    assert E[0, 1] == 1


def test_determinant():
    F = make_field(5)
    assert determinant(MatGF.from_ints(F, [[1, 2], [3, 4]])) == 3
    assert determinant(MatGF.from_ints(F, [[1, 2], [2, 4]])) == 0
    F9 = make_field(3, 2)
    t = F9.elem(0, 1)
    assert determinant(MatGF.diagonal(F9, [t, t])) == F9.elem(F9.nu)
    with pytest.raises(ValueError):
        determinant(MatGF.ones(F, 2, 3))


def test_p_rank_drops_where_eigenvalue_vanishes():
    # J - I of order 4 has eigenvalues 3 and -1
    M = IntMat.ones(4) - IntMat.identity(4)
    assert rational_rank(M) == 4
    assert p_rank(M, 3) == 3
    assert p_rank(M, 5) == 4


def test_rational_rank_bounds_p_rank():
    rng = np.random.default_rng(11)
    for _ in range(20):
        M = IntMat(rng.integers(-3, 4, size=(5, 7)).tolist())
        r = rational_rank(M)
        for p in (3, 5, 7):
            assert p_rank(M, p) <= r


def test_discriminant_class():
    F = make_field(5)
    assert discriminant_class(MatGF.identity(F, 3)) is DiscriminantClass.SQUARE
    assert discriminant_class(MatGF.diagonal(F, [F.one(), F.elem(2)])) is DiscriminantClass.NONSQUARE
    # basic submatrix of J is the 1x1 block [1]
    assert discriminant_class(MatGF.ones(F, 4)) is DiscriminantClass.SQUARE
    with pytest.raises(ValueError):
        discriminant_class(MatGF.zeros(F, 2, 2))


def _random_full_rank(ctx, rows, cols, rng):
    while True:
        A = MatGF.from_ints(ctx, rng.integers(0, ctx.p, size=(rows, cols)))
        if rank(A) == rows:
            return A


def _random_gram_of_rank(ctx, r, n, rng):
    A = _random_full_rank(ctx, r, n, rng)
    D = MatGF.from_ints(ctx, np.diag(rng.integers(1, ctx.p, size=r)))
    return A.T @ D @ A


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13])
@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_discriminant_under_congruence_and_rescaling(p, r):
    F = make_field(p)
    rng = np.random.default_rng(100 * p + r)
    nonresidue = F.nonsquare()
    for _ in range(5):
        G = _random_gram_of_rank(F, r, 6, rng)
        assert rank(G) == r
        cls = discriminant_class(G)
        P = _random_full_rank(F, 6, 6, rng)
        assert discriminant_class(P.T @ G @ P) is cls
        flipped = discriminant_class(G.scale(nonresidue))
        assert (flipped is not cls) == (r % 2 == 1)


def test_rank_invariant_under_permutation_and_transpose():
    F = make_field(7)
    rng = np.random.default_rng(9)
    for r in (1, 3, 5):
        G = _random_gram_of_rank(F, r, 7, rng)
        perm = rng.permutation(7)
        shuffled = MatGF(F, G.data[:, perm][:, :, perm])
        assert rank(shuffled) == rank(G.T) == r
        assert rank(MatGF(F, G.data[:, perm, :])) == r


# --------------------------------------------------------------------------- #
# congruence factorization
# --------------------------------------------------------------------------- #

@pytest.mark.parametrize("p,l", [(3, 1), (5, 1), (7, 1), (11, 1), (3, 2), (5, 2)])
def test_gram_factor_reconstructs(p, l):
    F = make_field(p, l)
    rng = np.random.default_rng(p * 10 + l)
    for n in (2, 4, 6):
        G = _random_symmetric(F, n, rng)
        if G.is_zero():
            continue
        X, M = gram_factor(G)
        assert X.rows == rank(G) == M.rows
        assert X.T @ M @ X == G
        ones = M.diagonal_entries()[:-1]
        assert all(e == 1 for e in ones)
        last = M.diagonal_entries()[-1]
        assert last == 1 or last == F.nonsquare()


def test_gram_factor_zero_diagonal():
    F = make_field(7)
    G = MatGF.from_ints(F, [[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    X, M = gram_factor(G)
    assert X.T @ M @ X == G
    assert X.rows == 3


def test_gram_factor_geometry_matches_discriminant():
    F = make_field(5)
    G = MatGF.diagonal(F, [F.elem(2), F.one(), F.one()])
    _, M = gram_factor(G)
    assert M.diagonal_entries()[-1] == F.nonsquare()
    G = MatGF.diagonal(F, [F.elem(2), F.elem(2)])
    _, M = gram_factor(G)
    assert M == MatGF.identity(F, 2)


def test_gram_factor_rejects_zero_and_asymmetric():
    F = make_field(3)
    with pytest.raises(ValueError):
        gram_factor(MatGF.zeros(F, 2, 2))
    with pytest.raises(ValueError):
        gram_factor(MatGF.from_ints(F, [[1, 1], [0, 1]]))


# --------------------------------------------------------------------------- #
# matrix files
# --------------------------------------------------------------------------- #

def test_matrix_file_round_trip(tmp_path):
    F = make_field(5, 2)
    M = MatGF.from_elems(F, [[F.elem(1, 2), F.zero()], [F.elem(0, 1), F.elem(4)]])
    path = tmp_path / "m.txt"
    write_matrix(M, path)
    assert read_matrix(path) == M
    S = IntMat([[0, -1, 1], [-1, 0, 1], [1, 1, 0]])
    assert parse_matrix(format_matrix(S)) == S


def test_matrix_header():
    text = "3 1 2 2\n1 2\n2 1\n"
    M = parse_matrix(text)
    assert isinstance(M, MatGF)
    assert M.ctx == make_field(3)
    assert isinstance(parse_matrix("0 0 1 2\n-1 5\n"), IntMat)


@pytest.mark.parametrize("text", [
    "",
    "3 1 2\n1 2\n",
    "3 1 2 2\n1 2\n",
    "3 1 2 2\n1 2\n2\n",
    "3 1 1 2\n1 3\n",
    "3 1 1 2\n1 t\n",
    "0 0 1 2\n1 x\n",
    "4 1 1 1\n1\n",
])
def test_malformed_matrix_text(text):
    with pytest.raises(ValueError):
        parse_matrix(text)
