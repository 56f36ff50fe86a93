import os
import sys
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis.strategies import integers

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))
from counters import WorkCounter
from errors import ContractViolation, SingularMatrixError
from field_arith import (
    DEFAULT_PRIME,
    add,
    determinant,
    from_rows,
    identity,
    inv_scalar,
    mat_inverse,
    mat_mul,
    mulmod,
    outer,
    random_matrix,
    rank,
    scale,
    sub,
    transpose,
    zeros,
)

P = DEFAULT_PRIME


def _schoolbook(a, b, p):
    n, k, m = len(a), len(b), len(b[0])
    return [[sum(a[i][t] * b[t][j] for t in range(k)) % p for j in range(m)] for i in range(n)]


def _leibniz_det(rows, p):
    n = len(rows)
    total = 0
    for perm in permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = -1 if inversions % 2 else 1
        for i, j in enumerate(perm):
            term = term * rows[i][j] % p
        total += term
    return total % p


def test_identity_product() -> None:
    b = random_matrix(3, 3, seed=4)
    assert mat_mul(identity(3), b) == b


def test_column_swap_product() -> None:
    a = from_rows([[1, 2], [3, 4]])
    b = from_rows([[0, 1], [1, 0]])
    assert mat_mul(a, b).tolist() == [[2, 1], [4, 3]]


def test_random_product_matches_schoolbook() -> None:
    a = random_matrix(8, 8, seed=1)
    b = random_matrix(8, 8, seed=2)
    assert mat_mul(a, b).tolist() == _schoolbook(a.tolist(), b.tolist(), P)


def test_rectangular_product_and_mismatch() -> None:
    a = random_matrix(3, 5, seed=3)
    b = random_matrix(5, 2, seed=4)
    assert mat_mul(a, b).tolist() == _schoolbook(a.tolist(), b.tolist(), P)
    with pytest.raises(ContractViolation, match="cannot multiply"):
        mat_mul(a, a)


def test_strassen_and_workers_are_bit_identical() -> None:
    rng = np.random.default_rng(9)
    a = rng.integers(0, P, size=(16, 16), dtype=np.int64)
    b = rng.integers(0, P, size=(16, 16), dtype=np.int64)
    plain = mulmod(a, b, P)
    assert np.array_equal(mulmod(a, b, P, strassen=True), plain)
    assert np.array_equal(mulmod(a, b, P, workers=4), plain)


def test_product_charges_field_work() -> None:
    counter = WorkCounter()
    mat_mul(random_matrix(4, 3, seed=1), random_matrix(3, 5, seed=2), counter=counter)
    assert counter.get("field_mul") == 4 * 3 * 5


def test_inverse_of_identity_and_small_diagonal() -> None:
    assert mat_inverse(identity(5)) == identity(5)
    inv = mat_inverse(from_rows([[2, 0], [0, 3]], p=7))
    assert inv.tolist() == [[4, 0], [0, 5]]


def test_random_inverse_multiplies_back() -> None:
    a = random_matrix(10, 10, seed=11)
    inv = mat_inverse(a)
    assert mat_mul(a, inv) == identity(10)
    assert mat_mul(inv, a) == identity(10)


def test_singular_inverse_raises() -> None:
    a = from_rows([[1, 2, 3], [1, 2, 3], [0, 1, 1]])
    with pytest.raises(SingularMatrixError):
        mat_inverse(a)
    assert determinant(a) == 0
    assert rank(a) == 2


@settings(max_examples=10, deadline=None)
@given(integers(min_value=0, max_value=2**32 - 1), integers(min_value=1, max_value=5))
def test_determinant_matches_leibniz(seed, n) -> None:
    a = random_matrix(n, n, seed=seed)
    assert determinant(a) == _leibniz_det(a.tolist(), P)


def test_identity_determinant() -> None:
    assert determinant(identity(4)) == 1


def test_determinant_sign_after_swap() -> None:
    a = from_rows([[0, 1], [1, 0]])
    assert determinant(a) == P - 1


def test_determinant_is_multiplicative() -> None:
    a = random_matrix(6, 6, seed=21)
    b = random_matrix(6, 6, seed=22)
    assert determinant(mat_mul(a, b)) == determinant(a) * determinant(b) % P


def test_rank_examples() -> None:
    assert rank(zeros(3, 4)) == 0
    assert rank(identity(6)) == 6
    assert rank(outer([1, 2, 3], [4, 5, 6, 7])) == 1


@settings(max_examples=25, deadline=None)
@given(integers(min_value=0, max_value=2**32 - 1))
def test_invertibility_agrees_across_operations(seed) -> None:
    a = from_rows(np.random.default_rng(seed).integers(0, 3, size=(4, 4)).tolist(), p=3)
    det = determinant(a)
    try:
        mat_inverse(a)
        inverted = True
    except SingularMatrixError:
        inverted = False
    assert (det != 0) == inverted == (rank(a) == 4)


def test_product_is_associative() -> None:
    a, b, c = (random_matrix(5, 5, seed=s) for s in (31, 32, 33))
    assert mat_mul(mat_mul(a, b), c) == mat_mul(a, mat_mul(b, c))


def test_random_matrix_is_deterministic_and_handles_empty() -> None:
    assert random_matrix(4, 4, seed=5) == random_matrix(4, 4, seed=5)
    assert random_matrix(4, 4, seed=5) != random_matrix(4, 4, seed=6)
    empty = random_matrix(0, 0, seed=1)
    assert empty.rows == 0 and empty.cols == 0


def test_random_entries_are_uniform() -> None:
    entries = np.array(random_matrix(100, 100, seed=7).entries, dtype=float)
    sigma = P / np.sqrt(12) / np.sqrt(entries.size)
    assert abs(entries.mean() - (P - 1) / 2) < 5 * sigma


def test_elementwise_helpers() -> None:
    a = from_rows([[1, 2], [3, 4]], p=5)
    b = from_rows([[4, 4], [4, 4]], p=5)
    assert add(a, b).tolist() == [[0, 1], [2, 3]]
    assert sub(a, b).tolist() == [[2, 3], [4, 0]]
    assert scale(a, 3).tolist() == [[3, 1], [4, 2]]
    assert transpose(a).tolist() == [[1, 3], [2, 4]]
    with pytest.raises(ContractViolation, match="mixed field"):
        add(a, from_rows([[1, 2], [3, 4]], p=7))


def test_inv_scalar() -> None:
    assert inv_scalar(3, 7) == 5
    with pytest.raises(SingularMatrixError):
        inv_scalar(0, 7)
