import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.core.exact_linalg import (
    RatMatrix,
    Subspace,
    dot,
    euclidean_norm,
    extend_functional,
    intersect,
    kernel,
    rank,
    rational_sqrt,
    rref,
    solve,
    subspace_sum,
    to_fraction,
)
from app.exceptions import DimensionMismatchError, ExtensionError, InvalidParameterError

F = Fraction


def matrices(max_rows=4, max_cols=5):
    return st.integers(1, max_rows).flatmap(
        lambda r: st.integers(1, max_cols).flatmap(
            lambda c: st.lists(st.lists(st.integers(-3, 3), min_size=c, max_size=c), min_size=r, max_size=r)
        )
    )


def subspace_pairs(max_dim=4):
    def pair(n):
        vectors = st.lists(st.lists(st.integers(-2, 2), min_size=n, max_size=n), max_size=n)
        return st.tuples(st.just(n), vectors, vectors)

    return st.integers(1, max_dim).flatmap(pair)


class TestScalars:
    @pytest.mark.parametrize(
        "value, expected",
        [("3/4", F(3, 4)), (" -6/8 ", F(-3, 4)), (5, F(5)), (0.5, F(1, 2)), (np.int64(7), F(7))],
    )
    def test_to_fraction(self, value, expected):
        assert to_fraction(value) == expected

    @pytest.mark.parametrize("value", [True, "abc", "1/0", None])
    def test_to_fraction_rejects(self, value):
        with pytest.raises(InvalidParameterError):
            to_fraction(value)

    def test_rational_sqrt(self):
        assert rational_sqrt(F(9, 4)) == F(3, 2)
        assert rational_sqrt(F(2)) is None
        assert rational_sqrt(F(-1)) is None

    def test_euclidean_norm(self):
        assert euclidean_norm((3, 4)) == F(5)
        assert math.isclose(euclidean_norm((1, 1)), math.sqrt(2), rel_tol=1e-12)


class TestRref:
    def test_identity(self):
        assert rref(RatMatrix.identity(2)) == RatMatrix.identity(2)

    def test_rank_one(self):
        assert rref(RatMatrix.from_rows([[2, 4], [1, 2]])).entries == ((1, 2), (0, 0))

    def test_ragged_matrix(self):
        with pytest.raises(DimensionMismatchError):
            RatMatrix.from_rows([[1, 2], [3]])

    @given(matrices())
    def test_idempotent(self, rows):
        once = rref(RatMatrix.from_rows(rows))
        assert rref(once) == once

    @given(matrices())
    def test_row_space_preserved(self, rows):
        mat = RatMatrix.from_rows(rows)
        original = Subspace.span(mat.entries, mat.cols)
        reduced = Subspace.span(rref(mat).entries, mat.cols)
        assert original == reduced
        assert original.dim == rank(mat)


class TestKernel:
    def test_identity_has_zero_kernel(self):
        assert kernel(RatMatrix.identity(3)).is_zero

    def test_zero_matrix_has_full_kernel(self):
        assert kernel(RatMatrix.zeros(2, 3)) == Subspace.full(3)

    def test_single_equation(self):
        mat = RatMatrix.from_rows([[1, 1, 1]])
        space = kernel(mat)
        assert space.dim == 2
        for v in space.basis:
            assert mat.apply(v) == (0,)

    @given(matrices())
    def test_rank_nullity(self, rows):
        mat = RatMatrix.from_rows(rows)
        space = kernel(mat)
        assert rank(mat) + space.dim == mat.cols
        for v in space.basis:
            assert all(x == 0 for x in mat.apply(v))


class TestSolve:
    def test_particular_solution(self):
        mat = RatMatrix.from_rows([[1, 2], [3, 4]])
        x = solve(mat, [5, 6])
        assert mat.apply(x) == (5, 6)

    def test_inconsistent(self):
        assert solve(RatMatrix.from_rows([[1, 1], [1, 1]]), [1, 2]) is None

    @given(matrices(), st.data())
    def test_solution_of_consistent_system(self, rows, data):
        mat = RatMatrix.from_rows(rows)
        x0 = data.draw(st.lists(st.integers(-3, 3), min_size=mat.cols, max_size=mat.cols))
        x = solve(mat, mat.apply(x0))
        assert x is not None
        assert mat.apply(x) == mat.apply(x0)


class TestSubspace:
    def test_canonical_equality(self):
        assert Subspace.span([(1, 1), (1, -1)], 2) == Subspace.full(2)

    def test_coordinates_and_contains(self):
        space = Subspace.span([(1, 0, 1), (0, 1, 1)], 3)
        assert space.contains((2, 3, 5))
        assert not space.contains((0, 0, 1))
        assert space.coordinates((2, 3, 5)) == (2, 3)
        assert space.coordinates((0, 0, 1)) is None

    def test_complement(self):
        space = Subspace.span([(1, 1, 0)], 3)
        complement = space.complement_basis()
        assert len(complement) == 2
        assert subspace_sum(space, Subspace.span(complement, 3)) == Subspace.full(3)

    def test_residual_rows_float(self):
        space = Subspace.span([(1, 1)], 2)
        residual = space.residual_rows(np.array([[2.0, 2.0], [1.0, 0.0]]))
        assert np.allclose(residual[0], 0.0)
        assert not np.allclose(residual[1], 0.0)


class TestIntersect:
    def test_axes(self):
        assert intersect(Subspace.span([(1, 0)], 2), Subspace.span([(0, 1)], 2)).is_zero

    def test_idempotent(self):
        x = Subspace.span([(1, 2, 3), (0, 1, 1)], 3)
        assert intersect(x, x) == x

    def test_planes_in_three_space(self):
        a = Subspace.span([(1, 1, 0), (0, 0, 1)], 3)
        b = Subspace.span([(1, 1, 0), (1, 0, 0)], 3)
        assert intersect(a, b) == Subspace.span([(1, 1, 0)], 3)

    @given(subspace_pairs())
    def test_dimension_formula(self, case):
        n, us, vs = case
        a, b = Subspace.span(us, n), Subspace.span(vs, n)
        meet = intersect(a, b)
        assert subspace_sum(a, b).dim + meet.dim == a.dim + b.dim
        for v in meet.basis:
            assert a.contains(v) and b.contains(v)


class TestExtendFunctional:
    def test_disjoint_axes(self):
        e, f = Subspace.span([(1, 0)], 2), Subspace.span([(0, 1)], 2)
        assert extend_functional(2, e, f, [1]) == (1, 0)

    def test_zero_on_everything(self):
        full = Subspace.full(3)
        assert extend_functional(3, full, full, [0, 0, 0]) == (0, 0, 0)

    def test_nonzero_on_intersection(self):
        e = Subspace.span([(1, 0, 0)], 3)
        with pytest.raises(ExtensionError):
            extend_functional(3, e, e, [1])

    def test_zero_on_complement(self):
        e, f = Subspace.span([(1, 0, 0)], 3), Subspace.span([(0, 1, 0)], 3)
        assert extend_functional(3, e, f, [5]) == (5, 0, 0)

    @given(st.data())
    def test_contract_in_five_space(self, data):
        vec = st.lists(st.integers(-2, 2), min_size=5, max_size=5)
        e = Subspace.span(data.draw(st.lists(vec, min_size=3, max_size=3)), 5)
        f = Subspace.span(data.draw(st.lists(vec, min_size=2, max_size=2)), 5)
        # ψ is the restriction of a functional g vanishing on F, so it vanishes on E∩F
        annihilator = kernel(RatMatrix(f.basis)) if not f.is_zero else Subspace.full(5)
        coeffs = data.draw(st.lists(st.integers(-2, 2), min_size=annihilator.dim, max_size=annihilator.dim))
        g = tuple(sum((F(c) * v[i] for c, v in zip(coeffs, annihilator.basis)), F(0)) for i in range(5))
        psi = [dot(g, v) for v in e.basis]
        psi_result = extend_functional(5, e, f, psi)
        for v, value in zip(e.basis, psi):
            assert dot(psi_result, v) == value
        for v in f.basis:
            assert dot(psi_result, v) == 0
