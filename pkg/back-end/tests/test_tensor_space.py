from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.core.exact_linalg import Subspace
from app.core.tensor_space import (
    ExtendedMap,
    ModelParams,
    PhiMap,
    TensorVW,
    WSpace,
    apply_phi,
    has_equal_coordinates,
    nasty_multiple,
    nasty_slice,
    nasty_subspace,
    nasty_vector,
    rank_one,
)
from app.exceptions import (
    DependentBasisError,
    InvalidParameterError,
    NotInSubspaceError,
    PhiRangeError,
    TensorValidationError,
)


def v_vectors(min_m=2, max_m=5):
    """Vectors of V: integer coordinates summing to zero."""
    return st.integers(min_m, max_m).flatmap(
        lambda m: st.lists(st.integers(-3, 3), min_size=m - 1, max_size=m - 1).map(lambda head: head + [-sum(head)])
    )


class TestModelParams:
    @pytest.mark.parametrize("m, ell", [(1, 1), (3, 0)])
    def test_rejects(self, m, ell):
        with pytest.raises(InvalidParameterError):
            ModelParams(m, ell)

    def test_tensor_dim(self):
        assert ModelParams(4, 3).tensor_dim == 12


class TestTensorVW:
    def test_column_sum_violation_names_column(self):
        with pytest.raises(TensorValidationError) as info:
            TensorVW(((1, 0), (0, 1), (0, -1)))
        assert info.value.column == 1
        assert info.value.total == 1

    def test_flat_index(self):
        params = ModelParams(3, 2)
        tensor = TensorVW(((1, 2), (3, 4), (-4, -6)))
        flat = tensor.flatten()
        # entry (j, k) sits at (j-1)·ℓ + k, 1-based
        assert flat[(2 - 1) * 2 + 2 - 1] == 4
        assert TensorVW.from_flat(flat, params) == tensor

    def test_arithmetic(self):
        t = TensorVW(((1,), (-1,)))
        assert (t + t) == 2 * t
        assert (-t).entries == ((-1,), (1,))

    def test_subtraction(self):
        t = TensorVW(((1, 2), (0, -1), (-1, -1)))
        u = TensorVW(((0, 1), (1, 0), (-1, -1)))
        assert (2 * t - u).entries == ((2, 3), (-1, -2), (-1, -1))
        assert t - t == TensorVW.zero(ModelParams(3, 2))


class TestNastyVectors:
    @pytest.mark.parametrize("j, m, expected", [(1, 3, (2, -1, -1)), (2, 2, (-1, 1)), (3, 4, (-1, -1, 3, -1))])
    def test_nasty_vector(self, j, m, expected):
        assert nasty_vector(j, ModelParams(m, 1)) == expected

    def test_digit_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            nasty_vector(4, ModelParams(3, 1))

    def test_rank_one_column(self, m3l1):
        assert rank_one(nasty_vector(1, m3l1), (1,)).entries == ((2,), (-1,), (-1,))

    def test_rank_one_zero(self):
        assert rank_one((0, 0, 0), (1, 2)) == TensorVW.zero(ModelParams(3, 2))

    def test_rank_one_outside_v(self):
        with pytest.raises(NotInSubspaceError):
            rank_one((1, 0, 0), (1,))

    @given(v_vectors(), st.lists(st.integers(-3, 3), min_size=1, max_size=3))
    def test_rank_one_minors_vanish(self, v, a):
        entries = rank_one(v, a).entries
        for r in range(len(entries)):
            for s in range(len(entries)):
                for k in range(len(a)):
                    for t in range(len(a)):
                        assert entries[r][k] * entries[s][t] == entries[r][t] * entries[s][k]

    def test_nasty_subspace_dimension(self):
        params = ModelParams(4, 3)
        assert nasty_subspace(2, params).dim == 3


class TestEqualCoordinates:
    @pytest.mark.parametrize(
        "v, expected",
        [((-4, 2, 2), (1, Fraction(-2))), ((3, -3), (1, Fraction(3))), ((1, -1, 0), None), ((0, 0, 0), (1, 0))],
    )
    def test_nasty_multiple(self, v, expected):
        assert nasty_multiple(v) == expected

    @given(v_vectors())
    def test_detector_agrees_with_multiple(self, v):
        found = nasty_multiple(v)
        assert has_equal_coordinates(v) == (found is not None)
        if found is not None:
            j, c = found
            params = ModelParams(len(v), 1)
            assert tuple(c * x for x in nasty_vector(j, params)) == tuple(v)


class TestWSpace:
    def test_dependent_basis(self):
        t = TensorVW(((1,), (-1,), (0,)))
        with pytest.raises(DependentBasisError) as info:
            WSpace(ModelParams(3, 1), (t, 2 * t))
        assert info.value.index == 1

    @pytest.mark.parametrize("m, ell", [(2, 1), (3, 2), (4, 3)])
    def test_full_dimension(self, m, ell):
        assert WSpace.full(ModelParams(m, ell)).dim == (m - 1) * ell

    def test_spanned_by_drops_dependents(self):
        t = TensorVW(((1,), (-1,), (0,)))
        u = TensorVW(((0,), (1,), (-1,)))
        w = WSpace.spanned_by(ModelParams(3, 1), [t, 3 * t, u, t + u])
        assert w.basis == (t, u)

    def test_coordinates_in_user_basis(self):
        t = TensorVW(((1,), (-1,), (0,)))
        u = TensorVW(((0,), (1,), (-1,)))
        w = WSpace(ModelParams(3, 1), (t, u))
        assert w.coordinates(2 * t + 5 * u) == (2, 5)
        assert w.coordinates(TensorVW(((1,), (0,), (-1,)))) == (1, 1)


class TestNastySlice:
    def test_slice_of_planted_tensor(self):
        params = ModelParams(3, 2)
        w = WSpace(params, (rank_one(nasty_vector(1, params), (1, 0)),))
        assert nasty_slice(1, w) == Subspace.span([(1, 0)], 2)
        assert nasty_slice(2, w).is_zero

    @pytest.mark.parametrize("j", [1, 2, 3])
    def test_full_space(self, j):
        params = ModelParams(3, 2)
        assert nasty_slice(j, WSpace.full(params)) == Subspace.full(2)

    def test_zero_space(self):
        assert nasty_slice(1, WSpace.zero(ModelParams(3, 2))).is_zero


class TestPhi:
    def test_image_outside_v(self, d1_space):
        with pytest.raises(PhiRangeError) as info:
            PhiMap(d1_space, ((1, 0, 0),))
        assert info.value.index == 0

    def test_linearity(self, weak_phi, m3l1):
        assert apply_phi(weak_phi, 3 * rank_one(nasty_vector(1, m3l1), (1,))) == (0, 3, -3)

    def test_zero_tensor(self, weak_phi, m3l1):
        assert apply_phi(weak_phi, TensorVW.zero(m3l1)) == (0, 0, 0)

    def test_outside_w(self, weak_phi):
        with pytest.raises(NotInSubspaceError):
            apply_phi(weak_phi, TensorVW(((1,), (-1,), (0,))))

    def test_linear_matrix_matches_apply(self):
        params = ModelParams(3, 2)
        t = TensorVW(((1, 2), (0, -1), (-1, -1)))
        u = TensorVW(((0, 1), (1, 0), (-1, -1)))
        phi = PhiMap(WSpace(params, (t, u)), ((1, -1, 0), (2, 0, -2)))
        for x in (t, u, 2 * t - u):
            flat = x.flatten()
            via_matrix = tuple(sum((flat[r] * phi.linear_matrix[r, i] for r in range(6)), Fraction(0)) for i in range(3))
            assert via_matrix == apply_phi(phi, x)


class TestExtendedMap:
    def test_coefficient(self):
        params = ModelParams(2, 1)
        ext = ExtendedMap(params, ((1, 0), (0, 1)))
        # Φ(D_1⊗a) = (a, -a), D_1 = (1, -1)
        assert ext.coefficient(1, 1) == (1,)
        assert ext.coefficient(1, 2) == (-1,)

    def test_with_entry_shifted(self):
        ext = ExtendedMap.zero(ModelParams(2, 1))
        shifted = ext.with_entry_shifted(2, 1, 5)
        assert shifted.functionals == ((0, 0), (0, 5))
