import os
import sys
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

sys.path.insert(0, os.path.dirname(os.path.dirname(__file__)))

from f2linalg import (  # noqa: E402
    BitMatrix,
    DimensionMismatch,
    LinalgError,
    assemble_blocks,
    complete_basis,
    homology_basis,
    homology_rank,
    inverse,
    is_invertible,
    kernel_basis,
    normalize_projection,
    projection_form,
    rank,
    solve,
)


def bit_arrays(max_side: int = 7):
    return st.tuples(st.integers(0, max_side), st.integers(0, max_side)).flatmap(
        lambda shape: arrays(np.uint8, shape, elements=st.integers(0, 1))
    )


class BitMatrixTests(unittest.TestCase):
    def test_packing_keeps_widths_that_are_not_byte_multiples(self):
        rows = [[1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1], [0] * 10 + [1]]
        m = BitMatrix.from_array(rows)

        self.assertEqual((2, 11), m.shape)
        self.assertEqual(rows, m.to_lists())
        self.assertEqual(1, m[1, 10])
        self.assertEqual(0, m[1, 9])

    def test_product_and_sum_are_mod_two(self):
        m = BitMatrix.from_array([[1, 1], [0, 1]])

        self.assertEqual(BitMatrix.identity(2), m @ m)
        self.assertTrue((m + m).is_zero())
        self.assertEqual([[1, 0], [0, 1]], m.power(2).to_lists())

    def test_shape_errors_raise_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            BitMatrix.identity(2) @ BitMatrix.identity(3)
        with self.assertRaises(DimensionMismatch):
            BitMatrix.identity(2) + BitMatrix.zeros(2, 3)

    def test_empty_shapes_are_supported(self):
        empty = BitMatrix.zeros(3, 0)

        self.assertEqual(0, rank(empty))
        self.assertEqual((0, 3), empty.T.shape)
        self.assertEqual((3, 3), (empty @ BitMatrix.zeros(0, 3)).shape)


class EliminationTests(unittest.TestCase):
    @settings(max_examples=60, deadline=None)
    @given(bit_arrays())
    def test_rank_is_invariant_under_transposition(self, arr):
        m = BitMatrix.from_array(arr)
        self.assertEqual(rank(m), rank(m.T))

    @settings(max_examples=60, deadline=None)
    @given(bit_arrays())
    def test_kernel_basis_spans_the_null_space(self, arr):
        m = BitMatrix.from_array(arr)
        kernel = kernel_basis(m)

        self.assertEqual(m.cols - rank(m), kernel.cols)
        self.assertEqual(kernel.cols, rank(kernel))
        self.assertTrue((m @ kernel).is_zero())

    @settings(max_examples=60, deadline=None)
    @given(bit_arrays(), st.data())
    def test_solve_recovers_a_preimage(self, arr, data):
        m = BitMatrix.from_array(arr)
        x = np.array(data.draw(st.lists(st.integers(0, 1), min_size=m.cols, max_size=m.cols)), dtype=np.uint8)
        b = m.apply(x)

        found = solve(m, b)

        self.assertIsNotNone(found)
        self.assertTrue(np.array_equal(b, m.apply(found)))

    def test_solve_reports_vectors_outside_the_column_space(self):
        m = BitMatrix.from_array([[1, 1], [1, 1]])
        self.assertIsNone(solve(m, np.array([1, 0])))

    def test_inverse_and_singular_matrices(self):
        m = BitMatrix.from_array([[1, 1, 0], [0, 1, 1], [0, 0, 1]])

        self.assertEqual(BitMatrix.identity(3), m @ inverse(m))
        with self.assertRaises(LinalgError):
            inverse(BitMatrix.from_array([[1, 1], [1, 1]]))
        self.assertFalse(is_invertible(BitMatrix.zeros(2, 3)))

    def test_complete_basis_keeps_given_columns_first(self):
        given_cols = BitMatrix.from_array([[1], [1], [0]])
        frame = complete_basis(given_cols)

        self.assertTrue(is_invertible(frame))
        self.assertEqual([1, 1, 0], frame.column(0).tolist())
        with self.assertRaises(LinalgError):
            complete_basis(BitMatrix.from_array([[1, 1], [0, 0]]))


class NormalFormTests(unittest.TestCase):
    @settings(max_examples=60, deadline=None)
    @given(bit_arrays(6))
    def test_projection_normal_form(self, arr):
        f = BitMatrix.from_array(arr)
        change, r = normalize_projection(f)

        self.assertEqual(rank(f), r)
        self.assertEqual(projection_form(f.rows, f.cols, r), change.apply(f))

    def test_assemble_blocks_adds_coincident_blocks(self):
        one = BitMatrix.identity(2)
        m = assemble_blocks([(0, 0, one), (0, 0, one), (1, 0, one)], col_bands=[2])

        self.assertEqual((4, 2), m.shape)
        self.assertTrue(m.block(0, 2, 0, 2).is_zero())
        self.assertEqual(one, m.block(2, 4, 0, 2))

    def test_assemble_blocks_rejects_conflicting_band_sizes(self):
        with self.assertRaises(DimensionMismatch):
            assemble_blocks([(0, 0, BitMatrix.identity(2)), (0, 1, BitMatrix.zeros(3, 1))])
        with self.assertRaises(DimensionMismatch):
            assemble_blocks([(0, 0, BitMatrix.identity(1)), (2, 0, BitMatrix.identity(1))])


class HomologyTests(unittest.TestCase):
    def test_homology_rank_of_a_short_complex(self):
        # b -> c, a isolated
        d = BitMatrix.from_array([[0, 0, 0], [0, 0, 0], [0, 1, 0]])

        self.assertEqual(1, homology_rank(d))

    def test_homology_basis_coordinates(self):
        d = BitMatrix.from_array([[0, 0, 0], [0, 0, 0], [0, 1, 0]])
        basis = homology_basis(d)

        self.assertEqual(1, basis.dim)
        self.assertEqual([1], basis.coordinates(np.array([1, 0, 1])).tolist())
        self.assertEqual([0], basis.coordinates(np.array([0, 0, 1])).tolist())
        with self.assertRaises(LinalgError):
            basis.coordinates(np.array([0, 1, 0]))


if __name__ == "__main__":
    unittest.main()
