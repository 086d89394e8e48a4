import json
import os
import sys
import unittest
from pathlib import Path

sys.path.insert(0, os.path.dirname(os.path.dirname(__file__)))

from cfk import (  # noqa: E402
    EmptyComplex,
    InvariantViolation,
    ParseError,
    b_slice,
    build_A,
    edge_maps,
    genus,
    hf_rank,
    hfk_ranks,
    is_reduced,
    load_model,
    mirror,
    model_from_dict,
    model_to_dict,
    parse_and_validate,
    reduce_model,
    validate,
)
from f2linalg import BitMatrix, is_invertible  # noqa: E402


ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"
FIXTURES = Path(__file__).resolve().parent / "fixtures"


def _corpus(name: str):
    return load_model(CORPUS / f"{name}.json")


def _document(name: str) -> dict:
    return json.loads((CORPUS / f"{name}.json").read_text(encoding="utf-8"))


class ParsingTests(unittest.TestCase):
    def test_corpus_models_validate(self):
        for name in ("unknot", "trefoil_rh", "trefoil_lh", "figure8", "t25"):
            with self.subTest(model=name):
                self.assertEqual(name, _corpus(name).name)

    def test_trefoil_drops_are_derived_from_gradings(self):
        c = _corpus("trefoil_rh")
        drops = {(a.source, a.target): c.drops(a) for a in c.arrows}

        self.assertEqual({("b", "c"): (0, 1), ("b", "a"): (1, 0)}, drops)

    def test_maslov_constraint_violation(self):
        with self.assertRaises(InvariantViolation) as ctx:
            load_model(FIXTURES / "broken_maslov.json")
        self.assertEqual("maslov_constraint", ctx.exception.invariant)

    def test_malformed_documents_raise_parse_error(self):
        cases = [
            "{not json",
            json.dumps({"generators": []}),
            json.dumps({"name": "x", "generators": [{"id": "a", "alexander": True, "maslov": 0}]}),
            json.dumps({"name": "x", "generators": [], "flip": {"kind": "rotation"}}),
        ]
        for text in cases:
            with self.subTest(text=text):
                with self.assertRaises(ParseError):
                    parse_and_validate(text)

    def test_d_squared_must_vanish(self):
        payload = {
            "name": "chain",
            "generators": [
                {"id": "x", "alexander": 2, "maslov": 0},
                {"id": "y", "alexander": 1, "maslov": -1},
                {"id": "z", "alexander": 0, "maslov": -2},
            ],
            "arrows": [
                {"from": "x", "to": "y", "u_power": 0},
                {"from": "y", "to": "z", "u_power": 0},
            ],
        }
        with self.assertRaises(InvariantViolation) as ctx:
            validate(model_from_dict(payload))
        self.assertEqual("d_squared_zero", ctx.exception.invariant)

    def test_flip_must_be_a_symmetric_involution(self):
        cases = {
            "flip_involution": {"a": "c", "b": "b", "c": "b"},
            "flip_symmetry": {"a": "a", "b": "b", "c": "c"},
        }
        for invariant, mapping in cases.items():
            payload = _document("trefoil_rh")
            payload["flip"] = {"kind": "involution", "map": mapping}
            with self.subTest(invariant=invariant):
                with self.assertRaises(InvariantViolation) as ctx:
                    validate(model_from_dict(payload))
                self.assertEqual(invariant, ctx.exception.invariant)

    def test_explicit_flip_shape_is_checked(self):
        payload = _document("unknot")
        payload["flip"] = {"kind": "explicit", "matrix": [[1, 0], [0, 1]]}

        with self.assertRaises(InvariantViolation) as ctx:
            validate(model_from_dict(payload))
        self.assertEqual("flip_shape", ctx.exception.invariant)


class ReductionTests(unittest.TestCase):
    def _cancellable(self):
        return validate(
            model_from_dict(
                {
                    "name": "cancellable",
                    "generators": [
                        {"id": "z", "alexander": 1, "maslov": 1},
                        {"id": "x", "alexander": 0, "maslov": 1},
                        {"id": "y", "alexander": 0, "maslov": 0},
                        {"id": "w", "alexander": -1, "maslov": 0},
                    ],
                    "arrows": [
                        {"from": "x", "to": "y", "u_power": 0},
                        {"from": "z", "to": "y", "u_power": 0},
                        {"from": "x", "to": "w", "u_power": 0},
                    ],
                }
            )
        )

    def test_reduced_models_are_unchanged(self):
        for name in ("trefoil_rh", "figure8"):
            c = _corpus(name)
            with self.subTest(model=name):
                self.assertTrue(is_reduced(c))
                self.assertIs(c, reduce_model(c))

    def test_cancellation_adds_the_zigzag_arrow(self):
        c = self._cancellable()
        reduced = reduce_model(c)

        self.assertEqual(["z", "w"], reduced.ids)
        self.assertEqual([("z", "w", 0)], [(a.source, a.target, a.u_power) for a in reduced.arrows])
        self.assertEqual((0, 2), reduced.drops(reduced.arrows[0]))
        self.assertTrue(is_reduced(reduced))
        self.assertEqual(hf_rank(c), hf_rank(reduced))
        self.assertEqual({-1: 1, 1: 1}, hfk_ranks(c))

    def test_fully_cancelling_model_has_no_genus(self):
        c = validate(
            model_from_dict(
                {
                    "name": "acyclic",
                    "generators": [
                        {"id": "x", "alexander": 0, "maslov": 1},
                        {"id": "y", "alexander": 0, "maslov": 0},
                    ],
                    "arrows": [{"from": "x", "to": "y", "u_power": 0}],
                }
            )
        )
        with self.assertRaises(EmptyComplex):
            genus(c)


class MirrorTests(unittest.TestCase):
    def test_mirror_of_right_handed_trefoil(self):
        mirrored = model_to_dict(mirror(_corpus("trefoil_rh")))
        expected = model_to_dict(_corpus("trefoil_lh"))

        self.assertEqual("mirror(trefoil_rh)", mirrored.pop("name"))
        expected.pop("name")
        self.assertEqual(expected, mirrored)
        validate(mirror(_corpus("trefoil_rh")))

    def test_mirror_is_an_involution(self):
        for name in ("unknot", "figure8", "t25"):
            c = _corpus(name)
            with self.subTest(model=name):
                self.assertEqual(model_to_dict(c), model_to_dict(mirror(mirror(c))))


class InvariantTests(unittest.TestCase):
    def test_genus(self):
        self.assertEqual(0, genus(_corpus("unknot")))
        self.assertEqual(1, genus(_corpus("trefoil_rh")))
        self.assertEqual(2, genus(_corpus("t25")))

    def test_knot_floer_ranks(self):
        self.assertEqual({0: 1}, hfk_ranks(_corpus("unknot")))
        self.assertEqual({-1: 1, 0: 1, 1: 1}, hfk_ranks(_corpus("trefoil_rh")))
        self.assertEqual({-1: 1, 0: 3, 1: 1}, hfk_ranks(_corpus("figure8")))

    def test_hf_rank_is_one_for_knots_in_the_sphere(self):
        for name in ("unknot", "trefoil_rh", "trefoil_lh", "figure8", "t25"):
            with self.subTest(model=name):
                self.assertEqual(1, hf_rank(_corpus(name)))


class SliceTests(unittest.TestCase):
    def test_b_slices_of_trefoil(self):
        c = _corpus("trefoil_rh")
        lower = b_slice(c, "<", 1)
        upper = b_slice(c, ">=", 1)

        self.assertEqual(("b", "c"), lower.ids)
        self.assertEqual([[0, 0], [1, 0]], lower.differential.to_lists())
        self.assertEqual(("a",), upper.ids)
        self.assertTrue(upper.differential.is_zero())
        self.assertEqual(("x",), b_slice(_corpus("unknot"), "=", 0).ids)

    def test_a_complexes_of_trefoil(self):
        c = _corpus("trefoil_rh")
        at_zero = build_A(c, 0)
        at_one = build_A(c, 1)

        self.assertEqual(2, sum(sum(row) for row in at_zero.differential.to_lists()))
        self.assertEqual(1, at_zero.homology_rank())
        self.assertEqual(1, sum(sum(row) for row in at_one.differential.to_lists()))
        self.assertEqual(1, at_one.homology_rank())
        self.assertTrue(at_zero.is_complex())

    def test_lower_slice_includes_its_bound(self):
        c = _corpus("trefoil_rh")

        self.assertEqual(("b", "c"), b_slice(c, "<=", 0).ids)
        self.assertEqual(("a", "b", "c"), b_slice(c, "<=", 1).ids)
        self.assertEqual((), b_slice(c, "<=", -2).ids)

    def test_a_complexes_are_symmetric(self):
        for name in ("unknot", "trefoil_rh", "trefoil_lh", "figure8", "t25"):
            c = _corpus(name)
            for t in range(4):
                with self.subTest(model=name, t=t):
                    self.assertEqual(build_A(c, t).homology_rank(), build_A(c, -t).homology_rank())

    def test_edge_maps_are_isomorphisms_outside_the_genus(self):
        c = _corpus("trefoil_rh")
        for t in (1, 2):
            self.assertTrue(is_invertible(edge_maps(c, t)[0].matrix))
        for t in (-1, -2):
            self.assertTrue(is_invertible(edge_maps(c, t)[1].matrix))

        v, h = edge_maps(_corpus("unknot"), 0)
        self.assertEqual(BitMatrix.identity(1), v.matrix)
        self.assertEqual(BitMatrix.identity(1), h.matrix)


if __name__ == "__main__":
    unittest.main()
