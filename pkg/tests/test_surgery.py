import contextlib
import io
import os
import sys
import unittest
from pathlib import Path
from unittest.mock import patch

sys.path.insert(0, os.path.dirname(os.path.dirname(__file__)))

from cfk import b_slice, load_model, mirror  # noqa: E402
from f2linalg import homology_rank  # noqa: E402
from surgery import (  # noqa: E402
    InvalidSurgery,
    NotSimple,
    RankReport,
    SurgeryError,
    SurgerySpec,
    WindowTooSmall,
    build_truncated_cone,
    closed_form_h0,
    cone21_report,
    cone22_report,
    cone_into,
    cone_margin,
    hf_surgery_rank,
    hfk_surgery_ranks,
    simple_cone_ranks,
    simple_y_rank,
    stability_check_enabled,
)


CORPUS = Path(__file__).resolve().parents[1] / "corpus"


def _corpus(name: str):
    return load_model(CORPUS / f"{name}.json")


class SurgerySpecTests(unittest.TestCase):
    def test_rejects_non_positive_and_non_reduced_coefficients(self):
        for p, q in ((0, 1), (1, 0), (-2, 1), (2, 4)):
            with self.subTest(p=p, q=q):
                with self.assertRaises(InvalidSurgery):
                    SurgerySpec(p, q)

    def test_label(self):
        self.assertEqual("3/2", SurgerySpec(3, 2).label)
        self.assertEqual(1, SurgerySpec(7).q)

    def test_rank_report_totals(self):
        self.assertEqual(3, RankReport("cone22", {1: 1, 2: 2}).total)
        self.assertEqual({"1": 1, "2": 2}, RankReport("cone22", {2: 2, 1: 1}).to_dict()["value"])
        with self.assertRaises(SurgeryError):
            RankReport("guesswork", 1)


class ConfigTests(unittest.TestCase):
    def test_cone_margin_is_clamped(self):
        with patch.dict(os.environ, {"FLOER_CONE_MARGIN": "99"}):
            self.assertEqual(6, cone_margin())
        with patch.dict(os.environ, {"FLOER_CONE_MARGIN": "zero"}):
            self.assertEqual(2, cone_margin())

    def test_stability_check_can_be_disabled(self):
        with patch.dict(os.environ, {"FLOER_STABILITY_CHECK": "off"}):
            self.assertFalse(stability_check_enabled())
        with patch.dict(os.environ, {"FLOER_STABILITY_CHECK": "1"}):
            self.assertTrue(stability_check_enabled())


class TruncatedConeTests(unittest.TestCase):
    def test_unknot_surgery_rank_is_p(self):
        c = _corpus("unknot")
        for p, q in ((1, 1), (2, 1), (3, 2), (5, 3), (1, 2)):
            with self.subTest(p=p, q=q):
                self.assertEqual(p, hf_surgery_rank(c, SurgerySpec(p, q)))

    def test_right_handed_trefoil_large_surgeries_are_l_spaces(self):
        c = _corpus("trefoil_rh")
        for p, q in ((1, 1), (2, 1), (5, 1), (3, 2)):
            with self.subTest(p=p, q=q):
                self.assertEqual(p, hf_surgery_rank(c, SurgerySpec(p, q)))

    def test_seven_surgery_on_the_trefoil_at_two_margins(self):
        c = _corpus("trefoil_rh")
        for margin in (2, 3):
            with self.subTest(margin=margin):
                self.assertEqual(7, hf_surgery_rank(c, SurgerySpec(7, 1), margin=margin))

    def test_trefoil_below_slope_one(self):
        c = _corpus("trefoil_rh")
        for p, q, expected in ((1, 2, 3), (2, 3, 4)):
            with self.subTest(p=p, q=q):
                self.assertEqual(expected, hf_surgery_rank(c, SurgerySpec(p, q)))

    def test_plus_one_surgery_on_the_left_handed_trefoil(self):
        self.assertEqual(3, hf_surgery_rank(_corpus("trefoil_lh"), SurgerySpec(1, 1)))
        self.assertEqual(3, hf_surgery_rank(mirror(_corpus("trefoil_rh")), SurgerySpec(1, 1)))

    def test_rank_does_not_depend_on_the_margin(self):
        c = _corpus("figure8")
        spec = SurgerySpec(2, 1)
        ranks = {margin: build_truncated_cone(c, spec, margin).homology_rank() for margin in (1, 2, 3)}

        self.assertEqual(1, len(set(ranks.values())))

    def test_margin_below_one_is_rejected(self):
        with self.assertRaises(WindowTooSmall):
            build_truncated_cone(_corpus("unknot"), SurgerySpec(1, 1), 0)

    def test_cone_report_and_log(self):
        buffer = io.StringIO()
        with contextlib.redirect_stderr(buffer):
            report = cone21_report(_corpus("trefoil_rh"), SurgerySpec(2, 1), margin=1)

        self.assertEqual("cone21", report.route)
        self.assertEqual(2, report.total)
        self.assertEqual((-4, 4), report.window)
        self.assertIn("[SURGERY][CONE] model=trefoil_rh slope=2/1", buffer.getvalue())


class KnotSurgeryTests(unittest.TestCase):
    def test_unknot_core_ranks(self):
        c = _corpus("unknot")

        self.assertEqual({1: 1, 2: 1, 3: 1}, hfk_surgery_ranks(c, 3))
        self.assertEqual({1: 1}, hfk_surgery_ranks(c, 1))

    def test_trefoil_core_ranks(self):
        self.assertEqual({0: 1, 1: 1, 2: 1}, hfk_surgery_ranks(_corpus("trefoil_rh"), 1))

    def test_rejects_bad_arguments(self):
        with self.assertRaises(InvalidSurgery):
            hfk_surgery_ranks(_corpus("unknot"), 0)
        with self.assertRaises(SurgeryError):
            hfk_surgery_ranks(_corpus("unknot"), 1, variant="sideways")

    def test_subcomplex_variant_reports_its_window(self):
        ranks = hfk_surgery_ranks(_corpus("unknot"), 2, variant="subcomplex")

        self.assertTrue(ranks)
        self.assertTrue(all(-1 <= s <= 2 for s in ranks))

    def test_core_ranks_report(self):
        report = cone22_report(_corpus("unknot"), 3)

        self.assertEqual("cone22", report.route)
        self.assertEqual(3, report.total)
        self.assertEqual((1, 3), report.window)
        self.assertEqual({"n": 3, "variant": "quotient"}, report.details)

    def test_cone_into_the_whole_complex(self):
        c = _corpus("trefoil_rh")
        whole = b_slice(c, "all")
        lower = b_slice(c, "<=", 0)

        self.assertEqual(1, homology_rank(cone_into([lower], whole, "trefoil_rh")))
        self.assertEqual(1, homology_rank(cone_into([lower, lower], whole, "trefoil_rh")))


class SimpleClosedFormTests(unittest.TestCase):
    def test_simple_cone_ranks(self):
        self.assertEqual({1: 1, 2: 1}, simple_cone_ranks(_corpus("unknot"), 2))
        self.assertEqual(0, closed_form_h0(_corpus("unknot")))
        self.assertEqual(4, closed_form_h0(_corpus("trefoil_rh")))

    def test_unknot_interpolation(self):
        c = _corpus("unknot")
        for p, q in ((3, 1), (5, 3), (1, 4)):
            with self.subTest(p=p, q=q):
                self.assertEqual(p, simple_y_rank(c, SurgerySpec(p, q)))

    def test_closed_form_needs_a_simple_model(self):
        with self.assertRaises(NotSimple):
            simple_y_rank(_corpus("trefoil_rh"), SurgerySpec(2, 1))


if __name__ == "__main__":
    unittest.main()
