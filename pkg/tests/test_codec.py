from __future__ import annotations

import json
import math
import unittest
from pathlib import Path

import numpy as np

from apdelay.apfun import Frequency, SampledSignal
from apdelay.codec import (
    emit,
    format_float,
    loads,
    parse_problem,
    problem_to_dict,
    read_signal_csv,
    serialize_problem,
    signal_csv,
    write_csv,
)
from apdelay.errors import ParseError, ValidationError
from apdelay.massera import ConditionReport, check_conditions

PROBLEMS = Path(__file__).resolve().parents[1] / "problems"


def problem_text(**overrides) -> str:
    raw = {
        "schema_version": 1,
        "generators": [{"name": "one", "value": 1.0}],
        "system": {
            "dim": 1,
            "A": {"re": [[-1.0]], "im": [[0.0]]},
            "terms": [],
            "delta": 0.5,
        },
        "forcing": {"dim": 1, "terms": [{"coords": ["1"], "re": [1.0], "im": [0.0]}]},
    }
    raw.update(overrides)
    return json.dumps(raw)


class TestParseProblem(unittest.TestCase):
    def test_scalar_decay(self) -> None:
        p, opts = parse_problem((PROBLEMS / "scalar_decay.json").read_text())
        self.assertEqual(p.sys.dim, 1)
        self.assertEqual(complex(p.sys.A[0, 0]), -1.0)
        self.assertEqual(p.f.frequencies, [Frequency(p.basis, [1])])
        self.assertEqual(opts.xi_max, 10.0)

    def test_options_are_read(self) -> None:
        p, opts = parse_problem((PROBLEMS / "two_tone.json").read_text())
        self.assertEqual(p.basis.names, ("one", "sqrt2", "pi"))
        self.assertEqual(opts.k, 1)
        self.assertEqual(opts.tau, ["0", "0", "2"])
        self.assertEqual(opts.xi_max, 5.0)

    def test_defaults_without_options(self) -> None:
        _, opts = parse_problem(problem_text())
        self.assertEqual(opts.xi_max, 10.0)
        self.assertEqual(opts.axis_tol, 1e-6)
        self.assertIsNone(opts.k)

    def test_duplicate_eta(self) -> None:
        system = {
            "dim": 1,
            "A": {"re": [[0.0]]},
            "terms": [
                {"eta": -1.0, "B": {"re": [[1.0]]}},
                {"eta": -1.0, "B": {"re": [[2.0]]}},
            ],
            "delta": 0.5,
        }
        with self.assertRaisesRegex(ValidationError, "duplicate eta"):
            parse_problem(problem_text(system=system))

    def test_duplicate_frequency(self) -> None:
        forcing = {
            "dim": 1,
            "terms": [
                {"coords": ["1"], "re": [1.0]},
                {"coords": ["2/2"], "re": [1.0]},
            ],
        }
        with self.assertRaisesRegex(ValidationError, "duplicate frequency"):
            parse_problem(problem_text(forcing=forcing))

    def test_dim_mismatch(self) -> None:
        forcing = {"dim": 2, "terms": [{"coords": ["1"], "re": [1.0, 0.0]}]}
        with self.assertRaisesRegex(ValidationError, "dim mismatch"):
            parse_problem(problem_text(forcing=forcing))
        system = {"dim": 2, "A": {"re": [[1.0]]}, "terms": [], "delta": 0.5}
        with self.assertRaisesRegex(ValidationError, "dim mismatch"):
            parse_problem(problem_text(system=system))

    def test_float_coordinates_rejected(self) -> None:
        forcing = {"dim": 1, "terms": [{"coords": [1.0], "re": [1.0]}]}
        with self.assertRaises(ValidationError) as ctx:
            parse_problem(problem_text(forcing=forcing))
        self.assertIn("forcing.terms[0].coords[0]", ctx.exception.field)

    def test_bad_json_reports_position(self) -> None:
        with self.assertRaises(ParseError) as ctx:
            parse_problem('{\n  "schema_version": 1,\n  oops\n}')
        self.assertEqual(ctx.exception.line, 3)
        self.assertEqual(ctx.exception.column, 3)

    def test_missing_field(self) -> None:
        raw = json.loads(problem_text())
        del raw["forcing"]
        with self.assertRaises(ParseError) as ctx:
            parse_problem(json.dumps(raw))
        self.assertEqual(ctx.exception.field, "forcing")

    def test_schema_version(self) -> None:
        with self.assertRaises(ParseError):
            parse_problem(problem_text(schema_version=2))

    def test_invalid_options_rejected(self) -> None:
        for options, field in (
            ({"xi_max": -5}, "options.xi_max"),
            ({"dt": "fast"}, "options.dt"),
            ({"T": 0}, "options.T"),
            ({"k": -1}, "options.k"),
            ({"grid": [0.0, "x"]}, "options.grid"),
        ):
            with self.subTest(options=options):
                with self.assertRaises(ValidationError) as ctx:
                    parse_problem(problem_text(options=options))
                self.assertEqual(ctx.exception.field, field)

    def test_null_option_takes_default(self) -> None:
        _, opts = parse_problem(problem_text(options={"xi_max": None, "dt": 0.01}))
        self.assertEqual(opts.xi_max, 10.0)
        self.assertEqual(opts.dt, 0.01)

    def test_lambda1_checked_against_basis(self) -> None:
        with self.assertRaises(ValidationError):
            parse_problem(problem_text(options={"lambda1": [["1", "0"]]}))

    def test_corpus_round_trip(self) -> None:
        for path in sorted(PROBLEMS.glob("*.json")):
            with self.subTest(problem=path.name):
                p, opts = parse_problem(path.read_text())
                text = serialize_problem(p, opts)
                again, again_opts = parse_problem(text)
                self.assertEqual(problem_to_dict(again, again_opts), problem_to_dict(p, opts))
                self.assertEqual(serialize_problem(again, again_opts), text)


class TestEmit(unittest.TestCase):
    def test_layout(self) -> None:
        text = emit({"b": 1, "a": [1.0, 2], "c": {"x": None, "y": True}})
        expected = (
            "{\n"
            '  "a": [1.0000000000000000e+00, 2],\n'
            '  "b": 1,\n'
            '  "c": {\n'
            '    "x": null,\n'
            '    "y": true\n'
            "  }\n"
            "}\n"
        )
        self.assertEqual(text, expected)

    def test_floats(self) -> None:
        self.assertEqual(format_float(0.1), "1.0000000000000001e-01")
        self.assertEqual(format_float(math.inf), '"inf"')
        self.assertEqual(format_float(-math.inf), '"-inf"')
        self.assertEqual(format_float(math.nan), '"nan"')
        self.assertEqual(float(loads(emit([0.1]))[0]), 0.1)

    def test_nested_lists(self) -> None:
        text = emit({"rows": [[1, 2], [3]]})
        self.assertEqual(loads(text), {"rows": [[1, 2], [3]]})
        self.assertIn("[\n    [1, 2],\n    [3]\n  ]", text)

    def test_unknown_type(self) -> None:
        with self.assertRaises(TypeError):
            emit({"x": object()})

    def test_report_round_trip(self) -> None:
        p, opts = parse_problem((PROBLEMS / "scalar_decay.json").read_text())
        report = check_conditions(p, opts.xi_max)
        text = emit(report.to_dict())
        again = ConditionReport.from_dict(loads(text), basis=p.basis)
        self.assertEqual(again.thm20["circle_distance"], math.inf)
        self.assertEqual(emit(again.to_dict()), text)


class TestCsv(unittest.TestCase):
    def test_write_csv(self) -> None:
        text = write_csv([["xi", "amplitude"], [1.0, 0.5], [2, True]])
        self.assertEqual(
            text,
            "xi,amplitude\n1.0000000000000000e+00,5.0000000000000000e-01\n2,true\n",
        )

    def test_empty_table_is_header_only(self) -> None:
        self.assertEqual(write_csv([["xi", "amplitude"]]), "xi,amplitude\n")

    def test_read_signal(self) -> None:
        g = read_signal_csv("t,re_1,im_1\n0,1,0\n0.5,0,1\n1.0,-1,0\n")
        self.assertEqual(g.dim, 1)
        self.assertAlmostEqual(g.dt, 0.5)
        self.assertTrue(np.allclose(g.values[:, 0], [1.0, 1j, -1.0]))

    def test_signal_round_trip(self) -> None:
        g = SampledSignal([0.0, 0.25, 0.5], [[1.0 + 1j, 2.0], [0.5, -1j], [0.0, 3.0]])
        back = read_signal_csv(write_csv(signal_csv(g)))
        self.assertTrue(np.array_equal(back.t, g.t))
        self.assertTrue(np.array_equal(back.values, g.values))

    def test_bad_signal(self) -> None:
        with self.assertRaises(ParseError) as ctx:
            read_signal_csv("t,re_1,im_1\n0,1,0\n0.5,x,1\n")
        self.assertEqual(ctx.exception.line, 3)
        with self.assertRaises(ParseError):
            read_signal_csv("time,re_1,im_1\n0,1,0\n")
        with self.assertRaises(ParseError):
            read_signal_csv("")
        with self.assertRaises(ValidationError):
            read_signal_csv("t,re_1,im_1\n0,1,0\n0.5,1,0\n2.0,1,0\n")


if __name__ == "__main__":
    unittest.main()
