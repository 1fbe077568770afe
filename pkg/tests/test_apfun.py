from __future__ import annotations

import math
import unittest
from fractions import Fraction

import numpy as np
from scipy.integrate import trapezoid

from apdelay.apfun import (
    Arc,
    Frequency,
    GeneratorBasis,
    SampledSignal,
    TrigPolynomial,
    beurling_estimate,
    bohr_coefficient,
    bohr_coefficient_numeric,
    bohr_spectrum,
    carleman_transform,
    circle_split,
    combine,
    derivative,
    evaluate,
    evaluate_many,
    integer_basis,
    integral_from_zero,
    is_periodic,
    numeric_coefficient_bound,
    parse_rational,
    period_frequency,
    qp_order,
    scale,
    translate,
)
from apdelay.errors import (
    AmbiguousBoundary,
    AtPole,
    BasisMismatch,
    DimMismatch,
    IncommensurableTau,
    InsufficientCoverage,
    OnAxis,
    SpanTooShort,
    ValidationError,
)

ONE = GeneratorBasis([("one", 1.0)])
ROOT2 = GeneratorBasis([("one", 1.0), ("sqrt2", math.sqrt(2.0))])
WITH_PI = GeneratorBasis([("one", 1.0), ("pi", math.pi)])
THREE = GeneratorBasis([("one", 1.0), ("sqrt2", math.sqrt(2.0)), ("pi", math.pi)])


def mono(basis: GeneratorBasis, coords, coeff) -> TrigPolynomial:
    return TrigPolynomial.monomial(Frequency(basis, coords), coeff)


def random_poly(rng: np.random.Generator, basis: GeneratorBasis, dim: int, count: int) -> TrigPolynomial:
    terms = []
    for _ in range(count):
        coords = [int(v) for v in rng.integers(-3, 4, size=basis.size)]
        coeff = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        terms.append((Frequency(basis, coords), coeff))
    return TrigPolynomial(basis, dim, terms)


class TestGeneratorsAndFrequencies(unittest.TestCase):
    def test_rejects_bad_generators(self) -> None:
        with self.assertRaises(ValidationError):
            GeneratorBasis([("a", 1.0), ("a", 2.0)])
        with self.assertRaises(ValidationError):
            GeneratorBasis([("a", 1.0), ("b", 1.0)])
        with self.assertRaises(ValidationError):
            GeneratorBasis([("a", 0.0)])
        with self.assertRaises(ValidationError):
            GeneratorBasis([("not a name", 1.0)])

    def test_coordinates_are_lowest_terms(self) -> None:
        fr = Frequency(ONE, ["2/4"])
        self.assertEqual(fr.coords, (Fraction(1, 2),))
        self.assertEqual(fr, Frequency(ONE, [Fraction(1, 2)]))
        self.assertEqual(fr.to_strings(), ["1/2"])

    def test_floats_are_refused_as_coordinates(self) -> None:
        with self.assertRaises(ValidationError):
            parse_rational(0.5)
        with self.assertRaises(ValidationError):
            parse_rational("1/0")
        with self.assertRaises(ValidationError):
            parse_rational(True)

    def test_value_is_combination_of_generators(self) -> None:
        fr = Frequency.of(WITH_PI, one=2, pi="1/2")
        self.assertAlmostEqual(fr.value, 2.0 + math.pi / 2, places=15)


class TestTrigPolynomial(unittest.TestCase):
    def test_eval_examples(self) -> None:
        self.assertTrue(np.array_equal(evaluate(TrigPolynomial.zero(ONE, 2), 3.0), np.zeros(2)))
        const = mono(ONE, [0], [1.0])
        self.assertAlmostEqual(complex(evaluate(const, 17.3)[0]), 1.0)
        cos2 = mono(ONE, [1], [1.0]) + mono(ONE, [-1], [1.0])
        self.assertAlmostEqual(complex(evaluate(cos2, math.pi / 3)[0]), 1.0, places=14)

    def test_combine_examples(self) -> None:
        f = mono(ROOT2, [1, 0], [1.0])
        g = mono(ROOT2, [0, 1], [1.0])
        self.assertTrue(combine(f, f, 1, -1).is_zero())
        both = combine(f, g, 1, 1)
        self.assertEqual(bohr_spectrum(both), {Frequency(ROOT2, [1, 0]), Frequency(ROOT2, [0, 1])})
        three = combine(f, f, 1, 2)
        self.assertEqual(len(three), 1)
        self.assertAlmostEqual(complex(three.coefficient(Frequency(ROOT2, [1, 0]))[0]), 3.0)

    def test_combine_checks_space(self) -> None:
        with self.assertRaises(BasisMismatch):
            combine(mono(ONE, [1], [1.0]), mono(ROOT2, [1, 0], [1.0]), 1, 1)
        with self.assertRaises(DimMismatch):
            combine(mono(ONE, [1], [1.0]), mono(ONE, [1], [1.0, 2.0]), 1, 1)

    def test_pruning_drops_tiny_coefficients(self) -> None:
        f = TrigPolynomial(ONE, 1, [(Frequency(ONE, [1]), [1.0]), (Frequency(ONE, [2]), [1e-15])])
        self.assertEqual(f.frequencies, [Frequency(ONE, [1])])

    def test_combine_is_bilinear(self) -> None:
        rng = np.random.default_rng(11)
        for _ in range(25):
            f = random_poly(rng, ROOT2, 2, 3)
            g = random_poly(rng, ROOT2, 2, 3)
            a = complex(rng.normal(), rng.normal())
            b = complex(rng.normal(), rng.normal())
            t = float(rng.uniform(-20, 20))
            lhs = evaluate(combine(f, g, a, b), t)
            rhs = a * evaluate(f, t) + b * evaluate(g, t)
            self.assertLess(np.linalg.norm(lhs - rhs), 1e-12 * (1.0 + np.linalg.norm(rhs)))
            for fr in bohr_spectrum(f) | bohr_spectrum(g):
                exact = a * bohr_coefficient(f, fr) + b * bohr_coefficient(g, fr)
                self.assertLess(np.linalg.norm(bohr_coefficient(combine(f, g, a, b), fr) - exact), 1e-12)

    def test_derivative_examples(self) -> None:
        self.assertTrue(derivative(mono(ONE, [0], [4.0])).is_zero())
        d1 = derivative(mono(ONE, [1], [1.0]))
        self.assertEqual(complex(d1.coefficient(Frequency(ONE, [1]))[0]), 1j)
        d3 = derivative(mono(ONE, [3], [2.0]))
        self.assertEqual(complex(d3.coefficient(Frequency(ONE, [3]))[0]), 6j)

    def test_derivative_multiplies_coefficients(self) -> None:
        rng = np.random.default_rng(5)
        f = random_poly(rng, ROOT2, 2, 4)
        df = derivative(f)
        for fr in f.frequencies:
            expected = 1j * fr.value * bohr_coefficient(f, fr)
            self.assertTrue(np.array_equal(bohr_coefficient(df, fr), expected))

    def test_bohr_coefficient_examples(self) -> None:
        f = mono(ROOT2, [1, 0], [2.0 - 1.0j])
        self.assertEqual(complex(bohr_coefficient(f, Frequency(ROOT2, [1, 0]))[0]), 2.0 - 1.0j)
        self.assertEqual(complex(bohr_coefficient(f, Frequency(ROOT2, [0, 1]))[0]), 0.0)
        two = f + mono(ROOT2, [0, 1], [0.5])
        self.assertEqual(complex(bohr_coefficient(two, Frequency(ROOT2, [0, 1]))[0]), 0.5)
        with self.assertRaises(BasisMismatch):
            bohr_coefficient(f, Frequency(ONE, [1]))

    def test_spectrum_examples(self) -> None:
        self.assertEqual(bohr_spectrum(TrigPolynomial.zero(ONE, 1)), frozenset())
        f = mono(ONE, [1], [1.0])
        self.assertEqual(bohr_spectrum(f - f), frozenset())

    def test_translate_and_integral(self) -> None:
        f = mono(ONE, [2], [1.0]) + mono(ONE, [0], [3.0])
        h = 0.7
        ts = np.linspace(-3.0, 3.0, 13)
        self.assertLess(np.max(np.abs(evaluate_many(translate(f, h), ts) - evaluate_many(f, ts + h))), 1e-13)
        ints = integral_from_zero(f, ts)[:, 0]
        exact = (np.exp(2j * ts) - 1.0) / 2j + 3.0 * ts
        self.assertLess(np.max(np.abs(ints - exact)), 1e-13)
        self.assertTrue(scale(f, 0.0).is_zero())


class TestNumericCoefficients(unittest.TestCase):
    def test_zero_signal(self) -> None:
        g = SampledSignal(np.linspace(-10, 10, 201), np.zeros(201))
        self.assertEqual(float(np.abs(bohr_coefficient_numeric(g, 1.3, 5.0))[0]), 0.0)

    def test_single_tone(self) -> None:
        f = mono(ONE, [1], [1.0])
        g = SampledSignal.from_polynomial(f, -100.0, 100.0, 0.01)
        est = bohr_coefficient_numeric(g, 1.0, 100.0)
        self.assertLess(abs(complex(est[0]) - 1.0), 1e-3)

    def test_two_tones_within_bound(self) -> None:
        f = mono(ROOT2, [1, 0], [1.0]) + mono(ROOT2, [0, 1], [0.5])
        g = SampledSignal.from_polynomial(f, -200.0, 200.0, 0.01)
        est = bohr_coefficient_numeric(g, math.sqrt(2.0), 200.0)
        self.assertLess(abs(complex(est[0]) - 0.5), 0.02)

    def test_leakage_shrinks_with_window(self) -> None:
        rng = np.random.default_rng(3)
        for _ in range(3):
            f = random_poly(rng, ROOT2, 1, 3) + mono(ROOT2, [1, 0], [1.0])
            g = SampledSignal.from_polynomial(f, -400.0, 400.0, 0.01)
            exact = complex(bohr_coefficient(f, Frequency(ROOT2, [1, 0]))[0])
            for T in (100.0, 200.0, 400.0):
                err = abs(complex(bohr_coefficient_numeric(g, 1.0, T)[0]) - exact)
                self.assertLessEqual(err, numeric_coefficient_bound(f, 1.0, T) + 1e-6)
            self.assertAlmostEqual(
                numeric_coefficient_bound(f, 1.0, 200.0), 0.5 * numeric_coefficient_bound(f, 1.0, 100.0)
            )

    def test_coverage(self) -> None:
        g = SampledSignal(np.linspace(0, 10, 101), np.ones(101))
        with self.assertRaises(InsufficientCoverage):
            bohr_coefficient_numeric(g, 0.0, 5.0)

    def test_non_uniform_grid_rejected(self) -> None:
        with self.assertRaises(ValidationError):
            SampledSignal([0.0, 0.1, 0.3], [1.0, 1.0, 1.0])


class TestModules(unittest.TestCase):
    def test_empty(self) -> None:
        mod = integer_basis([], basis=ONE)
        self.assertEqual(mod.rank, 0)
        self.assertEqual(mod.integer_basis, ())

    def test_unimodular(self) -> None:
        freqs = [Frequency(ROOT2, c) for c in ([1, 0], [0, 1], [1, 1])]
        mod = integer_basis(freqs)
        self.assertEqual(mod.rank, 2)
        self.assertEqual(set(mod.integer_basis), {Frequency(ROOT2, [1, 0]), Frequency(ROOT2, [0, 1])})

    def test_half_and_third(self) -> None:
        mod = integer_basis([Frequency(ONE, ["1/2"]), Frequency(ONE, ["1/3"])])
        self.assertEqual(mod.rank, 1)
        self.assertEqual(mod.integer_basis[0].coords, (Fraction(1, 6),))

    def test_mixed_bases_rejected(self) -> None:
        with self.assertRaises(BasisMismatch):
            integer_basis([Frequency(ONE, [1]), Frequency(ROOT2, [1, 0])])

    def test_every_input_is_reproduced(self) -> None:
        rng = np.random.default_rng(21)
        for _ in range(30):
            freqs = []
            for _ in range(int(rng.integers(1, 5))):
                coords = [Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 5))) for _ in range(3)]
                freqs.append(Frequency(THREE, coords))
            mod = integer_basis(freqs)
            for fr in freqs:
                coeffs = mod.coefficients(fr)
                rebuilt = [sum(c * b.coords[i] for c, b in zip(coeffs, mod.integer_basis)) for i in range(3)]
                self.assertEqual(tuple(rebuilt), fr.coords)
            matrix = np.array([[float(q) for q in fr.coords] for fr in freqs])
            self.assertEqual(mod.rank, int(np.linalg.matrix_rank(matrix)))

    def test_not_in_module(self) -> None:
        mod = integer_basis([Frequency(ONE, [2])])
        self.assertFalse(mod.contains(Frequency(ONE, [1])))
        self.assertTrue(mod.contains(Frequency(ONE, [-4])))

    def test_qp_order_examples(self) -> None:
        self.assertEqual(qp_order(TrigPolynomial.zero(ONE, 1)), 0)
        self.assertEqual(qp_order(mono(ONE, [1], [1.0]) + mono(ONE, [2], [1.0])), 1)
        f = mono(ROOT2, [1, 0], [1.0]) + mono(ROOT2, [0, 1], [1.0])
        self.assertEqual(qp_order(f), 2)
        self.assertEqual(qp_order(scale(f, 3.0 - 2.0j)), 2)
        self.assertLessEqual(qp_order(f), len(bohr_spectrum(f)))


class TestPeriodicity(unittest.TestCase):
    def test_multiples_of_two_pi(self) -> None:
        f = mono(WITH_PI, [0, 2], [1.0]) + mono(WITH_PI, [0, 4], [1.0])
        self.assertTrue(is_periodic(f, ["1", "0"]))

    def test_unit_frequency_with_two_pi(self) -> None:
        self.assertTrue(is_periodic(mono(WITH_PI, [1, 0], [1.0]), ["0", "2"]))
        self.assertFalse(is_periodic(mono(WITH_PI, ["1/2", "0"], [1.0]), ["0", "2"]))
        self.assertTrue(is_periodic(mono(WITH_PI, ["1/2", "0"], [1.0]), ["0", "4"]))

    def test_rational_multiples_of_pi(self) -> None:
        twopi = GeneratorBasis([("one", 1.0), ("twopi", 2.0 * math.pi)])
        self.assertTrue(is_periodic(mono(twopi, [0, 1], [1.0]), ["1", "0"]))
        self.assertTrue(is_periodic(mono(twopi, [0, 3], [1.0]), ["1/3", "0"]))
        self.assertFalse(is_periodic(mono(twopi, [0, 1], [1.0]), ["2/3", "0"]))
        half = GeneratorBasis([("one", 1.0), ("halfpi", 0.5 * math.pi)])
        self.assertEqual(period_frequency(half, ["4", "0"]), Frequency(half, ["0", "1"]))
        self.assertTrue(is_periodic(mono(half, [0, 2], [1.0]), ["2", "0"]))

    def test_two_generators_never_periodic(self) -> None:
        f = mono(THREE, [1, 0, 0], [1.0]) + mono(THREE, [0, 1, 0], [1.0])
        for tau in (["0", "0", "2"], ["0", "0", "1/3"], ["2", "0", "0"]):
            self.assertFalse(is_periodic(f, tau))

    def test_incommensurable_tau(self) -> None:
        f = mono(ROOT2, [1, 0], [1.0])
        with self.assertRaises(IncommensurableTau):
            is_periodic(f, 6.283185307179586)
        with self.assertRaises(IncommensurableTau):
            is_periodic(f, ["1", "0"])
        with self.assertRaises(IncommensurableTau):
            is_periodic(f, ["1", "1"])


class TestCarleman(unittest.TestCase):
    def test_closed_form_both_half_planes(self) -> None:
        f = mono(ONE, [3], [2.0 + 1.0j])
        for lam in (0.5 + 0.2j, -0.5 + 0.2j):
            got = complex(carleman_transform(f, lam)[0])
            self.assertAlmostEqual(got, (2.0 + 1.0j) / (lam - 3j), places=14)
        self.assertEqual(complex(carleman_transform(TrigPolynomial.zero(ONE, 1), 1.0)[0]), 0.0)

    def test_errors(self) -> None:
        f = mono(ONE, [1], [1.0])
        with self.assertRaises(OnAxis):
            carleman_transform(f, 2j)
        with self.assertRaises(AtPole):
            carleman_transform(f, 1e-13 + 1j)

    def test_matches_truncated_integral(self) -> None:
        lam = 0.5 + 0.3j
        t = np.linspace(0.0, 80.0, 160001)
        numeric = trapezoid(np.exp(-lam * t) * np.exp(1j * t), t)
        got = complex(carleman_transform(mono(ONE, [1], [1.0]), lam)[0])
        self.assertLess(abs(got - numeric), 1e-6)


class TestBeurling(unittest.TestCase):
    def grid(self) -> np.ndarray:
        return 0.05 * np.arange(61)

    def test_zero_signal(self) -> None:
        g = SampledSignal.from_polynomial(TrigPolynomial.zero(ONE, 1), -500.0, 500.0, 0.05)
        est = beurling_estimate(g, self.grid(), 0.1, 1e-3)
        self.assertEqual(est.frequencies, [])
        self.assertEqual(est.detections, [])

    def test_single_tone(self) -> None:
        g = SampledSignal.from_polynomial(mono(ONE, [1], [1.0]), -500.0, 500.0, 0.05)
        est = beurling_estimate(g, self.grid(), 0.1, 1e-3)
        self.assertEqual(len(est.frequencies), 1)
        self.assertAlmostEqual(est.frequencies[0], 1.0, delta=0.05)
        self.assertGreater(est.tail_bound, 0.0)

    def test_two_tones(self) -> None:
        f = mono(ONE, [1], [1.0]) + mono(ONE, ["5/2"], [0.5])
        g = SampledSignal.from_polynomial(f, -500.0, 500.0, 0.05)
        est = beurling_estimate(g, self.grid(), 0.1, 1e-3)
        self.assertEqual(len(est.frequencies), 2)
        self.assertAlmostEqual(est.frequencies[0], 1.0, delta=0.05)
        self.assertAlmostEqual(est.frequencies[1], 2.5, delta=0.05)
        for xi in est.detections:
            self.assertTrue(abs(xi - 1.0) <= 0.2 or abs(xi - 2.5) <= 0.2, xi)

    def test_span_too_short(self) -> None:
        g = SampledSignal.from_polynomial(mono(ONE, [1], [1.0]), -10.0, 10.0, 0.05)
        with self.assertRaises(SpanTooShort):
            beurling_estimate(g, self.grid(), 0.1, 1e-3)


class TestCircleSplit(unittest.TestCase):
    def test_lifted_points_land_together(self) -> None:
        f = mono(WITH_PI, [1, 0], [1.0]) + mono(WITH_PI, [1, 2], [2.0])
        u1, u2 = circle_split(f, [Arc.around(1.0, 0.1)])
        self.assertEqual(u1, f)
        self.assertTrue(u2.is_zero())

    def test_no_arcs_and_full_circle(self) -> None:
        f = mono(ONE, [1], [1.0]) + mono(ONE, [3], [1.0])
        u1, u2 = circle_split(f, [])
        self.assertTrue(u1.is_zero())
        self.assertEqual(u2, f)
        u1, u2 = circle_split(f, [Arc(0.0, 2.0 * math.pi)])
        self.assertEqual(u1, f)
        self.assertTrue(u2.is_zero())

    def test_separates_by_arc(self) -> None:
        f = mono(ONE, [1], [1.0]) + mono(ONE, [3], [1.0])
        u1, u2 = circle_split(f, [Arc.around(3.0, 0.2)])
        self.assertEqual(u1.frequencies, [Frequency(ONE, [3])])
        self.assertEqual(u2.frequencies, [Frequency(ONE, [1])])
        self.assertEqual(u1 + u2, f)

    def test_endpoint_is_ambiguous(self) -> None:
        with self.assertRaises(AmbiguousBoundary):
            circle_split(mono(ONE, [1], [1.0]), [Arc(1.0, 0.5)])

    def test_overlapping_arcs_rejected(self) -> None:
        with self.assertRaises(ValidationError):
            circle_split(mono(ONE, [1], [1.0]), [Arc(0.0, 1.0), Arc(0.5, 1.0)])


if __name__ == "__main__":
    unittest.main()
