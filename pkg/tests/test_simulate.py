from __future__ import annotations

import math
import unittest
from unittest import mock

import numpy as np

from apdelay.apfun import Frequency, GeneratorBasis, TrigPolynomial, scale
from apdelay.chroots import DelaySystem
from apdelay.errors import AdvanceTermPresent, DimMismatch, StepTooLarge, ValidationError
from apdelay.massera import ForcedProblem, harmonic_solve
from apdelay.simulate import History, Trajectory, compare, integrate, trajectory_csv

ONE = GeneratorBasis([("one", 1.0)])
PI = GeneratorBasis([("pi", math.pi)])


def mono(basis, coords, coeff) -> TrigPolynomial:
    return TrigPolynomial.monomial(Frequency(basis, coords), coeff)


def half_delay() -> DelaySystem:
    return DelaySystem([[0.0]], [(-1.0, [[-0.5]])], delta=0.5)


class TestHistory(unittest.TestCase):
    def test_length_follows_longest_delay(self) -> None:
        sys_ = DelaySystem([[0.0]], [(-1.0, [[1.0]]), (-2.5, [[1.0]])])
        h = History.for_system(sys_, mono(ONE, [0], [1.0]))
        self.assertEqual(h.r, 2.5)

    def test_values_outside_interval(self) -> None:
        h = History(mono(ONE, [1], [1.0]), 1.0)
        self.assertTrue(np.allclose(h.values([-1.0, 0.0]), [[np.exp(-1j)], [1.0]]))
        with self.assertRaises(ValidationError):
            h.values([0.5])
        with self.assertRaises(ValidationError):
            h.values([-1.5])


class TestIntegrate(unittest.TestCase):
    def test_reads_history_through_values(self) -> None:
        sys_ = half_delay()
        h = History.for_system(sys_, mono(ONE, [1], [1.0]))
        with mock.patch.object(h, "values", wraps=h.values) as spy:
            integrate(sys_, TrigPolynomial.zero(ONE, 1), h, 1.0, 0.1)
        self.assertEqual(spy.call_count, 3)
        for call in spy.call_args_list:
            self.assertTrue(np.all(np.asarray(call.args[0]) <= 0.0))

    def test_constant_stays_constant(self) -> None:
        sys_ = DelaySystem([[-1.0]], [(-1.0, [[1.0]])])
        h = History.for_system(sys_, mono(ONE, [0], [1.0]))
        traj = integrate(sys_, TrigPolynomial.zero(ONE, 1), h, 5.0, 0.01)
        self.assertEqual(len(traj), 501)
        self.assertLess(np.max(np.abs(traj.values - 1.0)), 1e-12)

    def test_cosine_solution(self) -> None:
        sys_ = DelaySystem([[0.0]], [(-1.0, [[-math.pi / 2]])], delta=0.5)
        cosine = mono(PI, ["1/2"], [0.5]) + mono(PI, ["-1/2"], [0.5])
        h = History.for_system(sys_, cosine)
        traj = integrate(sys_, TrigPolynomial.zero(PI, 1), h, 10.0, 1e-3)
        self.assertAlmostEqual(traj.times[-1], 10.0)
        self.assertLess(abs(traj.values[-1, 0] - math.cos(5 * math.pi)), 1e-6)
        self.assertLess(compare(traj, cosine), 1e-6)

    def test_tracks_harmonic_solution(self) -> None:
        p = ForcedProblem(half_delay(), mono(ONE, [1], [1.0]))
        u = harmonic_solve(p).u
        traj = integrate(p.sys, p.f, History.for_system(p.sys, u), 20.0, 0.001)
        self.assertLess(compare(traj, u), 1e-4)

    def test_fourth_order(self) -> None:
        p = ForcedProblem(half_delay(), mono(ONE, [1], [1.0]))
        u = harmonic_solve(p).u
        h = History.for_system(p.sys, u)
        coarse = compare(integrate(p.sys, p.f, h, 10.0, 0.05), u)
        fine = compare(integrate(p.sys, p.f, h, 10.0, 0.025), u)
        self.assertGreaterEqual(coarse / fine, 8.0)

    def test_linear_in_data(self) -> None:
        sys_ = half_delay()
        f = mono(ONE, [1], [1.0])
        h0 = mono(ONE, [2], [0.3 - 0.1j])
        base = integrate(sys_, f, History.for_system(sys_, h0), 5.0, 0.01)
        alpha = 1.5 + 2j
        scaled = integrate(sys_, scale(f, alpha), History.for_system(sys_, scale(h0, alpha)), 5.0, 0.01)
        self.assertTrue(np.allclose(scaled.values, alpha * base.values, rtol=1e-12, atol=1e-12))

    def test_instantaneous_term_folds_into_a(self) -> None:
        folded = DelaySystem([[-1.0]], [(0.0, [[-1.0]]), (-1.0, [[0.2]])])
        plain = DelaySystem([[-2.0]], [(-1.0, [[0.2]])])
        src = mono(ONE, [0], [1.0])
        a = integrate(folded, TrigPolynomial.zero(ONE, 1), History.for_system(folded, src), 3.0, 0.01)
        b = integrate(plain, TrigPolynomial.zero(ONE, 1), History.for_system(plain, src), 3.0, 0.01)
        self.assertTrue(np.allclose(a.values, b.values, rtol=0, atol=1e-14))

    def test_rejects_advance(self) -> None:
        sys_ = DelaySystem([[0.0]], [(0.5, [[1.0]])])
        with self.assertRaises(AdvanceTermPresent):
            integrate(sys_, TrigPolynomial.zero(ONE, 1), History(mono(ONE, [0], [1.0])), 1.0, 0.01)

    def test_rejects_large_step(self) -> None:
        sys_ = half_delay()
        with self.assertRaises(StepTooLarge):
            integrate(sys_, TrigPolynomial.zero(ONE, 1), History.for_system(sys_, mono(ONE, [0], [1.0])), 1.0, 0.5)

    def test_rejects_bad_inputs(self) -> None:
        sys_ = half_delay()
        h = History.for_system(sys_, mono(ONE, [0], [1.0]))
        with self.assertRaises(DimMismatch):
            integrate(sys_, TrigPolynomial.zero(ONE, 2), h, 1.0, 0.01)
        with self.assertRaises(ValidationError):
            integrate(sys_, TrigPolynomial.zero(ONE, 1), h, 0.0, 0.01)
        with self.assertRaises(ValidationError):
            integrate(sys_, TrigPolynomial.zero(ONE, 1), History(mono(ONE, [0], [1.0]), 0.5), 1.0, 0.01)


class TestTrajectory(unittest.TestCase):
    def test_compare(self) -> None:
        u = mono(ONE, [1], [1.0])
        ts = 0.1 * np.arange(11)
        traj = Trajectory(0.0, 0.1, np.exp(1j * ts) + 0.25)
        self.assertAlmostEqual(compare(traj, u), 0.25)
        with self.assertRaises(DimMismatch):
            compare(traj, mono(ONE, [1], [1.0, 0.0]))

    def test_csv(self) -> None:
        traj = Trajectory(0.0, 0.5, [[1.0 + 2.0j, 0.0], [3.0, -1.0j]])
        rows = trajectory_csv(traj)
        self.assertEqual(rows[0], ["t", "re_1", "im_1", "re_2", "im_2"])
        self.assertEqual(rows[2], [0.5, 3.0, 0.0, 0.0, -1.0])

    def test_rejects_empty(self) -> None:
        with self.assertRaises(ValidationError):
            Trajectory(0.0, 0.1, np.zeros((0, 1)))


if __name__ == "__main__":
    unittest.main()
