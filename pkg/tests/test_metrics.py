from __future__ import annotations

import unittest

from apdelay import metrics as METRICS


class TestMetrics(unittest.TestCase):
    def test_render_contains_families(self) -> None:
        METRICS.observe_command("solve", 0, 0.01)
        METRICS.inc_harmonic_solve("resonance")
        text = METRICS.render_metrics().decode("utf-8")
        self.assertIn('apdelay_harmonic_solves_total{outcome="resonance"}', text)
        self.assertIn('apdelay_command_duration_seconds_count{command="solve"}', text)
        self.assertNotIn("uptime", text)

    def test_command_labels_are_bounded(self) -> None:
        self.assertEqual(METRICS._command_label("  Sigma-I "), "sigma-i")
        self.assertEqual(METRICS._command_label(""), "unknown")
        self.assertEqual(METRICS._command_label("rm -rf"), "unknown")
        before = METRICS.apdelay_commands_total.labels(command="unknown", exit_code="2")._value.get()
        METRICS.observe_command("nope", 2, 0.0)
        after = METRICS.apdelay_commands_total.labels(command="unknown", exit_code="2")._value.get()
        self.assertEqual(after, before + 1)

    def test_unknown_outcome_counts_as_ok(self) -> None:
        before = METRICS.apdelay_harmonic_solves_total.labels(outcome="ok")._value.get()
        METRICS.inc_harmonic_solve("weird")
        after = METRICS.apdelay_harmonic_solves_total.labels(outcome="ok")._value.get()
        self.assertEqual(after, before + 1)


if __name__ == "__main__":
    unittest.main()
