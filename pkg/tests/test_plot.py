import os
import re
import shutil
import tempfile
import unittest
from pathlib import Path

from experiments.metrics import MetricRow, write_metrics_csv
from experiments.plot import emit_plot, emit_plots, plot_frame, render_svg
from hvnet.errors import DatasetError

CIRCLE = re.compile(r'<circle data-model="(\w+)" cx="([-\d.]+)" cy="([-\d.]+)"')


def rows_for(task, points):
    return [MetricRow(task, model, "n", x, 0, 1.0, acc, 0.1) for model, x, acc in points]


class TestRenderSvg(unittest.TestCase):
    def setUp(self):
        self.rows = rows_for(
            "synth-n-sweep",
            [
                ("hvn", 8.0, 0.5), ("hvn", 24.0, 0.875), ("hvn", 96.0, 0.95),
                ("mlp", 8.0, 0.5), ("mlp", 24.0, 0.6), ("mlp", 96.0, 0.7),
                ("fpca", 8.0, 0.45), ("fpca", 24.0, 0.52), ("fpca", 96.0, 0.49),
            ],
        )

    def test_one_polyline_per_model(self):
        svg = render_svg(self.rows, "synth-n-sweep")
        self.assertTrue(svg.startswith("<svg"))
        self.assertEqual(svg.count("<polyline"), 3)
        for model in ("hvn", "mlp", "fpca"):
            self.assertIn(f'data-model="{model}"', svg)
        self.assertIn("test accuracy", svg)
        self.assertIn(">n<", svg)

    def test_coordinates_map_back_to_values(self):
        frame = plot_frame(self.rows)
        expected = {(r.model, r.sweep_value): r.test_acc for r in self.rows}
        found = CIRCLE.findall(render_svg(self.rows))
        self.assertEqual(len(found), len(self.rows))
        for model, cx, cy in found:
            x, y = frame.from_svg(float(cx), float(cy))
            key = (model, round(x))
            self.assertIn(key, expected)
            self.assertAlmostEqual(y, expected[key], delta=1e-3)

    def test_single_row(self):
        svg = render_svg(rows_for("ecg", [("hvn", 140.0, 0.9)]))
        self.assertEqual(svg.count("<polyline"), 0)
        self.assertEqual(svg.count("<circle"), 1)

    def test_empty(self):
        with self.assertRaises(DatasetError):
            render_svg([])


class TestEmitPlot(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp(prefix="hvnet_plot_")
        self.csv = os.path.join(self.test_dir, "metrics.csv")
        rows = rows_for("ecg", [("hvn", 20.0, 0.8), ("mlp", 20.0, 0.7)])
        rows += rows_for("synth-snr-sweep", [("hvn", 0.0, 0.6), ("hvn", 30.0, 0.9)])
        write_metrics_csv(rows, self.csv)

    def tearDown(self):
        if os.path.exists(self.test_dir):
            shutil.rmtree(self.test_dir)

    def test_one_file_per_task(self):
        written = emit_plots(self.csv, self.test_dir)
        self.assertEqual(sorted(os.path.basename(p) for p in written), ["ecg.svg", "synth-snr-sweep.svg"])
        self.assertIn("<polyline", Path(written[1]).read_text(encoding="utf-8"))

    def test_selected_task(self):
        out = os.path.join(self.test_dir, "ecg.svg")
        emit_plot(self.csv, out, "ecg")
        self.assertEqual(Path(out).read_text(encoding="utf-8").count("<circle"), 2)
        with self.assertRaises(DatasetError):
            emit_plot(self.csv, out, "synth-n-sweep")


if __name__ == "__main__":
    unittest.main()
