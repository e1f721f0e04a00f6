"""
Tests for configuration loading, report writing and path validation.
"""
import unittest
import tempfile
import json
import sys
import os

# Add the current directory to Python path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np

import utils
from models import AnalysisConfig, SourceConfig, ConfigError


class TestRunConfig(unittest.TestCase):
    """Test INI run configuration and model building."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, text):
        path = os.path.join(self.tmp.name, "run.ini")
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)
        return path

    def test_load_sections(self):
        path = self._write("[analysis]\nwindow_ps = 3000\n\n[source]\nsplit = 0.4, 0.3, 0.3\nseed = 5\n")
        values = utils.load_run_config(path)
        self.assertEqual(values["analysis"]["window_ps"], "3000")
        self.assertEqual(values["source"]["split"], (0.4, 0.3, 0.3))
        cfg = utils.build_model(SourceConfig, values["source"], {"seed": 9, "emit_prob": None})
        self.assertEqual(cfg.seed, 9)
        self.assertEqual(cfg.split, (0.4, 0.3, 0.3))
        self.assertEqual(cfg.emit_prob, 0.1)

    def test_unknown_section(self):
        with self.assertRaises(ConfigError):
            utils.load_run_config(self._write("[plots]\ncolor = red\n"))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            utils.load_run_config(os.path.join(self.tmp.name, "absent.ini"))

    def test_unknown_key(self):
        with self.assertRaises(ConfigError):
            utils.build_model(AnalysisConfig, {"window": "3000"})

    def test_invalid_value(self):
        with self.assertRaises(ConfigError):
            utils.build_model(AnalysisConfig, {"period_ps": "fast"})
        with self.assertRaises(ConfigError):
            utils.build_model(AnalysisConfig, {"window_ps": 20000})

    def test_config_hash_stable(self):
        a = utils.config_hash({"b": 1, "a": np.float64(0.5)})
        b = utils.config_hash({"a": 0.5, "b": 1})
        self.assertEqual(a, b)
        self.assertEqual(len(a), 64)
        self.assertNotEqual(a, utils.config_hash({"a": 0.5, "b": 2}))


class TestReports(unittest.TestCase):
    """Test CSV and JSON writers."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_csv_table(self):
        path = os.path.join(self.tmp.name, "t.csv")
        n = utils.write_csv_table(path, ["g2", "g3"], [(0.5, 0.25), (1.0, 1.0)], cfg_hash="ff", seed=3)
        self.assertEqual(n, 2)
        with open(path, encoding="utf-8") as handle:
            first = handle.readline()
        self.assertTrue(first.startswith("#"))
        self.assertIn("config_hash=ff", first)
        self.assertIn("seed=3", first)
        columns, rows = utils.read_csv_table(path)
        self.assertEqual(columns, ["g2", "g3"])
        self.assertEqual([float(x) for x in rows[0]], [0.5, 0.25])

    def test_csv_array_append(self):
        path = os.path.join(self.tmp.name, "a.csv")
        utils.write_csv_array(path, ["x", "y"], np.array([[1.0, 2.0]]), cfg_hash="00")
        utils.write_csv_array(path, ["x", "y"], np.array([[3.0, 4.0], [5.0, 6.0]]), mode="a")
        columns, rows = utils.read_csv_table(path)
        self.assertEqual(columns, ["x", "y"])
        self.assertEqual(len(rows), 3)
        self.assertEqual(float(rows[2][1]), 6.0)

    def test_json(self):
        path = os.path.join(self.tmp.name, "r.json")
        text = utils.write_json(path, {"g2": np.float64(0.1), "counts": np.array([1, 2]), "cfg": AnalysisConfig()})
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        self.assertEqual(data, json.loads(text))
        self.assertEqual(data["counts"], [1, 2])
        self.assertEqual(data["cfg"]["period_ps"], 12150)
        self.assertIsInstance(utils.write_json(None, {"a": 1}), str)


class TestReportFormats(unittest.TestCase):
    """Test flat CSV rendering of reports."""

    def test_flatten(self):
        rows = dict(utils.flatten_report({"g2": 0.5, "pvalue_argmax": {"g2": 0.1}, "singles": [1, 2, 3],
                                          "sigma": None, "runs": [{"id": 1}]}))
        self.assertEqual(rows["g2"], repr(0.5))
        self.assertEqual(rows["pvalue_argmax.g2"], repr(0.1))
        self.assertEqual(rows["singles"], "1;2;3")
        self.assertEqual(rows["sigma"], "")
        self.assertEqual(rows["runs.0.id"], 1)

    def test_format_report(self):
        text = utils.format_report({"b": 2, "a": 1}, "csv")
        self.assertEqual(text.splitlines(), ["key,value", "a,1", "b,2"])
        self.assertEqual(json.loads(utils.format_report({"a": 1})), {"a": 1})


class TestPaths(unittest.TestCase):
    """Test path validation helpers."""

    def test_input_path(self):
        self.assertFalse(utils.validate_input_path("")[0])
        self.assertFalse(utils.validate_input_path("/nonexistent/stream.gqtt")[0])
        with tempfile.TemporaryDirectory() as tmp:
            self.assertFalse(utils.validate_input_path(tmp)[0])
            path = os.path.join(tmp, "s.gqtt")
            open(path, "wb").close()
            self.assertEqual(utils.validate_input_path(path), (True, ""))

    def test_output_dir_created(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = os.path.join(tmp, "a", "b")
            self.assertTrue(utils.validate_output_path(target, is_dir=True)[0])
            self.assertTrue(os.path.isdir(target))

    def test_filenames(self):
        self.assertEqual(utils.safe_stem("run 1/a"), "run_1_a")
        self.assertEqual(utils.safe_stem("qd-2024.06"), "qd-2024.06")
        self.assertEqual(utils.safe_stem("///"), "stream")
        self.assertEqual(utils.derived_path("out", "s", "_summary.json"), os.path.join("out", "s_summary.json"))
        self.assertEqual(utils.derived_path("out", "my run", ".csv"), os.path.join("out", "my_run.csv"))

    def test_summary_excerpt(self):
        summary = utils.write_json(None, {"g2": 0.00334, "runs": list(range(40))})
        excerpt = utils.summary_excerpt(summary, 30)
        self.assertEqual(len(excerpt), 30)
        self.assertTrue(excerpt.endswith("…"))
        self.assertNotIn("\n", excerpt)
        self.assertEqual(utils.summary_excerpt(None), "")
        self.assertEqual(utils.summary_excerpt("{\n  \"a\": 1\n}"), "{ \"a\": 1 }")


if __name__ == "__main__":
    unittest.main(verbosity=2)
