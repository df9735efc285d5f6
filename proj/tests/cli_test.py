"""End-to-end checks of the duonet binary. Usage: cli_test.py PATH_TO_DUONET"""

import json
import os
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import jsonschema

BINARY = None
SCHEMA = json.loads((Path(__file__).resolve().parent.parent / "docs" / "summary.schema.json").read_text())


def run(args, out_dir, check=None):
    env = dict(os.environ, DUONET_OUT_DIR=str(out_dir))
    proc = subprocess.run([BINARY, *args], capture_output=True, text=True, env=env, timeout=240)
    if check is not None and proc.returncode != check:
        raise AssertionError(f"exit {proc.returncode} (wanted {check}) for {args}\n"
                             f"stdout: {proc.stdout}\nstderr: {proc.stderr}")
    return proc


class CliTest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.out = self.tmp / "out"

    def tearDown(self):
        self._tmp.cleanup()

    def summary(self):
        data = json.loads((self.out / "summary.json").read_text())
        jsonschema.validate(data, SCHEMA)
        return data

    def test_graph_info_complete(self):
        proc = run(["graph-info", "--topology", "complete", "--m", "4"], self.out, check=0)
        info = json.loads(proc.stdout)
        self.assertAlmostEqual(info["chi"], 1.0, places=10)
        self.assertAlmostEqual(info["lambda_max"], 4.0, places=10)
        self.assertEqual(info["edges"], 6)

    def test_graph_info_edge_list(self):
        edges = self.tmp / "ring.txt"
        edges.write_text("# four-ring\n0 1\n1 2\n2 3\n3 0\n")
        proc = run(["graph-info", "--topology", "edge_list", "--edges", str(edges), "--m", "4"],
                   self.out, check=0)
        self.assertAlmostEqual(json.loads(proc.stdout)["lambda_max"], 4.0, places=10)

    def test_disconnected_graph_is_input_error(self):
        edges = self.tmp / "split.txt"
        edges.write_text("0 1\n2 3\n")
        proc = run(["graph-info", "--topology", "edge_list", "--edges", str(edges), "--m", "4"],
                   self.out, check=2)
        self.assertIn("connected", proc.stderr)

    def test_missing_required_flag(self):
        proc = run(["solve", "--algo", "det"], self.out, check=2)
        lines = proc.stderr.strip().splitlines()
        self.assertEqual(len(lines), 1)
        self.assertIn("--eps", lines[0])

    def test_invalid_delta(self):
        proc = run(["solve", "--eps", "0.1", "--delta", "0.3"], self.out, check=2)
        self.assertIn("delta", proc.stderr)

    def test_unknown_subcommand_option(self):
        run(["solve", "--eps", "0.1", "--bogus", "1"], self.out, check=2)

    def test_det_solve(self):
        run(["solve", "--algo", "det", "--n", "1", "--eps", "0.01", "--c-n", "4"], self.out, check=0)
        s = self.summary()
        self.assertEqual(s["algo"], "det")
        self.assertEqual(s["comm_rounds"], s["iterations"])
        self.assertLessEqual(abs(s["final_gap"]), 0.01)
        rows = [json.loads(line) for line in (self.out / "trace.ndjson").read_text().splitlines()]
        self.assertEqual(len(rows), s["iterations"])
        self.assertEqual([r["k"] for r in rows], list(range(1, len(rows) + 1)))
        self.assertIsNone(rows[-1]["radius"])

    def test_stoch_trials_success_fraction(self):
        run(["solve", "--algo", "stoch", "--trials", "50", "--eps", "0.05", "--delta", "0.05",
             "--c-n", "4", "--seed", "1000", "--topology", "path", "--m", "3", "--n", "2",
             "--sigma-x-sq", "1"], self.out, check=0)
        s = self.summary()
        self.assertGreaterEqual(s["success_fraction"], 0.8)
        self.assertEqual(s["trials"], 50)
        report = (self.out / "trials.csv").read_text().splitlines()
        self.assertEqual(len(report), 51)
        self.assertTrue(report[1].startswith("0,1000,"))

    def test_traces_are_byte_identical(self):
        args = ["solve", "--algo", "stoch", "--eps", "0.1", "--c-n", "2"]
        run([*args, "--seed", "77", "--out", "a.ndjson"], self.out, check=0)
        run([*args, "--seed", "77", "--out", "b.ndjson"], self.out, check=0)
        a = (self.out / "a.ndjson").read_bytes()
        self.assertGreater(len(a), 0)
        self.assertEqual(a, (self.out / "b.ndjson").read_bytes())
        run([*args, "--seed", "78", "--out", "c.ndjson"], self.out, check=0)
        self.assertNotEqual(a, (self.out / "c.ndjson").read_bytes())

    def test_config_file_and_override(self):
        cfg = self.tmp / "run.cfg"
        cfg.write_text("algo=det\neps=0.05\nm=4\ntopology=star\niterations=25\n")
        run(["solve", "--config", str(cfg)], self.out, check=0)
        s = self.summary()
        self.assertEqual((s["algo"], s["m"], s["topology"], s["iterations"]), ("det", 4, "star", 25))
        run(["solve", "--config", str(cfg), "--iterations", "30", "--m", "5"], self.out, check=0)
        s = self.summary()
        self.assertEqual((s["m"], s["iterations"]), (5, 30))

    def test_batch_overflow_is_solver_error(self):
        proc = run(["solve", "--eps", "0.01", "--batch-cap", "2"], self.out, check=3)
        self.assertIn("batch", proc.stderr)

    def test_divergence_is_solver_error(self):
        run(["solve", "--algo", "det", "--eps", "0.1", "--L-psi", "1e-4", "--iterations", "3000"],
            self.out, check=3)

    def test_barycenter(self):
        hist = self.tmp / "hist.csv"
        hist.write_text("0.2,0.8\n0.7,0.3\n")
        cost = self.tmp / "cost.csv"
        cost.write_text("0,1\n1,0\n")
        run(["barycenter", "--histograms", str(hist), "--cost", str(cost), "--mu-reg", "0.1",
             "--topology", "path", "--eps", "0.05", "--delta", "0.05", "--seed", "3"],
            self.out, check=0)
        s = self.summary()
        for key in ("objective", "consensus_residual", "oracle_calls", "comm_rounds"):
            self.assertIn(key, s)
        self.assertEqual(s["m"], 2)
        self.assertAlmostEqual(sum(s["barycenter"]), 1.0, places=9)
        # Grid optimum of this instance is 0.293396.
        self.assertLessEqual(abs(s["objective"] - 0.293396), 0.1)
        est = (self.out / "barycenter.csv").read_text().splitlines()
        self.assertEqual(len(est), 2)

    def test_barycenter_rejects_bad_histograms(self):
        hist = self.tmp / "hist.csv"
        hist.write_text("0.2,0.5\n0.7,0.3\n")
        cost = self.tmp / "cost.csv"
        cost.write_text("0,1\n1,0\n")
        run(["barycenter", "--histograms", str(hist), "--cost", str(cost), "--eps", "0.05"],
            self.out, check=2)
        hist.write_text("0.2,0.8\n0.7,0.3\n")
        cost.write_text("0,1,2\n1,0,1\n")
        run(["barycenter", "--histograms", str(hist), "--cost", str(cost), "--eps", "0.05"],
            self.out, check=2)

    def test_check_lemmas(self):
        proc = run(["check-lemmas"], self.out, check=0)
        report = json.loads(proc.stdout)
        self.assertTrue(report["pass"])
        self.assertEqual(report["recurrence_lemma"]["conclusions"], 100)

    def test_out_dir_env(self):
        run(["solve", "--algo", "det", "--eps", "0.1", "--iterations", "5"], self.out, check=0)
        self.assertTrue((self.out / "trace.ndjson").exists())
        self.assertTrue((self.out / "summary.json").exists())

    def test_help(self):
        proc = run(["solve", "--help"], self.out, check=0)
        self.assertIn("--sigma-x-sq", proc.stdout)


if __name__ == "__main__":
    BINARY = os.path.abspath(sys.argv.pop(1))
    unittest.main(verbosity=2)
