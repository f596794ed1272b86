import csv
import json
import math
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

SYMBOLIC = """\
seed: 0
tasks: [growth, mdim, katok]
system:
  kind: full_shift
  window: 3
measures:
  - kind: bernoulli
    weights: [0.5, 0.5]
eps_ladder: [0.5, 0.25, 0.125]
n_ladder: [2, 3, 4]
deltas: [0.5]
budgets:
  monte_carlo: 0
  points: 4
"""

CIRCLE = """\
seed: 3
tasks: [katok, brin_katok]
system:
  kind: circle_doubling
  resolution: 64
measures:
  - kind: product_lebesgue
eps_ladder: [0.375, 0.3]
n_ladder: [2, 3, 4]
deltas: [0.5]
budgets:
  monte_carlo: 2000
  points: 4
"""


class CommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def write_config(self, text, name="config.yaml"):
        path = self.dir / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    def read_rows(self, path):
        with open(path, newline="") as handle:
            return list(csv.DictReader(handle))

    def test_run_writes_estimates(self):
        out = StringIO()
        call_command("run", self.write_config(SYMBOLIC), "--out", str(self.dir / "out"), "--jobs", "2", stdout=out)
        self.assertIn("Done", out.getvalue())
        with open(self.dir / "out" / "estimates.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        self.assertEqual({row["task"] for row in rows}, {"growth", "mdim", "katok"})
        self.assertTrue(all(row["seed"] == "0" for row in rows))
        summary = (self.dir / "out" / "summary.jsonl").read_text().splitlines()
        statuses = {json.loads(line)["status"] for line in summary}
        self.assertEqual(statuses, {"COMPLETED"})

    def test_seed_flag_overrides_config(self):
        call_command("run", self.write_config(SYMBOLIC), "--out", str(self.dir / "out"), "--seed", "7", stdout=StringIO())
        with open(self.dir / "out" / "estimates.csv", newline="") as handle:
            self.assertEqual({row["seed"] for row in csv.DictReader(handle)}, {"7"})

    def test_verify_writes_chains(self):
        config = SYMBOLIC.replace("eps_ladder: [0.5, 0.25, 0.125]", "eps_ladder: [0.5]")
        call_command("verify", self.write_config(config), "--out", str(self.dir / "out"), stdout=StringIO())
        with open(self.dir / "out" / "chains.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        self.assertTrue(rows)
        self.assertNotIn("fail", {row["verdict"] for row in rows})
        self.assertFalse((self.dir / "out" / "estimates.csv").exists())

    def test_bad_config_exits_with_two(self):
        with self.assertRaises(CommandError) as raised:
            call_command("run", self.write_config("seed: 0\nsystem: {kind: torus}\n"), stdout=StringIO())
        self.assertEqual(raised.exception.returncode, 2)
        with self.assertRaises(CommandError) as raised:
            call_command("run", str(self.dir / "missing.yaml"), stdout=StringIO())
        self.assertEqual(raised.exception.returncode, 2)

    def test_example_writes_table(self):
        out = self.dir / "example"
        call_command(
            "example", "--eps-ladder", "0.125", "0.0625", "0.03125", "--seed", "0", "--out", str(out),
            stdout=StringIO(),
        )
        with open(out / "example.csv", newline="") as handle:
            rows = list(csv.DictReader(handle))
        self.assertEqual([float(row["eps"]) for row in rows], [0.125, 0.0625, 0.03125])
        self.assertTrue(all(row["verdict"] == "exact_pass" for row in rows))
        for row in rows:
            self.assertGreaterEqual(float(row["brin_katok"]), float(row["lower"]) - 0.05)
            self.assertLessEqual(float(row["brin_katok"]), float(row["upper"]) + 0.05)

    def test_example_recovers_unit_slope(self):
        out = self.dir / "example"
        call_command(
            "example", "--eps-ladder", "0.125", "0.0625", "0.03125", "0.015625", "--seed", "0", "--out", str(out),
            stdout=StringIO(),
        )
        for row in self.read_rows(out / "example.csv"):
            brin_katok = float(row["brin_katok"])
            self.assertGreaterEqual(brin_katok, math.log(1 / (4 * float(row["eps"]))) - 0.05)
            self.assertLessEqual(brin_katok, math.log(3 / float(row["eps"])) + 0.05)
        records = [json.loads(line) for line in (out / "summary.jsonl").read_text().splitlines()]
        slopes = [record for record in records if "separated_slope" in record]
        self.assertEqual(len(slopes), 1)
        self.assertGreaterEqual(slopes[0]["separated_slope"], 0.8)
        self.assertLessEqual(slopes[0]["separated_slope"], 1.2)
        self.assertGreater(slopes[0]["brin_katok_slope"], 0.5)

    def test_monte_carlo_rows_carry_stderr(self):
        call_command("run", self.write_config(CIRCLE), "--out", str(self.dir / "out"), stdout=StringIO())
        rows = self.read_rows(self.dir / "out" / "estimates.csv")
        self.assertEqual({row["task"] for row in rows}, {"katok", "brin_katok"})
        for row in rows:
            self.assertNotEqual(row["stderr"], "", row)
            self.assertGreater(float(row["stderr"]), 0.0, row)

    def test_symbolic_rows_have_zero_stderr(self):
        call_command("run", self.write_config(SYMBOLIC), "--out", str(self.dir / "out"), stdout=StringIO())
        katok = [row for row in self.read_rows(self.dir / "out" / "estimates.csv") if row["task"] == "katok"]
        self.assertTrue(katok)
        self.assertEqual({float(row["stderr"]) for row in katok}, {0.0})

    def test_parallel_runs_are_byte_identical(self):
        config = self.write_config(CIRCLE)
        for name in ("first", "second"):
            call_command("run", config, "--out", str(self.dir / name), "--jobs", "2", stdout=StringIO())
        for table in ("estimates.csv", "summary.jsonl"):
            self.assertEqual(
                (self.dir / "first" / table).read_bytes(),
                (self.dir / "second" / table).read_bytes(),
                table,
            )

    def test_symbolic_parallel_run_matches_serial_run(self):
        config = self.write_config(SYMBOLIC)
        call_command("run", config, "--out", str(self.dir / "serial"), "--jobs", "1", stdout=StringIO())
        call_command("run", config, "--out", str(self.dir / "parallel"), "--jobs", "2", stdout=StringIO())
        self.assertEqual(
            (self.dir / "serial" / "estimates.csv").read_bytes(),
            (self.dir / "parallel" / "estimates.csv").read_bytes(),
        )
