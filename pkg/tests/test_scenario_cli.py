import csv
from pathlib import Path

import pytest

from energybill import cli, energy
from energybill.numerics import ConvergenceError
from energybill.scenario import ScenarioError, dumps, load, loads

SCENARIOS = sorted((Path(__file__).parent.parent / "scenarios").glob("*.ini"))
EXP_T60 = str(Path(__file__).parent.parent / "scenarios" / "exponential_t60.ini")

MINIMAL = """
[energy]
g_e = 1.78e-6
i_e = 6.10e-7
[billing]
g_b = 2.09e-10
i_b = 6.27e-11
p_b = 6.27e-10
[aggregator]
v_max = 1e7
T = 60
[zone a]
family = exponential
r = 81920
"""


def write(tmp_path, text, name="s.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestScenario:
    def test_examples_exist(self):
        assert len(SCENARIOS) >= 4

    @pytest.mark.parametrize("path", SCENARIOS, ids=[p.name for p in SCENARIOS])
    def test_round_trip(self, path):
        s = load(path)
        again = loads(dumps(s))
        assert again == s
        assert dumps(again) == dumps(s)

    def test_minimal_defaults(self):
        s = loads(MINIMAL)
        assert s.energy.c_e == 0.0 and not s.c_e_given
        assert s.b_mean is None and not s.counts_given
        assert s.aggregate_mode == "scaled"
        assert s.zones[0].label == "a"

    def test_zone_order_kept(self):
        s = loads(MINIMAL + "[zone b]\nfamily = uniform\nr = 5\n[zone 0]\nfamily = fixed\nr = 1\n")
        assert [z.label for z in s.zones] == ["a", "b", "0"]

    @pytest.mark.parametrize("bad", [
        MINIMAL + "colour = red\n",                               # unknown key in a zone
        MINIMAL.replace("[aggregator]", "[aggregator]\nv_maxx = 3"),
        MINIMAL + "[extras]\nx = 1\n",                            # unknown section
        MINIMAL.replace("r = 81920", "r = 80 kb"),                # no unit suffixes
        MINIMAL.replace("family = exponential", "family = lognormal"),
        MINIMAL.replace("family = exponential", "family = pareto"),   # missing alpha
        MINIMAL.replace("i_b = 6.27e-11", "i_b = 0"),
        MINIMAL.replace("T = 60\n", ""),
        MINIMAL.replace("[zone a]", "[zone]"),
        "not an ini file",
    ])
    def test_rejected(self, bad):
        with pytest.raises(ScenarioError):
            loads(bad)


class TestCli:
    def test_analyze_exponential_t60(self, capsys):
        assert cli.main(["analyze", "--scenario", EXP_T60]) == 0
        out = capsys.readouterr().out
        assert "E_exp = 0.158" in out

    def test_analyze_csv(self, tmp_path):
        out = tmp_path / "a.csv"
        assert cli.main(["analyze", "--scenario", EXP_T60, "--out", str(out)]) == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["quantity", "zone", "value"]
        assert float(rows[1][2]) == pytest.approx(0.1588, rel=0.01)

    def test_sweep_csv_shape(self, tmp_path):
        out = tmp_path / "sweep.csv"
        argv = ["sweep", "ce", "--from", "0.1", "--to", "2.0", "--steps", "20",
                "--scenario", EXP_T60, "--out", str(out)]
        assert cli.main(argv) == 0
        raw = out.read_bytes()
        assert b"\r" not in raw
        rows = list(csv.reader(raw.decode("ascii").splitlines()))
        assert rows[0] == ["control", "analytic", "simulated", "stderr"]
        assert len(rows) == 22
        assert rows[-1][0] == "r_squared" and float(rows[-1][1]) > 0.99
        for row in rows[1:-1]:
            for cell in row:
                assert "," not in cell
                float(cell)
        assert float(rows[1][0]) == pytest.approx(0.1)

    def test_sweep_cb(self, capsys):
        argv = ["sweep", "cb", "--from", "0", "--to", "4e6", "--steps", "5", "--scenario", EXP_T60]
        assert cli.main(argv) == 0
        assert len(capsys.readouterr().out.strip().split("\n")) == 7

    def test_simulate(self, capsys):
        assert cli.main(["simulate", "--scenario", EXP_T60, "--seed", "4"]) == 0
        assert "B_exp[aggregate]" in capsys.readouterr().out

    def test_plan_given_counts(self, capsys):
        path = str(SCENARIOS[0].parent / "two_zone_pareto_t600.ini")
        assert cli.main(["plan", "--scenario", path, "--given-counts"]) == 0
        assert cli.main(["optimize", "--scenario", path]) == 0

    def test_optimize_infeasible_exit_2(self, tmp_path, capsys):
        text = MINIMAL.replace("p_b = 6.27e-10", "p_b = 6.27e-10\nb_mean = 1.0") \
            + "[constraints]\ne_max_var = 0.01\n"
        assert cli.main(["optimize", "--scenario", write(tmp_path, text)]) == 2
        assert "INFEASIBLE" in capsys.readouterr().out

    def test_energy_budget_infeasible_exit_2(self, tmp_path):
        text = MINIMAL + "[constraints]\ne_max_exp = 0.1\n"
        assert cli.main(["optimize", "--scenario", write(tmp_path, text)]) == 2

    def test_bad_input_exit_1(self, tmp_path):
        assert cli.main(["analyze", "--scenario", write(tmp_path, MINIMAL + "x = 1\n")]) == 1
        assert cli.main(["analyze", "--scenario", str(tmp_path / "missing.ini")]) == 1
        # no threshold anywhere
        assert cli.main(["analyze", "--scenario", write(tmp_path, MINIMAL)]) == 1

    def test_usage_error_exit_1(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["sweep", "ce", "--scenario", EXP_T60])
        assert exc.value.code == 1

    def test_numeric_failure_exit_3(self, tmp_path, monkeypatch):
        def boom(*args):
            raise ConvergenceError("no convergence")
        monkeypatch.setattr(energy, "solve_primary", boom)
        text = MINIMAL + "[constraints]\ne_max_exp = 0.2\n"
        assert cli.main(["optimize", "--scenario", write(tmp_path, text)]) == 3
