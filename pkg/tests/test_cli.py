import csv
import io
import json
import subprocess
import sys

import pytest

from pingpong.cli import CSV_HEADER, RunConfig, main, resolve_config


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), out=buf)
    return code, buf.getvalue()


class TestExact:
    def test_improved_table(self):
        code, text = run("exact", "--variant", "improved")
        assert code == 0
        assert "variant=improved" in text
        for name in ("I_AE", "I_AB", "I_BE", "qber", "induced_loss", "detection_z", "detection_two_basis"):
            assert name in text

    def test_wojcik_reference_numbers(self):
        code, text = run("exact", "--variant", "wojcik")
        assert code == 0
        table = [l for l in text.splitlines() if l.startswith("  ") and l[2].isdigit()]
        assert sorted(l.split()[-1] for l in table) == ["0.125"] * 4 + ["0.5"]
        assert "  0 0 0  0.5" in text
        assert "0.311278124459133" in text

    def test_symmetrized(self):
        _, text = run("exact", "--variant", "improved", "--symmetrize")
        line = next(l for l in text.splitlines() if l.startswith("I_AB"))
        assert float(line.split()[1]) == pytest.approx(0.188722, abs=1e-6)

    def test_none(self):
        _, text = run("exact", "--variant", "none")
        values = dict(l.split()[:2] for l in text.splitlines() if l.startswith(("qber", "detection")))
        assert float(values["qber"]) == 0.0
        assert float(values["detection_z"]) == 0.0
        assert float(values["detection_two_basis"]) == 0.0

    def test_compare_oracle(self, tmp_path):
        out = tmp_path / "r.json"
        code, text = run("exact", "--variant", "improved", "--compare-oracle", "-o", str(out))
        assert code == 0
        assert "oracle" in text
        payload = json.loads(out.read_text())
        assert payload["oracle"]["qber"] == pytest.approx(0.25)
        assert payload["oracle"]["I_AE"] == pytest.approx(0.311278, abs=1e-6)
        assert payload["qber"] == 0.0

    def test_json_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run("exact", "--variant", "wojcik", "-o", str(a))
        run("exact", "--variant", "wojcik", "-o", str(b))
        assert a.read_bytes() == b.read_bytes()


class TestSimulate:
    def test_byte_identical(self, tmp_path):
        argv = ("simulate", "--variant", "wojcik", "--rounds", "3000", "--seed", "7")
        a, b = run(*argv), run(*argv)
        assert a == b
        path = tmp_path / "a.json"
        run(*argv, "-o", str(path))
        first = path.read_bytes()
        run(*argv, "-o", str(path))
        assert path.read_bytes() == first

    def test_reports_rates(self):
        code, text = run("simulate", "--variant", "improved", "--two-basis", "--rounds", "2000")
        assert code == 0
        assert "control photon-found rate" in text
        assert "detection rate (x basis)" in text
        assert "message error rate (QBER)" in text
        assert "total variation vs exact" in text

    def test_workers_do_not_change_output(self):
        base = ("simulate", "--rounds", "9000", "--seed", "3", "--variant", "wojcik")
        assert run(*base) == run(*base, "--workers", "2")


class TestSweep:
    def test_header_and_rows(self):
        code, text = run("sweep")
        assert code == 0
        rows = list(csv.reader(io.StringIO(text)))
        assert tuple(rows[0]) == CSV_HEADER
        assert len(rows) == 1 + 2 * 101

    def test_values(self):
        _, text = run("sweep")
        rows = list(csv.DictReader(io.StringIO(text)))
        imp = [r for r in rows if r["variant"] == "improved"]
        assert all(float(r["f_star"]) == 1.0 for r in imp)
        woj = {round(float(r["eta"]), 6): r for r in rows if r["variant"] == "wojcik"}
        assert float(woj[0.75]["f_star"]) == pytest.approx(0.5, abs=1e-12)
        at25 = [r for r in rows if round(float(r["eta"]), 6) == 0.25]
        a, b = at25
        assert {k: v for k, v in a.items() if k not in ("variant", "induced_loss", "I_AE_eff", "I_AB_eff")} == \
               {k: v for k, v in b.items() if k not in ("variant", "induced_loss", "I_AE_eff", "I_AB_eff")}

    def test_precision(self):
        _, text = run("sweep", "--eta-steps", "3")
        woj = [l for l in text.splitlines() if ",wojcik," in l][0]
        assert "0.311278124459133" in woj

    def test_output_file(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run("sweep", "--eta-steps", "11", "-o", str(out))[0] == 0
        assert out.read_text().startswith(",".join(CSV_HEADER) + "\n")

    def test_unwritable_path(self, tmp_path):
        code, _ = run("sweep", "-o", str(tmp_path / "missing" / "s.csv"))
        assert code == 1


class TestVerify:
    def test_claims_suite_fails_with_exit_2(self):
        code, text = run("verify", "--suite", "claims")
        assert code == 2
        assert "outbound-state oracle: PASS" in text
        assert "FAIL" in text

    def test_lists_measured_and_expected(self):
        _, text = run("verify", "--suite", "claims")
        assert "measured" in text and "expected" in text


class TestConfig:
    def test_defaults(self):
        cfg = resolve_config(["simulate"])
        assert (cfg.eta, cfg.rounds, cfg.control_probability, cfg.seed) == (1.0, 100_000, 0.5, 0)

    def test_file_then_flags(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"eta": 0.6, "seed": 4, "rounds": 500,
                                    "eta_grid": {"start": 0.1, "stop": 0.9, "steps": 9}}))
        cfg = resolve_config(["--config", str(path), "simulate", "--seed", "9"])
        assert cfg.eta == 0.6 and cfg.rounds == 500 and cfg.seed == 9
        assert (cfg.eta_start, cfg.eta_stop, cfg.eta_steps) == (0.1, 0.9, 9)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"bogus": 1}')
        assert run("--config", str(path), "exact")[0] == 1

    def test_missing_file(self, tmp_path):
        assert run("--config", str(tmp_path / "nope.json"), "exact")[0] == 1

    @pytest.mark.parametrize("argv", [
        ["simulate", "--eta", "1.5"],
        ["simulate", "--rounds", "0"],
        ["exact", "--variant", "none", "--symmetrize"],
        ["exact", "--variant", "bogus"],
        ["frobnicate"],
        [],
    ])
    def test_usage_errors(self, argv):
        assert run(*argv)[0] == 1

    def test_runconfig_validate(self):
        with pytest.raises(Exception):
            RunConfig(suite="nope").validate()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pingpong", "exact", "--variant", "none"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "variant=none" in proc.stdout
