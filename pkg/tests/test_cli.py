import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from banachmc.cli import RATES_FIELDS, fit_and_summarize, main, parse_grid


def read_csv(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_rates(path, values, r=1, d=1, p=2.0):
    with open(path, "w") as fh:
        fh.write("# handmade\n" + ",".join(RATES_FIELDS) + "\n")
        for n, v in values:
            fh.write(f"sep,scalar,x,{d},{r},{p},{n},10,{v!r},0.0,1\n")


def test_parse_grid():
    assert parse_grid("8..1024x2") == [8, 16, 32, 64, 128, 256, 512, 1024]
    assert parse_grid("2,3,5") == [2, 3, 5]
    assert parse_grid("7") == [7]
    for bad in ("8..4x2", "1..8x1", "a"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_integrate_constant(tmp_path):
    out = tmp_path / "i.csv"
    assert main(["integrate", "--algo", "std", "--space", "scalar", "--problem", "const",
                 "--n", "100", "--seed", "1", "--out", str(out)]) == 0
    row = read_csv(out)[0]
    assert float(row["value"]) == 1.0 and float(row["error"]) == 0.0


def test_integrate_emits_quadrature(tmp_path):
    out, quad = tmp_path / "i.csv", tmp_path / "q.csv"
    assert main(["integrate", "--algo", "sep", "--problem", "expsum", "--d", "2", "--r", "2",
                 "--n", "30", "--seed", "4", "--out", str(out), "--emit-quadrature", str(quad)]) == 0
    rows = read_csv(quad)
    w = np.array([float(r["weight"]) for r in rows])
    assert abs(w.sum() - 1) < 1e-12
    assert set(rows[0]) == {"t1", "t2", "weight"}


def test_typeconst_basis(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["typeconst", "--space", "lq:1:8", "--p", "1", "--n", "8", "--family", "basis",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 1 and float(rows[0]["ratio"]) == 1.0 and rows[0]["method"] == "exact"


def test_rates_example(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["rates", "--algo", "sep", "--space", "scalar", "--problem", "expsum", "--d", "1",
                 "--r", "1", "--p", "2", "--n", "8..1024x2", "--trials", "200", "--seed", "42",
                 "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 8 and list(rows[0]) == RATES_FIELDS
    summary = capsys.readouterr().out
    assert "theory=-1.5000" in summary
    # A C^inf integrand beats the worst-case exponent; it must be at least as fast.
    assert fit_and_summarize(str(out))["slope"] <= -1.5 + 0.2


class TestSummarize:
    def test_exact_power_law(self, tmp_path):
        path = tmp_path / "p.csv"
        write_rates(path, [(n, n ** -1.5) for n in (8, 16, 32, 64)])
        s = fit_and_summarize(str(path))
        assert s["slope"] == pytest.approx(-1.5, abs=1e-9) and s["theory"] == -1.5

    def test_empty_file(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("")
        with pytest.raises(ValueError):
            fit_and_summarize(str(path))
        assert main(["summarize", str(path)]) == 2

    def test_zero_row_excluded(self, tmp_path, capsys):
        path = tmp_path / "z.csv"
        write_rates(path, [(8, 1.0), (16, 0.0), (32, 0.25), (64, 0.125)])
        s = fit_and_summarize(str(path))
        assert s["points"] == 3 and s["notes"]
        assert main(["summarize", str(path)]) == 0
        assert "excluded" in capsys.readouterr().out

    def test_schema_mismatch(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            fit_and_summarize(str(path))

    def test_jsonl_roundtrip(self, tmp_path):
        path = tmp_path / "r.jsonl"
        assert main(["rates", "--problem", "expsum", "--n", "16..128x2", "--trials", "20",
                     "--format", "jsonl", "--out", str(path), "--no-timestamp"]) == 0
        lines = path.read_text().splitlines()
        assert "#" in json.loads(lines[0]) and len(lines) == 5
        assert set(json.loads(lines[1])) == set(RATES_FIELDS)
        assert fit_and_summarize(str(path))["points"] == 4


def test_config_file(tmp_path):
    cfg, out = tmp_path / "run.cfg", tmp_path / "o.csv"
    cfg.write_text("# demo\nsubcommand=integrate\nproblem=const\nn=5\nseed=3\nno_timestamp=true\n"
                   f"out={out}\n")
    assert main(["--config", str(cfg), "--n", "7"]) == 0
    row = read_csv(out)[0]
    assert row["n"] == "7" and row["seed"] == "3"
    assert "generated" not in out.read_text()


def test_exit_codes(tmp_path):
    assert main(["integrate", "--space", "lq:0.5:3"]) == 2
    assert main(["integrate", "--problem", "nosuch"]) == 2
    assert main(["rates", "--n", "8..2x2"]) == 2
    assert main(["bogus"]) == 2
    assert main(["--config", str(tmp_path / "missing.cfg")]) == 2
    # A grid of 10^15 nodes trips the memory budget.
    assert main(["interp-check", "--d", "3", "--k", "100000", "--out", str(tmp_path / "x")]) == 3


def test_byte_identical_without_timestamp(tmp_path):
    argv = ["rates", "--algo", "sep", "--problem", "expsum", "--d", "2", "--r", "2",
            "--n", "16..256x4", "--trials", "30", "--seed", "9", "--no-timestamp"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--workers", "3", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    main(argv[:-1] + ["--out", str(c)])
    assert "# generated:" in c.read_text()


@pytest.mark.parametrize("argv", [
    ["integrate", "--space", "lq:inf:3", "--problem", "trig:freq=2"],
    ["interp-check", "--r", "2", "--k", "2..16x2"],
    ["typeconst", "--space", "lq:2:4", "--n", "4", "--samples", "500"],
    ["foolset", "--m", "2,3", "--r", "1", "--check-norm", "--grid", "257"],
    ["partition-demo", "--n", "8"],
    ["lemma2", "--n", "4..64x4", "--dim", "64", "--trials", "20"],
])
def test_every_subcommand_runs(tmp_path, argv):
    out = tmp_path / "o.csv"
    assert main(argv + ["--out", str(out), "--no-timestamp"]) == 0
    text = out.read_text()
    assert text.startswith(f"# banachmc {argv[0]}:")
    assert len(read_csv(out)) >= 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "banachmc", "integrate", "--problem", "const",
                          "--no-timestamp"], capture_output=True, text=True, check=True)
    assert res.stdout.startswith("# banachmc integrate:")
