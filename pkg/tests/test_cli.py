import csv
import json

import pytest

from dcfw.cli import (
    ALIGN_COLUMNS,
    GRID_COLUMNS,
    QAP_COLUMNS,
    SOLVER_KEYS,
    load_config,
    main,
)
from dcfw.qap import format_qaplib, synthetic_instance


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def tiny(tmp_path):
    p = tmp_path / "tiny.dat"
    p.write_text(format_qaplib(synthetic_instance(5, 0)))
    return p


def test_qap_smoke(tiny, tmp_path):
    out = tmp_path / "runs.csv"
    rc = main(["qap", "--input", str(tiny), "--solver", "dcfw", "--variant", "1", "--beta",
               "0.8", "--seed", "7", "--out", str(out)])
    assert rc == 0
    rows = read(out)
    assert len(rows) >= 1 and tuple(rows[0]) == QAP_COLUMNS
    assert float(rows[0]["assignment_error"]) >= 0


def test_qap_both_solvers_labelled(tiny, tmp_path):
    out = tmp_path / "runs.csv"
    assert main(["qap", "--input", str(tiny), "--solver", "both", "--out", str(out)]) == 0
    assert {r["solver"] for r in read(out)} == {"fw", "dcfw"}


def test_qap_missing_file(tmp_path, capsys):
    missing = tmp_path / "nope.dat"
    assert main(["qap", "--input", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_bad_flag_is_usage_error():
    assert main(["qap", "--step-size", "bogus"]) == 2
    assert main([]) == 2


def test_qap_bad_solver(tiny):
    assert main(["qap", "--input", str(tiny), "--solver", "fwk"]) == 2


def test_solver_failure_exit_code(tmp_path):
    p = tmp_path / "nan.dat"
    p.write_text("2\n0 nan\n1 0\n0 1\n1 0\n")
    assert main(["qap", "--input", str(p), "--out", str(tmp_path / "o.csv")]) == 1


def test_bench_summary(tmp_path, capsys):
    out, summ = tmp_path / "b.csv", tmp_path / "s.csv"
    rc = main(["bench", "--synthetic", "4", "5", "--repeats", "2", "--out", str(out),
               "--summary", str(summ), "--no-timing"])
    assert rc == 0
    assert len(read(summ)) == 4
    assert "win" in capsys.readouterr().out
    assert all(float(r["seconds"]) == 0.0 for r in read(out))


def test_bench_byte_reproducible(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["bench", "--synthetic", "5", "--repeats", "2", "--no-timing",
                     "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_bench_pool_matches_serial(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["bench", "--synthetic", "4", "5", "--repeats", "2", "--no-timing"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--jobs", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_grid_gaps(tmp_path):
    out = tmp_path / "g.csv"
    assert main(["grid-gaps", "--resolution", "9", "--out", str(out)]) == 0
    rows = read(out)
    assert len(rows) == 81 and tuple(rows[0]) == GRID_COLUMNS
    assert min(float(r["gap_pgm"]) for r in rows) >= -1e-9
    assert main(["grid-gaps", "--resolution", "2"]) == 2


def test_align_smoke(tmp_path):
    import time

    out = tmp_path / "a.csv"
    t0 = time.perf_counter()
    assert main(["align", "--d", "8", "--n", "64", "--out", str(out)]) == 0
    assert time.perf_counter() - t0 < 10
    rows = read(out)
    assert tuple(rows[0]) == ALIGN_COLUMNS
    lmo = [int(r["lmo_count"]) for r in rows]
    svd = [int(r["svd_count"]) for r in rows]
    assert lmo == sorted(lmo) and svd == sorted(svd)
    # svd_count = subgradient calls (one per row) + LMO calls
    assert [s - m for s, m in zip(svd, lmo)] == list(range(1, len(rows) + 1))


def test_align_fwk_lambda_zero(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["align", "--d", "6", "--n", "40", "--lam", "0", "--solver", "fwk",
                 "--max-lmo", "30", "--out", str(out)]) == 0
    assert len(read(out)) == 30
    assert main(["align", "--solver", "fw"]) == 2


def test_load_config_defaults():
    cfg, params = load_config()
    assert cfg.beta == 0.8 and cfg.rel_tol == 1e-3 and cfg.tolerance_mode == "adaptive"
    assert cfg.max_inner < 10**8
    assert set(SOLVER_KEYS) <= set(params)


def test_load_config_file_and_override(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"beta": 0.7, "max_outer": 5}))
    cfg, _ = load_config(p)
    assert cfg.beta == 0.7 and cfg.max_outer == 5
    cfg, _ = load_config(p, {"beta": 0.5, "max_outer": None})
    assert cfg.beta == 0.5 and cfg.max_outer == 5


def test_load_config_rejects(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"beta": 1.2}))
    with pytest.raises(ValueError, match="beta"):
        load_config(p)
    p.write_text(json.dumps({"bogus": 1, "alpha": 2}))
    with pytest.raises(ValueError, match="alpha, bogus"):
        load_config(p)


def test_eps_selects_fixed_mode():
    cfg, _ = load_config(None, {"eps": 1e-3})
    assert cfg.tolerance_mode == "fixed" and cfg.eps == 1e-3


def test_config_flag_via_cli(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"beta": 2.0}))
    assert main(["align", "--config", str(p)]) == 2
    assert main(["align", "--config", str(p), "--beta", "0.5", "--d", "4", "--n", "16",
                 "--out", str(tmp_path / "o.csv")]) == 0
