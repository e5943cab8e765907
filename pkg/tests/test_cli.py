"""End-to-end harness runs: exit codes, file formats, determinism."""

import csv
import json

import pytest

from greedyrange.cli import load_index, main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def workspace(tmp_path, capsys):
    code, _, err = run(
        capsys,
        "gen",
        "--factors", "l2:2,abs1d",
        "--n", "80",
        "--seed", "5",
        "--dataset-out", str(tmp_path / "d.jsonl"),
        "--factors-out", str(tmp_path / "f.json"),
        "--workload-out", str(tmp_path / "w.jsonl"),
        "--queries", "6",
    )
    assert code == 0, err
    return tmp_path


@pytest.mark.parametrize("structure", ["product-tree", "grt"])
def test_build_query_verify_pipeline(workspace, capsys, structure):
    idx = workspace / f"{structure}.idx"
    res = workspace / f"{structure}.res"
    code, out, _ = run(
        capsys,
        "build",
        "--dataset", str(workspace / "d.jsonl"),
        "--factors", str(workspace / "f.json"),
        "--structure", structure,
        "--out", str(idx),
    )
    assert code == 0
    report = json.loads(out)
    assert report["n"] == 80 and report["m"] == 2
    assert report["structure"] == structure

    code, out, _ = run(
        capsys,
        "query",
        "--index", str(idx),
        "--workload", str(workspace / "w.jsonl"),
        "--out", str(res),
    )
    assert code == 0
    report = json.loads(out)
    assert report["queries"] == 6
    assert len(report["total_dist_evals"]) == 2

    code, out, err = run(
        capsys,
        "verify",
        "--dataset", str(workspace / "d.jsonl"),
        "--factors", str(workspace / "f.json"),
        "--workload", str(workspace / "w.jsonl"),
        "--results", str(res),
    )
    assert code == 0, err
    assert "6 ok, 0 failed" in out

    code, out, _ = run(capsys, "stats", "--index", str(idx))
    assert code == 0
    report = json.loads(out)
    assert report["primary_nodes"] == 2 * 80 - 1
    assert sum(report["nodes_per_depth"]) == report["primary_nodes"]
    if structure == "grt":
        assert report["aux_leaf_totals"]["0"] == 80


def test_tampered_results_fail_verification(workspace, capsys):
    idx, res = workspace / "i.idx", workspace / "r.jsonl"
    run(capsys, "build", "--dataset", str(workspace / "d.jsonl"),
        "--factors", str(workspace / "f.json"), "--out", str(idx))
    run(capsys, "query", "--index", str(idx),
        "--workload", str(workspace / "w.jsonl"), "--out", str(res))

    rows = [json.loads(line) for line in res.read_text().splitlines()]
    rows[0]["points"] = sorted(set(rows[0]["points"]) ^ {79})  # flip one id
    res.write_text("".join(json.dumps(r) + "\n" for r in rows))

    code, _, err = run(
        capsys,
        "verify",
        "--dataset", str(workspace / "d.jsonl"),
        "--factors", str(workspace / "f.json"),
        "--workload", str(workspace / "w.jsonl"),
        "--results", str(res),
    )
    assert code == 1
    assert "query 0: FAIL" in err


def test_malformed_inputs_exit_2(workspace, capsys, tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("{oops\n")
    code, _, err = run(
        capsys, "build",
        "--dataset", str(bad),
        "--factors", str(workspace / "f.json"),
        "--out", str(tmp_path / "x.idx"),
    )
    assert code == 2 and "error:" in err

    code, _, err = run(
        capsys, "build",
        "--dataset", str(tmp_path / "missing.jsonl"),
        "--factors", str(workspace / "f.json"),
        "--out", str(tmp_path / "x.idx"),
    )
    assert code == 2

    # a seed point outside the id range
    code, _, err = run(
        capsys, "build",
        "--dataset", str(workspace / "d.jsonl"),
        "--factors", str(workspace / "f.json"),
        "--out", str(tmp_path / "x.idx"),
        "--seed-point", "999",
    )
    assert code == 2

    # workload query without epsilon anywhere
    idx = tmp_path / "ok.idx"
    run(capsys, "build", "--dataset", str(workspace / "d.jsonl"),
        "--factors", str(workspace / "f.json"), "--out", str(idx))
    w = tmp_path / "noeps.jsonl"
    line = json.loads((workspace / "w.jsonl").read_text().splitlines()[0])
    line.pop("epsilon", None)
    w.write_text(json.dumps(line) + "\n")
    code, _, err = run(capsys, "query", "--index", str(idx),
                       "--workload", str(w), "--out", str(tmp_path / "r.jsonl"))
    assert code == 2 and "epsilon" in err
    # ...but an explicit default fills it in
    code, _, _ = run(capsys, "query", "--index", str(idx), "--workload", str(w),
                     "--out", str(tmp_path / "r.jsonl"), "--epsilon-default", "0.5")
    assert code == 0


def test_results_are_deterministic_across_threads(workspace, capsys):
    idx = workspace / "i.idx"
    run(capsys, "build", "--dataset", str(workspace / "d.jsonl"),
        "--factors", str(workspace / "f.json"), "--out", str(idx))
    outs = []
    for name, threads in (("a", "1"), ("b", "4"), ("c", "4")):
        res = workspace / f"{name}.jsonl"
        code, _, _ = run(capsys, "query", "--index", str(idx),
                         "--workload", str(workspace / "w.jsonl"),
                         "--out", str(res), "--threads", threads)
        assert code == 0
        outs.append(res.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_single_factor_structures_serialize_identically(tmp_path, capsys):
    code, _, _ = run(
        capsys, "gen",
        "--factors", "abs1d",
        "--n", "40",
        "--seed", "2",
        "--dataset-out", str(tmp_path / "d.jsonl"),
        "--factors-out", str(tmp_path / "f.json"),
    )
    assert code == 0
    trees = {}
    for structure in ("product-tree", "grt"):
        idx = tmp_path / f"{structure}.idx"
        code, _, _ = run(
            capsys, "build",
            "--dataset", str(tmp_path / "d.jsonl"),
            "--factors", str(tmp_path / "f.json"),
            "--structure", structure,
            "--out", str(idx),
        )
        assert code == 0
        trees[structure] = json.loads(idx.read_text())["tree"]
    # with one factor the cascade *is* the plain tree, byte for byte
    assert trees["product-tree"] == trees["grt"]


def test_index_roundtrip_and_corruption(workspace, capsys, tmp_path):
    idx = workspace / "i.idx"
    run(capsys, "build", "--dataset", str(workspace / "d.jsonl"),
        "--factors", str(workspace / "f.json"), "--structure", "grt", "--out", str(idx))
    structure, ds, struct = load_index(idx)
    assert structure == "grt" and ds.n == 80

    obj = json.loads(idx.read_text())
    obj["version"] = 3
    bad = tmp_path / "v.idx"
    bad.write_text(json.dumps(obj))
    code, _, err = run(capsys, "query", "--index", str(bad),
                       "--workload", str(workspace / "w.jsonl"),
                       "--out", str(tmp_path / "r.jsonl"))
    assert code == 2 and "version" in err

    obj = json.loads(idx.read_text())
    obj["format"] = "pickle"
    bad.write_text(json.dumps(obj))
    code, _, _ = run(capsys, "query", "--index", str(bad),
                     "--workload", str(workspace / "w.jsonl"),
                     "--out", str(tmp_path / "r.jsonl"))
    assert code == 2


def test_bench_csv_shape(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    code, msg, _ = run(
        capsys, "bench",
        "--factors", "abs1d,abs1d",
        "--sweep", "epsilon",
        "--values", "0.1,0.5,1.0",
        "--n", "96",
        "--queries", "4",
        "--out", str(out),
    )
    assert code == 0 and "6 rows" in msg
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
    assert {r["structure"] for r in rows} == {"product-tree", "grt"}
    assert all(r["sweep"] == "epsilon" for r in rows)
    assert [float(r["value"]) for r in rows if r["structure"] == "grt"] == [0.1, 0.5, 1.0]
    assert all(int(r["width"]) >= 0 and int(r["dist_evals"]) > 0 for r in rows)

    code, _, err = run(capsys, "bench", "--factors", "abs1d", "--sweep", "n",
                       "--values", "8,twelve", "--out", str(out))
    assert code == 2

    code, _, err = run(capsys, "bench", "--factors", "spherical", "--sweep", "n",
                       "--values", "8", "--out", str(out))
    assert code == 2


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["build"])  # missing required flags
    assert exc.value.code == 2
    capsys.readouterr()
