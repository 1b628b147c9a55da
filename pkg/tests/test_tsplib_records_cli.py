import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drlmoa import cli, records
from drlmoa.core import ArchiveEntry, ParetoArchive, evaluate_tour, gen_instance, nondominated_filter
from drlmoa.errors import ConfigurationError, DomainError, ParseError
from drlmoa.tsplib import TsplibFile, make_kroab, parse_tsplib, write_tsplib

TINY = """NAME : tiny
TYPE : TSP
DIMENSION : 3
EDGE_WEIGHT_TYPE : EUC_2D
NODE_COORD_SECTION
1 0 0
2 1 0
3 0 1
EOF
"""


def test_parse_tiny():
    tf = parse_tsplib(TINY)
    assert tf.dimension == 3 and tf.name == "tiny"
    assert tf.coords.tolist() == [[0, 0], [1, 0], [0, 1]]
    assert parse_tsplib(TINY.replace("EOF\n", "")) == tf


def test_parse_errors():
    short = TINY.replace("3 0 1\n", "")
    with pytest.raises(ParseError, match="line 5") as exc:
        parse_tsplib(short)
    assert exc.value.line == 5
    with pytest.raises(ParseError, match="unsupported EDGE_WEIGHT_TYPE"):
        parse_tsplib(TINY.replace("EUC_2D", "EXPLICIT"))
    with pytest.raises(ParseError, match="NODE_COORD_SECTION"):
        parse_tsplib(TINY.split("NODE_COORD_SECTION")[0])
    with pytest.raises(ParseError, match="DIMENSION"):
        parse_tsplib(TINY.replace("DIMENSION : 3\n", ""))
    with pytest.raises(ParseError, match="line 7"):
        parse_tsplib(TINY.replace("2 1 0", "2 1 zero"))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e6, 1e6, allow_nan=False), st.floats(-1e6, 1e6, allow_nan=False)),
                min_size=1, max_size=30), st.text("abcXYZ019_", max_size=10))
def test_write_parse_identity(coords, name):
    tf = TsplibFile(name, len(coords), "EUC_2D", np.array(coords, dtype=float).reshape(-1, 2))
    assert parse_tsplib(write_tsplib(tf)) == tf


def _tsp(seed, n=100):
    return TsplibFile(f"k{seed}", n, "EUC_2D", np.random.default_rng(seed).integers(0, 4000, (n, 2)).astype(float))


def test_make_kroab():
    a, b = _tsp(1), _tsp(2)
    inst = make_kroab(a, b)
    assert (inst.n, inst.d_input, inst.M) == (100, 4, 2)
    tour = np.random.default_rng(0).permutation(100)
    same = evaluate_tour(make_kroab(a, a), tour)
    assert same[0] == same[1]
    f = evaluate_tour(inst, tour)
    np.testing.assert_array_equal(evaluate_tour(make_kroab(b, a), tour), f[::-1])
    with pytest.raises(ConfigurationError):
        make_kroab(a, _tsp(3, 50))


def test_instance_json_roundtrip(tmp_path):
    inst = gen_instance("3obj", 9, 4)
    records.save_instance(inst, tmp_path / "i.json")
    back = records.load_instance(tmp_path / "i.json")
    assert back.features.tobytes() == inst.features.tobytes()
    assert back.specs == inst.specs and back.name == inst.name
    d = records.instance_to_dict(inst)
    d["n"] = 10
    with pytest.raises(ParseError):
        records.instance_from_dict(d)


def _record(M=2, k=5, seed=0):
    inst = gen_instance({2: "euclidean", 3: "3obj"}[M], 8, seed)
    rng = np.random.default_rng(seed)
    arc = nondominated_filter([(t, evaluate_tour(inst, t)) for t in (rng.permutation(8) for _ in range(k))])
    return records.make_record(inst, arc, "nsga2", wall_clock=1.234, seed=seed)


def test_export_roundtrips():
    rec = _record()
    assert rec.wall_clock == 1.2
    assert records.read_front(records.export_front(rec, "json")) == rec
    csv_bytes = records.export_front(rec, "csv")
    back = records.read_front(csv_bytes, "csv", records.csv_sidecar(rec))
    assert back == rec
    three = _record(M=3, k=12)
    assert records.export_front(three, "csv").decode().splitlines()[0] == "f_1,f_2,f_3"
    with pytest.raises(ParseError):
        records.read_front(csv_bytes, "csv")


def test_empty_front_exports_header_only():
    inst = gen_instance("euclidean", 6, 0)
    rec = records.make_record(inst, ParetoArchive(), "moead")
    assert records.export_front(rec, "csv") == b"f_1,f_2\n"
    assert rec.hv["value"] == 0.0


def test_records_refuse_dominated_fronts():
    inst = gen_instance("euclidean", 6, 0)
    t = np.arange(6)
    f = evaluate_tour(inst, t)
    arc = ParetoArchive([ArchiveEntry(t, f), ArchiveEntry(t, f + 1.0)])
    with pytest.raises(DomainError):
        records.make_record(inst, arc, "x")


# command line -----------------------------------------------------------------

def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def bank(tmp_path_factory):
    out = tmp_path_factory.mktemp("bank")
    assert run("train", "--n", 8, "--subproblems", 3, "--batch", 8, "--iterations", 12, "--hidden", 8,
               "--lr", 5e-3, "--seed", 1, "--out", out) == 0
    return out


def test_cli_gen_is_byte_identical(tmp_path):
    for name in ("a.json", "b.json"):
        assert run("gen", "--family", "euclidean", "--n", 40, "--seed", 7, "--out", tmp_path / name) == 0
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert run("gen", "--n", 5, "--count", 3, "--seed", 1, "--out", tmp_path / "many") == 0
    assert len(list((tmp_path / "many").glob("*.json"))) == 3


def test_cli_train_writes_log(bank):
    lines = (bank / "train_log.jsonl").read_text().splitlines()
    assert len(lines) == 12
    assert {"subproblem", "iteration", "mean_reward", "critic_loss", "actor_loss"} <= set(json.loads(lines[0]))
    assert json.loads((bank / "manifest.json").read_text())["n_subproblems"] == 3


def test_cli_solve_then_hv(bank, tmp_path, capsys):
    run("gen", "--n", 15, "--seed", 3, "--out", tmp_path / "i.json")
    assert run("solve", "--bank", bank, "--instance", tmp_path / "i.json", "--out", tmp_path / "f.json",
               "--ls", "--seed", 0) == 0
    stored = json.loads((tmp_path / "f.json").read_text())["hv"]["value"]
    capsys.readouterr()
    assert run("hv", "--front", tmp_path / "f.json", "--seed", 0) == 0
    assert float(capsys.readouterr().out.strip()) == stored
    assert run("hv", "--front", tmp_path / "f.json", "--ref", "100,100", "--out", tmp_path / "hv.json") == 0
    assert json.loads((tmp_path / "hv.json").read_text())["ref"] == [100.0, 100.0]


def test_cli_tsplib_solve(bank, tmp_path):
    (tmp_path / "a.tsp").write_text(write_tsplib(_tsp(5, 20)))
    (tmp_path / "b.tsp").write_text(write_tsplib(_tsp(6, 20)))
    assert run("solve", "--bank", bank, "--tsplib-a", tmp_path / "a.tsp", "--tsplib-b", tmp_path / "b.tsp",
               "--out", tmp_path / "f.json") == 0
    rec = records.read_front((tmp_path / "f.json").read_bytes())
    assert max(max(r) for r in rec.objectives_raw) > 100  # raw scale restored
    assert max(max(r) for r in rec.objectives) < 100


def test_cli_benchmark_shared_reference_and_determinism(bank, tmp_path):
    cfg = {"instances": [{"family": "euclidean", "n": 10, "seed": 0}, {"family": "euclidean", "n": 12, "seed": 1}],
           "runs": [{"algorithm": "drlmoa", "params": {"bank": str(bank)}},
                    {"algorithm": "nsga2", "params": {"pop_size": 10, "iterations": 5}, "seed": 2},
                    {"algorithm": "moead", "params": {"N": 10, "iterations": 5}, "seed": 3}]}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    for out in ("r1", "r2"):
        assert run("benchmark", "--config", tmp_path / "cfg.json", "--no-timing", "--out", tmp_path / out) == 0
    for name in ("records.json", "summary.csv"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()
    recs = json.loads((tmp_path / "r1" / "records.json").read_text())
    assert len(recs) == 6
    for inst_id in {r["instance_id"] for r in recs}:
        refs = {tuple(r["hv"]["ref"]) for r in recs if r["instance_id"] == inst_id}
        assert len(refs) == 1
    assert run("benchmark", "--config", tmp_path / "cfg.json", "--workers", 2, "--no-timing",
               "--out", tmp_path / "r3") == 0
    assert (tmp_path / "r3" / "records.json").read_bytes() == (tmp_path / "r1" / "records.json").read_bytes()


def test_cli_export(bank, tmp_path):
    run("gen", "--n", 9, "--seed", 2, "--out", tmp_path / "i.json")
    run("solve", "--bank", bank, "--instance", tmp_path / "i.json", "--out", tmp_path / "f.json")
    assert run("export", "--front", tmp_path / "f.json", "--format", "csv", "--out", tmp_path / "f.csv") == 0
    back = records.read_front((tmp_path / "f.csv").read_bytes(), "csv",
                              (tmp_path / "f.csv.meta.json").read_bytes())
    assert back == records.read_front((tmp_path / "f.json").read_bytes())


def test_cli_exit_codes(bank, tmp_path, capsys):
    assert run("solve", "--bank", tmp_path / "nope", "--instance", "x.json", "--out", "o.json") == 2
    assert run("hv", "--front", tmp_path / "missing.json") == 2
    assert run("frobnicate") == 2
    assert run("gen", "--n", "many") == 2
    (tmp_path / "bad.json").write_text("{not json")
    capsys.readouterr()
    assert run("hv", "--front", tmp_path / "bad.json") == 1
    err = capsys.readouterr().err.strip()
    assert len(err.splitlines()) == 1 and err.startswith("drlmoa hv:")
    run("gen", "--family", "mixed", "--n", 6, "--out", tmp_path / "m.json")
    assert run("solve", "--bank", bank, "--instance", tmp_path / "m.json", "--out", tmp_path / "o.json") == 1


@pytest.mark.parametrize("cmd", ["gen", "train", "solve", "hv", "benchmark", "export"])
def test_common_flags_everywhere(cmd):
    args = cli.build_parser().parse_args([cmd, "--seed", "3", "--workers", "2", "--out", "x"]
                                         + (["--bank", "b"] if cmd == "solve" else []))
    assert (args.seed, args.workers, args.out) == (3, 2, "x")


def test_entry_point_subprocess(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "drlmoa.cli", "gen", "--n", "4", "--seed", "0"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["n"] == 4
    bad = subprocess.run([sys.executable, "-m", "drlmoa.cli", "hv"], capture_output=True, text=True)
    assert bad.returncode == 2
