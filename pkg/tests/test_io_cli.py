import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thinlab.cli import main
from thinlab.constructions import example_profile, full_circle_sequence
from thinlab.geometry import PointSequence
from thinlab.io import (
    FormatError,
    load_sequence,
    parse_weight,
    parse_witness,
    profile_from_csv,
    profile_to_csv,
    save_sequence,
    sequence_from_json,
    sequence_to_json,
)
from thinlab.weights import Constant, LogL, LogPower
from thinlab.witnesses import ConstantFn, FiniteBlaschke, Power, Product


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# --- formats ------------------------------------------------------------------


@settings(max_examples=50)
@given(
    st.lists(
        st.tuples(st.floats(1e-300, 1.0, exclude_min=False), st.floats(0.0, 6.28, exclude_max=True)),
        max_size=30,
    )
)
def test_sequence_json_round_trip(pts):
    seq = PointSequence(np.array([p[0] for p in pts]), np.array([p[1] for p in pts]))
    back = sequence_from_json(json.loads(json.dumps(sequence_to_json(seq))))
    assert np.array_equal(back.deltas, seq.deltas) and np.array_equal(back.angles, seq.angles)


def test_generated_sequence_round_trip(tmp_path):
    seq = full_circle_sequence({2, 5}, 10).sequence
    save_sequence(seq, tmp_path / "s.json")
    back = load_sequence(tmp_path / "s.json")
    assert np.array_equal(back.gen, seq.gen) and np.array_equal(back.angles, seq.angles)


@pytest.mark.parametrize(
    "obj,field",
    [
        ({"format": "x", "points": []}, "format"),
        ({"format": "thinlab-seq/1", "points": [{"angle": 0.0}]}, "delta"),
        ({"format": "thinlab-seq/1", "points": [{"delta": 2.0, "angle": 0.0}]}, "delta"),
        ({"format": "thinlab-seq/1", "points": [{"delta": 0.5, "angle": "a"}]}, "angle"),
        ({"format": "thinlab-seq/1", "points": [{"delta": 0.5, "angle": 0.0, "gen": {"m": 2, "j": 0}}]}, "gen"),
    ],
)
def test_sequence_format_errors_name_field(obj, field):
    with pytest.raises(FormatError, match=field):
        sequence_from_json(obj)


def test_profile_csv_round_trip():
    prof = example_profile(LogPower(1.0, 1.0, 0.0), "log", 1200)
    back = profile_from_csv(profile_to_csv(prof))
    assert np.array_equal(back.levels, prof.levels)
    assert back.exact == prof.exact
    big = prof.levels > 1000
    assert np.array_equal(back.log_counts[big], prof.log_counts[big])


def test_profile_csv_errors():
    with pytest.raises(FormatError, match="header"):
        profile_from_csv("a,b\n")
    with pytest.raises(FormatError, match="N_m"):
        profile_from_csv("m,N_m,dbar_m,l_m\n3,x,,0.1\n")


@pytest.mark.parametrize("theta", [LogPower(1.0, 1.0, 0.0), LogPower(0.3, 1.5, 2.0), Constant(1.0), LogL(-2.0)])
def test_weight_spec_round_trip(theta):
    assert parse_weight(str(theta)) == theta


def test_weight_spec_errors():
    for bad in ("logpow:1,2", "nope:1", "const", "table:x.csv"):
        with pytest.raises(FormatError):
            parse_weight(bad)


def test_table_weight(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("m,theta\n" + "".join(f"{m},{math.log(m + 2)!r}\n" for m in range(1, 50)))
    theta = parse_weight(f"table:@{p}")
    assert theta.at_level(10) == math.log(12)
    assert theta.nondecreasing_in_level_certified() and theta.positive_certified()


def test_witness_specs(tmp_path):
    z = tmp_path / "z.json"
    z.write_text(json.dumps([{"delta": 0.5, "angle": 0.0}, {"delta": 0.25, "angle": 1.0, "mult": 2}]))
    f = parse_witness(f"prod:[const:0.5,0;pow:blaschke:@{z}^3]")
    assert isinstance(f, Product)
    assert isinstance(f.factors[0], ConstantFn) and isinstance(f.factors[1], Power)
    B = f.factors[1].base
    assert isinstance(B, FiniteBlaschke) and B.mult.tolist() == [1, 2]
    with pytest.raises(FormatError):
        parse_witness("pow:const:1^0")
    with pytest.raises(FormatError):
        parse_witness("const:2,0")


# --- command line -------------------------------------------------------------


def test_cli_weights_classify(capsys):
    code, out, _ = run(capsys, "weights", "classify", "--theta", "logpow:1,2,0")
    assert code == 0
    data = json.loads(out)
    assert data["regime"] == "AllThickSide" and data["format_version"] == 1


def test_cli_generate_then_analyze(tmp_path, capsys):
    s = tmp_path / "s.json"
    assert run(capsys, "seq", "generate", "full-circles", "--levels", "3..6", "-o", str(s))[0] == 0
    assert (tmp_path / "s.json.version").exists()
    code, out, _ = run(capsys, "seq", "analyze", str(s))
    data = json.loads(out)
    assert code == 0
    assert [(r["m"], r["N_m"]) for r in data["profile"]] == [(m, 2**m) for m in range(3, 7)]
    assert data["blaschke_sum"] == 4.0


def test_cli_round_trip_profile(tmp_path, capsys):
    s, p = tmp_path / "s.json", tmp_path / "p.csv"
    run(capsys, "seq", "generate", "spaced-circles", "--level", "6,10,0.015625", "--level", "8,40,0.004",
        "-o", str(s), "--profile-csv", str(p))
    code, out, _ = run(capsys, "seq", "analyze", str(s), "--format", "csv")
    assert code == 0 and out == p.read_text()


def test_cli_compare_different(capsys):
    code, out, _ = run(capsys, "weights", "compare", "--theta1", "logpow:1,1,0", "--theta2", "const:1")
    assert code == 0 and json.loads(out)["relation"] == "DifferentClass"


def test_cli_undecided_exit_code(capsys):
    code, out, _ = run(capsys, "weights", "compare", "--theta1", "logpow:1,3,0", "--theta2", "logpow:1,2,0")
    assert code == 2 and json.loads(out)["relation"] == "Undecided"


def test_cli_errors(tmp_path, capsys):
    code, _, err = run(capsys, "weights", "classify", "--theta", "logpow:1")
    assert code == 1 and "weight spec" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"format": "thinlab-seq/1", "points": [{"delta": 0.5}]}))
    code, _, err = run(capsys, "seq", "analyze", str(bad))
    assert code == 1 and "angle" in err
    code, _, err = run(capsys, "seq", "generate", "spaced-circles", "--level", "6,500,0.1")
    assert code == 1 and "exceeds" in err
    assert run(capsys, "nonsense")[0] == 1


def test_cli_classify_and_verify(tmp_path, capsys):
    s = tmp_path / "s.json"
    run(capsys, "seq", "generate", "full-circles", "--levels", "1..8", "-o", str(s))
    code, out, _ = run(capsys, "seq", "classify", str(s), "--theta", "logpow:1,1,0")
    data = json.loads(out)
    assert code == 0 and data["decision"] == "ThinWitnessed" and "replay" in data
    code, out, _ = run(capsys, "witness", "verify", "--seq", str(s), "--witness", "const:1", "--theta", "const:2")
    data = json.loads(out)
    assert code == 0 and data["filter"]["all_ok"]
    code, out, _ = run(capsys, "seq", "classify", "--generator", "full-circles:1..600", "--theta", "const:1")
    assert code == 0 and json.loads(out)["paper_criterion"] == "cor5.3"


def test_cli_demo(capsys):
    code, out, _ = run(capsys, "demo", "thm-equiv", "--m-max", "64", "--materialize", "10")
    data = json.loads(out)
    assert code == 0 and data["index_set"]["L"] and data["sequence"]["points"] > 0


def test_cli_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        run(capsys, "seq", "classify", "--generator", "full-circles:1..300", "--theta", "logl:-2", "-o", str(path))
    assert a.read_bytes() == b.read_bytes()
    for path in (a, b):
        run(capsys, "weights", "classify", "--theta", "logpow:1,1,0", "--format", "plotdata", "-o", str(path))
    assert a.read_bytes() == b.read_bytes()


def test_cli_plotdata_partial_sums_monotone(capsys):
    code, out, _ = run(capsys, "weights", "classify", "--theta", "const:1", "--format", "plotdata")
    assert code == 0
    assert out.startswith("# format_version 1")
    blocks = [b for b in out.split("\n\n") if b.strip()]
    assert len(blocks) == 2
    for block in blocks:
        rows = [ln.split() for ln in block.splitlines() if ln and not ln.startswith("#")]
        xs = [int(r[0]) for r in rows]
        ys = [float(r[1]) for r in rows]
        assert xs == sorted(xs) and len(ys) > 5
        assert all(b >= a for a, b in zip(ys, ys[1:]))


def test_module_entry_point():
    r = subprocess.run(
        [sys.executable, "-m", "thinlab", "weights", "classify", "--theta", "const:1"],
        capture_output=True, text=True, check=False,
    )
    assert r.returncode == 0 and json.loads(r.stdout)["regime"] == "Mixed"
