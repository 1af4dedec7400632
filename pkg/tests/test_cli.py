import csv
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from ahsp.cli import CSV_COLUMNS, main
from ahsp.groups import GroupSpec, Subgroup

GOLDEN = Path(__file__).parent / "golden"


def run_cli(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_gen_fixed_subgroup(capsys):
    code, out = run_cli(capsys, "gen", "--moduli", "4,3", "--subgroup", "2,0")
    data = json.loads(out)
    assert code == 0 and data["moduli"] == [4, 3]
    assert Subgroup.from_json(GroupSpec((4, 3)), data["subgroup_generators"]).order == 2


def test_gen_random_is_seeded(capsys):
    _, a = run_cli(capsys, "gen", "--moduli", "2,2", "--subgroup", "random", "--seed", "7")
    _, b = run_cli(capsys, "gen", "--moduli", "2,2", "--subgroup", "random", "--seed", "7")
    assert a == b


def test_gen_rejects_composite_modulus(capsys):
    with pytest.raises(SystemExit) as err:
        main(["gen", "--moduli", "6"])
    assert err.value.code == 2
    assert "6" in capsys.readouterr().err


def test_gen_writes_file(tmp_path, capsys):
    path = tmp_path / "inst.json"
    assert main(["gen", "--moduli", "8,9", "--subgroup", "4,3", "--out", str(path)]) == 0
    assert json.loads(path.read_text())["moduli"] == [8, 9]


def test_run_exact_summary(capsys, tmp_path):
    path = tmp_path / "inst.json"
    main(["gen", "--moduli", "4,3", "--subgroup", "2,0", "--out", str(path)])
    _, out = run_cli(capsys, "run", "--instance", str(path), "--algorithm", "exact", "--trials", "10")
    rows = rows_of(out)
    assert len(rows) == 11
    summary = rows[-1]
    assert summary["algorithm"] == "exact:summary"
    assert float(summary["queries_total"]) == 6 and float(summary["success"]) == 1.0


def test_run_edk_row(capsys):
    _, out = run_cli(capsys, "run", "--moduli", "4,3", "--subgroup", "2,0", "--algorithm", "edk", "--trials", "4")
    summary = rows_of(out)[-1]
    assert float(summary["queries_max_node"]) == 3 and int(summary["quantum_msgs"]) == 0


def test_run_standard_monte_carlo(capsys):
    _, out = run_cli(
        capsys, "run", "--moduli", "4,3", "--subgroup", "2,0", "--algorithm", "standard",
        "--epsilon", "0.1", "--trials", "500",
    )
    rate = float(rows_of(out)[-1]["success"])
    assert rate >= 0.9 - 3 * math.sqrt(0.09 / 500)


@pytest.mark.parametrize("alg", ["edck", "brute", "dk"])
def test_run_other_algorithms(capsys, alg):
    extra = ["--epsilon", "0.25"] if alg == "dk" else []
    code, out = run_cli(capsys, "run", "--moduli", "2,2,3", "--subgroup", "1,1,0", "--algorithm", alg, "--trials", "3", *extra)
    assert code == 0 and len(rows_of(out)) == 4


def test_probabilistic_needs_epsilon(capsys):
    with pytest.raises(SystemExit) as err:
        main(["run", "--moduli", "4,3", "--algorithm", "standard"])
    assert err.value.code == 2


def test_csv_schema_golden(capsys):
    _, out = run_cli(capsys, "run", "--moduli", "4,3", "--subgroup", "2,0", "--algorithm", "edk", "--trials", "3", "--seed", "5")
    assert out.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert out == (GOLDEN / "edk_z4z3.csv").read_text()


def test_csv_byte_identical_across_runs(capsys):
    argv = ["run", "--moduli", "8,9", "--subgroup", "4,3", "--algorithm", "standard", "--epsilon", "0.25", "--trials", "20", "--seed", "3"]
    _, a = run_cli(capsys, *argv)
    _, b = run_cli(capsys, *argv)
    assert a == b


def test_no_truth_drops_success(capsys):
    _, out = run_cli(capsys, "run", "--moduli", "4,3", "--algorithm", "exact", "--no-truth")
    assert "success" not in out.splitlines()[0]


def test_json_output(capsys):
    _, out = run_cli(capsys, "run", "--moduli", "4,3", "--subgroup", "2,0", "--algorithm", "exact", "--format", "json", "--trials", "2")
    data = json.loads(out)
    assert len(data["reports"]) == 2 and data["reports"][0]["oracle_queries"] == 6


def test_verify_group_scope(capsys):
    code, out = run_cli(capsys, "verify", "--scope", "group", "--max-order", "16")
    assert code == 0 and "FAIL" not in out and out.count("PASS") >= 10


def test_verify_sim_scope(capsys):
    code, out = run_cli(capsys, "verify", "--scope", "sim", "--max-order", "12")
    assert code == 0 and "post-Q" in out


def test_verify_empty_scope_is_usage_error():
    with pytest.raises(SystemExit) as err:
        main(["verify", "--scope", ""])
    assert err.value.code == 2


def test_bench(tmp_path, capsys):
    for i, sub in enumerate(["2,0", "0,1"]):
        main(["gen", "--moduli", "4,3", "--subgroup", sub, "--out", str(tmp_path / f"i{i}.json")])
    capsys.readouterr()
    _, out = run_cli(capsys, "bench", "--instances", str(tmp_path / "*.json"), "--trials", "2")
    rows = rows_of(out)
    assert len(rows) == 6 and all(r["algorithm"].endswith(":summary") for r in rows)


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "ahsp", "run", "--moduli", "4,3", "--subgroup", "2,0", "--algorithm", "exact"],
        capture_output=True, text=True, check=True,
    ).stdout
    assert out.splitlines()[0] == ",".join(CSV_COLUMNS)
