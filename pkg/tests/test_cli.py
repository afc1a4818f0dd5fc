from __future__ import annotations

import json
import math

import pytest

from sbl.cli import UsageError, main, parse_domain, parse_number, parse_window
from sbl.dynamics import RadialHamiltonian, RadialProfile
from sbl.interval_algebra import INF, interval, sheaf
from sbl.invariants import DomainSpec


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def _run(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr()


# ---------------------------------------------------------------- parsing


@pytest.mark.parametrize(
    "text, value",
    [("3.5", 3.5), ("pi", math.pi), ("2pi", 2 * math.pi), ("1.5*pi", 1.5 * math.pi), ("-pi", -math.pi), ("-inf", -math.inf), ("inf", math.inf)],
)
def test_parse_number(text, value):
    assert parse_number(text) == value


@pytest.mark.parametrize("text", ["", "pie", "1..2", "two", "1,2"])
def test_parse_number_rejects(text):
    with pytest.raises(UsageError):
        parse_number(text)


@pytest.mark.parametrize("text", ["0.1", "1,0.5", "0.1,0.1", "a,b", "1,2,3"])
def test_malformed_windows_are_rejected(text):
    with pytest.raises(UsageError):
        parse_window(text)


def test_parse_domain():
    assert parse_domain("ball:pi") == DomainSpec.ball(math.pi)
    assert parse_domain("ellipse:2,0.5,1:pi") == DomainSpec(((2.0, 0.5), (0.5, 1.0)), math.pi)
    for bad in ("ball", "cube:1", "ball:-1", "ellipse:1,2,1:pi"):
        with pytest.raises(UsageError):
            parse_domain(bad)


# ---------------------------------------------------------------- sheaf commands


@pytest.mark.parametrize(
    "F, G, expected",
    [
        (sheaf(interval(1, INF)), sheaf(interval(2, INF)), sheaf(interval(3, INF))),
        (sheaf(interval(-1, 1, "()", 1)), sheaf(interval(-2, 2, "()", 1)), sheaf(interval(-3, 3, "()", 1))),
        (sheaf(interval(-1, 1, "[]")), sheaf(interval(-1, 1, "()", 1)), sheaf(interval(0, 0, "[]"))),
    ],
)
def test_convolve_end_to_end(tmp_path, capsys, F, G, expected):
    f, g = _write(tmp_path, "F.json", F.to_json()), _write(tmp_path, "G.json", G.to_json())
    code, out = _run(capsys, ["convolve", f, g, "--oracle"])
    data = json.loads(out.out)
    assert code == 0
    assert data["result"] == expected.to_json()
    assert data["oracle"]["agrees"] and data["oracle"]["points"] >= 50


def test_convolve_schema_violation_is_exit_2(tmp_path, capsys):
    f = _write(tmp_path, "F.json", [{"left": 0, "right": 1}])
    code, out = _run(capsys, ["convolve", f, f])
    assert code == 2 and "missing keys" in out.err


def test_convolve_unreadable_file_is_exit_2(tmp_path, capsys):
    code, _ = _run(capsys, ["convolve", str(tmp_path / "nope.json"), str(tmp_path / "nope.json")])
    assert code == 2


def test_barcode_writes_csv_and_svg(tmp_path, capsys):
    f = _write(tmp_path, "F.json", sheaf(interval(0, 2), interval(1, INF, shift=1)).to_json())
    code, out = _run(capsys, ["barcode", f, "--csv", str(tmp_path / "b.csv"), "--svg", str(tmp_path / "b.svg")])
    assert code == 0
    assert len(json.loads(out.out)["barcode"]["bars"]) == 2
    assert (tmp_path / "b.csv").read_text().splitlines()[0] == "birth,death,degree,mult"
    assert (tmp_path / "b.svg").read_text().startswith("<svg")


# ---------------------------------------------------------------- invariants


def test_hh_in_below_first_capacity(capsys):
    code, out = _run(capsys, ["hh", "--domain", "ball:pi", "--window", "0.1,1.0", "--mode", "in"])
    assert code == 0
    assert json.loads(out.out)["report"]["dims"] == {}


def test_hh_full_low_window_with_svg(tmp_path, capsys):
    svg = tmp_path / "h.svg"
    code, out = _run(capsys, ["hh", "--domain", "ball:pi", "--window", "-inf,0.05", "--mode", "full", "--svg", str(svg)])
    rep = json.loads(out.out)["report"]
    assert code == 0
    assert rep["dims"] == {"0": 1} and rep["mode"] == "exact"
    assert svg.read_text().startswith("<svg")


def test_hh_malformed_window_is_exit_2(capsys):
    assert _run(capsys, ["hh", "--domain", "ball:pi", "--window", "0.1"])[0] == 2
    assert _run(capsys, ["hh", "--domain", "ball:pi", "--window", "0.1,2", "--mode", "full"])[0] == 2


def test_hh_window_on_the_spectrum_is_exit_2(capsys):
    assert _run(capsys, ["hh", "--domain", "ball:pi", "--window", "0.1,pi", "--mode", "out"])[0] == 2


def test_hh_short_schedule_gives_bounds_and_exit_3(capsys):
    code, out = _run(capsys, ["hh", "--domain", "ball:pi", "--window", "0.1,1.5pi", "--mode", "out", "--schedule", "4,6,9"])
    rep = json.loads(out.out)["report"]
    assert code == 3
    assert rep["mode"] == "bounds" and rep["dims"] is None and "lower" in rep["bounds"]


def test_capacity_row(capsys):
    code, out = _run(capsys, ["capacity", "--domain", "ball:pi", "--k", "1"])
    header, row = out.out.strip().splitlines()
    fields = dict(zip(header.split(","), row.split(",")))
    assert code == 0
    assert abs(float(fields["value"]) - math.pi) < 1e-3
    assert fields["provenance"] == "certified-tolerance"


def test_capacity_k_zero_is_usage_error(capsys):
    assert _run(capsys, ["capacity", "--domain", "ball:pi", "--k", "0"])[0] == 2


def test_spectrum(capsys):
    code, out = _run(capsys, ["spectrum", "--domain", "ball:pi", "--upto", "10"])
    assert code == 0
    assert json.loads(out.out)["values"] == pytest.approx([math.pi, 2 * math.pi, 3 * math.pi])


def test_gf_zero_hamiltonian(tmp_path, capsys):
    h = _write(tmp_path, "H.json", RadialHamiltonian(RadialProfile.zero()).to_json())
    for backend, extra in (("combinatorial", []), ("grid", ["--resolution", "64"])):
        code, out = _run(capsys, ["gf", h, "--window", "-1,1", "--backend", backend, *extra])
        assert code == 0
        assert json.loads(out.out)["dims"] == {"0": 1}


def test_field_flag(capsys):
    code, out = _run(capsys, ["hh", "--domain", "ball:pi", "--window", "0.1,1.5pi", "--field", "q"])
    assert code == 0
    assert json.loads(out.out)["report"]["dims"] == {"1": 1, "2": 1}


def test_bad_field_is_argparse_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", "--domain", "ball:pi", "--upto", "4", "--field", "r"])
    assert exc.value.code == 2


# ---------------------------------------------------------------- selftest


def test_selftest_subset_passes_and_is_seed_stable(tmp_path, capsys):
    outs = []
    for seed in (0, 1):
        path = tmp_path / f"r{seed}.json"
        code, _ = _run(capsys, ["selftest", "--only", "1,3,15", "--seed", str(seed), "--out", str(path)])
        assert code == 0
        outs.append(json.loads(path.read_text()))
    assert outs[0]["verdicts"] == outs[1]["verdicts"] == {"1": True, "3": True, "15": True}


def test_selftest_corrupted_rule_table_is_a_named_failure(capsys):
    code, out = _run(capsys, ["selftest", "--only", "2", "--fixture", "corrupt-rule-table"])
    rep = json.loads(out.out)
    assert code == 4
    assert not rep["passed"]
    assert "(True, False, True, False)" in rep["criteria"][0]["detail"]["failure"]


def test_selftest_rejects_unknown_criterion(capsys):
    assert _run(capsys, ["selftest", "--only", "17"])[0] == 2
