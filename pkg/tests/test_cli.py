from __future__ import annotations

import io
import json
import subprocess
import sys

import pytest

from helpers import FIXTURES
from superhedge.cli import run_command
from superhedge.rational import format_exact

FIVE = str(FIXTURES / "five_state.json")


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run_command(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def json_part(stdout: str) -> dict:
    return json.loads(stdout.split("\n---\n")[0])


def test_price_all_methods_exit_zero_with_equality_flag():
    code, out, _ = run("price", FIVE, "--claim", "call", "--method", "all")
    assert code == 0
    doc = json_part(out)
    assert doc["primal_equals_dual"] is True
    assert doc["results"]["primal"]["value"] == doc["results"]["dual_lp"]["value"] == "41/24"
    assert doc["results"]["measures"]["status"] == "infeasible"
    assert "41/24 (1.70833)" in out


def test_price_on_arbitrage_market_exits_two():
    code, out, err = run("price", str(FIXTURES / "five_state_unconstrained.json"), "--claim", "call")
    assert code == 2
    assert "arbitrage detected" in out and "arbitrage detected" in err


def test_single_infeasible_method_exits_two():
    assert run("price", FIVE, "--claim", "call", "--method", "measures")[0] == 2
    assert run("price", FIVE, "--claim", "call", "--method", "dual")[0] == 0


def test_validate_broken_fixture_lists_failures():
    code, out, err = run("validate", str(FIXTURES / "five_state_broken.json"))
    assert code == 1
    assert "bond_discounted" in err
    assert json_part(out)["passed"] is False


def test_validate_good_fixture():
    code, out, _ = run("validate", FIVE)
    assert code == 0 and json_part(out)["passed"] is True


@pytest.mark.parametrize(
    "fixture, code",
    [
        ("five_state_bad_sum.json", 1),
        ("five_state_zero_denominator.json", 3),
        ("five_state_zero_probability.json", 3),
        ("five_state_syntax_error.json", 3),
        ("does_not_exist.json", 3),
    ],
)
def test_error_classes_map_to_exit_codes(fixture, code):
    assert run("price", str(FIXTURES / fixture), "--claim", "call")[0] == code


@pytest.mark.parametrize(
    "argv",
    [["frobnicate", FIVE], ["price", FIVE], ["price", FIVE, "--claim", "call", "--method", "guess"],
     ["price", FIVE, "--claim", "nope"], ["polytope", FIVE, "--project", "q9"], []],
)
def test_usage_errors_exit_three(argv):
    assert run(*argv)[0] == 3


def test_polytope_renders_atom_row():
    code, out, _ = run("--format", "table", "polytope", FIVE)
    assert code == 0
    assert "4*q2 <= 0" in out.splitlines()


def test_polytope_projection_is_empty_for_five_state():
    code, out, _ = run("polytope", FIVE, "--project", "q3", "--deep-redundancy")
    assert code == 0
    assert json_part(out)["rows"][0]["text"] == "0 <= -1"


def test_arbitrage_command_reports_witness():
    code, out, _ = run("arbitrage", FIVE, "--unconstrained")
    assert code == 0
    assert json_part(out)["found"] is True
    assert json_part(run("arbitrage", FIVE)[1])["found"] is False


def test_report_command():
    code, out, _ = run("report", FIVE)
    assert code == 0
    claims = json_part(out)["claims"]
    assert [c["claim"] for c in claims] == ["unit", "call"]
    assert all(c["gaps"]["primal-dual_lp"] == "0" for c in claims)
    assert run("report", str(FIXTURES / "five_state_unconstrained.json"))[0] == 2


@pytest.mark.parametrize("argv", [["report", FIVE], ["polytope", FIVE], ["arbitrage", FIVE, "--unconstrained"],
                                  ["price", FIVE, "--claim", "unit"]])
def test_output_is_byte_stable(argv):
    assert run(*argv)[1] == run(*argv)[1]


def test_exact_formatting():
    from fractions import Fraction

    assert format_exact(Fraction(1, 2)) == "1/2 (0.500000)"
    assert format_exact(Fraction(3)) == "3 (3.00000)"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "superhedge", "validate", FIVE], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == run("validate", FIVE)[1]
