import io
import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from pocalc.cli import main

from _shared import GRAPHS, MEDIATION_DISPLAY, SIDE_DISPLAY, TRIANGLE_DISPLAY

SCHEMA = json.loads((Path(__file__).resolve().parent.parent / "docs" / "result.schema.json").read_text())

FIG1A = str(GRAPHS / "mediation_confounded.txt")
FIG1B = str(GRAPHS / "mediation_side.txt")
TRI = str(GRAPHS / "triangle.txt")
BOW = str(GRAPHS / "bow.txt")
MEDIATION = "P(Y(A=a, M(A=a')))"
CONDITIONAL = "P(Y(A=a, M(A=a')) | C)"


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_identify_text():
    assert run("identify", "--graph", FIG1A, "--query", MEDIATION) == (0, MEDIATION_DISPLAY + "\n")
    assert run("identify", "--graph", FIG1B, "--query", CONDITIONAL) == (0, SIDE_DISPLAY + "\n")
    assert run("identify", "--graph", TRI, "--query", MEDIATION) == (0, TRIANGLE_DISPLAY + "\n")


def test_identify_latex_and_certify():
    code, text = run("identify", "--graph", TRI, "--query", MEDIATION, "--format", "latex")
    assert code == 0 and text.startswith("\\sum_{C, M}")
    code, text = run("identify", "--graph", FIG1B, "--query", CONDITIONAL, "--certify")
    assert code == 0 and "open path Y <-> C" in text


def test_not_identified_exit_codes():
    code, text = run("identify", "--graph", FIG1A, "--query", CONDITIONAL)
    assert code == 2 and "recanting district {C,M,Y}" in text
    code, text = run("identify", "--graph", BOW, "--query", "P(Y(A=a))")
    assert code == 2 and text.startswith("NOT IDENTIFIED: hedge")
    code, text = run("identify", "--graph", TRI, "--query", "P(Y(C=c', A(C=c)))")
    assert code == 2 and "recanting witness A" in text


@pytest.mark.parametrize(
    "graph, query",
    [
        (FIG1A, MEDIATION),
        (FIG1A, CONDITIONAL),
        (FIG1B, CONDITIONAL),
        (TRI, "P(Y(C=c', A(C=c)))"),
        (BOW, "P(Y(A=a))"),
    ],
)
def test_json_matches_schema_and_format_never_changes_the_verdict(graph, query):
    codes = set()
    for fmt in ("text", "latex", "json"):
        code, text = run("identify", "--graph", graph, "--query", query, "--format", fmt)
        codes.add(code)
        if fmt == "json":
            payload = json.loads(text)
            jsonschema.validate(payload, SCHEMA)
            assert payload["status"] == ("identified" if code == 0 else "not-identified")
    assert len(codes) == 1


def test_verify():
    code, text = run("verify", "--graph", TRI, "--query", MEDIATION, "--seeds", "20")
    assert code == 0 and "over 20 seeds" in text
    code, text = run("verify", "--graph", FIG1A, "--query", MEDIATION, "--seeds", "3", "--cards", "3")
    assert code == 0 and text.rstrip().endswith("(ok)")
    code, _ = run("verify", "--graph", FIG1A, "--query", CONDITIONAL, "--seeds", "2")
    assert code == 2
    # a tolerance no computation meets
    code, text = run("verify", "--graph", FIG1A, "--query", MEDIATION, "--seeds", "2", "--tol", "-1")
    assert code == 3 and "FAIL" in text


def test_check_rule():
    code, text = run("check-rule", "--rule", "2", "--graph", BOW, "--y", "Y", "--z", "A")
    assert code == 2 and "does not apply" in text
    code, text = run("check-rule", "--rule", "2", "--graph", TRI, "--y", "Y", "--z", "A", "--w", "C,M", "--format", "json")
    payload = json.loads(text)
    assert code == 0 and payload["verdict"] is True and payload["certificates"][0]["holds"]


def test_usage_errors():
    assert run("identify", "--graph", "/nonexistent", "--query", MEDIATION)[0] == 1
    assert run("identify", "--graph", TRI, "--query", "P(Y(A=a")[0] == 1
    assert run("identify", "--graph", TRI)[0] == 1
    assert run("verify", "--graph", TRI, "--query", MEDIATION, "--seeds", "0")[0] == 1
    assert run("check-rule", "--rule", "2", "--graph", TRI, "--y", "Q")[0] == 1


def test_console_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "pocalc", "identify", "--graph", TRI, "--query", MEDIATION],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == TRIANGLE_DISPLAY
