"""Regenerates tests/fixtures from the closed-form example coefficients.

Run from the repository root: python3 tools/make_fixtures.py
"""
import json
import math
from pathlib import Path

OUT = Path("tests/fixtures")
XS = [-60.0, -25.5, -10.0, -3.3, -1.0, -0.25, 0.0, 0.4, 2.0, 7.5, 30.0]


def diag(n, v):
    return [[v if i == j else 0.0 for j in range(n)] for i in range(n)]


def v1(x):
    return -1.0 - (815.0 + 219.0 * math.cos(1.8 * x)) * math.exp(0.1 * x)


def v3b(x):
    return -1.0 - (255.0 + 0.1 * math.cos(0.5 * x)) * math.exp(0.15 * x)


def v2(x):
    return -1.0 + 1.8 * math.exp(-0.06 * abs(x))


def d4(x):
    return -1.0 + 1.93 * math.exp(-0.141 * abs(x))


EXAMPLES = {
    "example1": dict(n=1, domain={"kind": "half", "c": [[18.0]], "C2": [[-9.0]]},
                     V=lambda x: [[v1(x)]], xs=[x for x in XS if x <= 0.0]),
    "example2": dict(n=1, domain={"kind": "whole"}, V=lambda x: [[v2(x)]], xs=XS),
    "example3": dict(n=2, domain={"kind": "half", "c": [[18.0, 2.0], [2.0, 25.0]], "C2": diag(2, -9.0)},
                     V=lambda x: [[v1(x), 0.0], [0.0, v3b(x)]], xs=[x for x in XS if x <= 0.0]),
    "example4": dict(n=2, domain={"kind": "whole"}, V=lambda x: [[d4(x), 0.5], [0.5, d4(x)]], xs=XS),
}


def golden():
    for name, e in EXAMPLES.items():
        n = e["n"]
        samples = [{"x": x, "V": e["V"](x), "f1": diag(n, 1.0), "f2": diag(n, 2.0)} for x in e["xs"]]
        doc = {"name": name, "n": n, "delta": 2.0, "domain": e["domain"], "samples": samples}
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")


def table_example2():
    xs = [-350.0 + 0.5 * i for i in range(1401)]
    doc = {
        "name": "example2-table",
        "n": 1,
        "delta": 2.0,
        "coefficients": {"kind": "table", "x": xs, "V": [[[v2(x)]] for x in xs],
                         "f1": [[[1.0]] for _ in xs], "f2": [[[2.0]] for _ in xs]},
        "limits": {"Vminus": [[-1.0]], "f1minus": [[1.0]], "f2minus": [[2.0]],
                   "Vplus": [[-1.0]], "f1plus": [[1.0]], "f2plus": [[2.0]]},
        "domain": {"kind": "whole"},
    }
    (OUT / "example2_table.json").write_text(json.dumps(doc) + "\n")


def violated():
    xs = [-10.0, -5.0, 0.0]
    doc = {
        "name": "positive-limit",
        "n": 1,
        "coefficients": {"kind": "table", "x": xs, "V": [1.0, 1.0, 1.0], "f1": [1.0, 1.0, 1.0],
                         "f2": [1.0, 1.0, 1.0]},
        "limits": {"Vminus": 1.0, "f1minus": 1.0, "f2minus": 1.0},
        "domain": {"kind": "half", "c": 0.0, "C2": -1.0},
    }
    (OUT / "positive_limit.json").write_text(json.dumps(doc, indent=1) + "\n")
    (OUT / "malformed.json").write_text('{"n": 1, "coefficients": {"kind": "table", "x": [0, 1]\n')


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    golden()
    table_example2()
    violated()
