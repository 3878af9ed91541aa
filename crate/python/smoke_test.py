#!/usr/bin/env python3
"""Import the compiled suspan_py extension and check known analysis results.

Build it first with `cargo build -p suspan-py` (or --release), then run
`python3 python/smoke_test.py` from the repository root.
"""

import json
import pathlib
import shutil
import sys
import tempfile
from fractions import Fraction

ROOT = pathlib.Path(__file__).resolve().parents[1]


def find_extension():
    names = ("libsuspan_py.so", "libsuspan_py.dylib", "suspan_py.dll")
    for profile in ("release", "debug"):
        for name in names:
            p = ROOT / "target" / profile / name
            if p.exists():
                return p
    sys.exit("extension not built; run: cargo build -p suspan-py")


# CPython wants the module file named exactly suspan_py.so
tmp = tempfile.mkdtemp(prefix="suspan_py.")
shutil.copy(find_extension(), pathlib.Path(tmp) / "suspan_py.so")
sys.path.insert(0, tmp)

import suspan_py  # noqa: E402

TWO_WINDOW = json.dumps(
    {
        "hp_tasks": [{"id": 1, "C": "2", "T": "4", "D": "4"}],
        "ss_task": {"C": ["2", "2"], "S": ["8"], "D": "40", "T": "40"},
    }
)

ts = suspan_py.TaskSystem.from_json(TWO_WINDOW)
assert ts.num_hp_tasks == 1
assert ts.num_segments == 2
assert Fraction(ts.utilization) == Fraction(3, 5)
assert Fraction(ts.hp_utilization) == Fraction(1, 2)

r = suspan_py.wcrt_ordinary(ts, 1)
assert r == {"verdict": "ok", "response": "2"}, r

e = suspan_py.exact_wcrt(ts)
assert e["verdict"] == "schedulable" and e["response"] == "16", e
assert e["exact"] is True
assert e["witness"]["hp_releases"][0]["releases"] == ["0", "12"], e

# without the count bounds the per-window model overshoots: 20 > 16
m = suspan_py.milp_solve(ts, variant="no-bounds")
assert m["objective"] == "20" and m["status"] == "optimal", m

chk = suspan_py.milp_check(ts, json.dumps(m["best"]), variant="no-bounds")
assert chk["feasible"] is True and chk["objective"] == "20", chk

assert suspan_py.split_bound(ts) == "16"
assert suspan_py.joint_bound(ts) == "24"

lp = suspan_py.export_lp(ts)
assert "Maximize" in lp and "Generals" in lp

tr = suspan_py.simulate(ts, json.dumps({"hp_releases": [], "suspensions": ["8"]}))
assert tr["outcome"] == {"finished": {"response": "12"}}, tr["outcome"]

g = suspan_py.gap_report(2, 2)
assert g["ratio"] == "94/67" and g["threshold"] == "4/3", g
assert Fraction(g["ratio"]) > Fraction(g["threshold"])

# a solvable 3-partition instance turns into a deadline miss, and the
# cross-check agrees along every route
values = [2, 2, 3] * 3
red = suspan_py.build_reduction(3, 7, values)
assert suspan_py.exact_wcrt(red)["verdict"] == "deadline-miss"

cc = suspan_py.cross_check_reduction(3, 7, values)
assert cc["has_partition"] is True
assert cc["exhaustive_miss"] and cc["constrained_miss"] and cc["implicit_miss"], cc

# round trip through a file
with tempfile.NamedTemporaryFile(suffix=".json", delete=False) as f:
    path = f.name
ts.save(path)
again = suspan_py.TaskSystem.load(path)
assert again.utilization == ts.utilization
pathlib.Path(path).unlink()

print("smoke test passed")
