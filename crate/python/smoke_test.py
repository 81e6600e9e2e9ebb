#!/usr/bin/env python3
"""Smoke test for the costsat_py extension module.

Builds the module if needed, loads it from the cargo target directory, and
drives the whole pipeline on a small problem with a known optimum.

Run from the repository root:

    cargo build -p costsat-py
    python3 python/smoke_test.py
"""

import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent

SHORTCUT_PROBLEM = {
    "variables": ["v1", "v2"],
    "actions": [
        {"name": "pi1", "pre": ["-v1", "-v2"], "eff": ["v1", "-v2"], "cost": 1},
        {"name": "pi2", "pre": ["v1", "-v2"], "eff": ["-v1", "v2"], "cost": 1},
        {"name": "pi3", "pre": ["-v1", "-v2"], "eff": ["-v1", "v2"], "cost": 3},
    ],
    "init": ["-v1", "-v2"],
    "goal": ["-v1", "v2"],
}


def load_module():
    candidates = [
        REPO / "target" / "debug" / "libcostsat_py.so",
        REPO / "target" / "release" / "libcostsat_py.so",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        subprocess.run(
            ["cargo", "build", "-p", "costsat-py"], cwd=REPO, check=True
        )
        built = candidates[0]
    staging = Path(tempfile.mkdtemp(prefix="costsat_py_"))
    shutil.copy2(built, staging / "costsat_py.so")
    sys.path.insert(0, str(staging))
    import costsat_py

    return costsat_py


def main():
    cs = load_module()

    prob = cs.Problem.from_json(json.dumps(SHORTCUT_PROBLEM))
    assert repr(prob) == "Problem(2 variables, 3 actions)"
    assert prob.validate() == [], "the sample problem is well-formed"

    report = prob.analyze()
    assert report["diameter"] == 1
    assert report["recurrence_diameter"] == 2
    assert report["sublist_diameter"] == 2
    assert report["trivial_bound"] == 3

    assert prob.optimal_cost() == 2

    first = prob.initial_plan("greedy")
    assert first is not None
    check = prob.validate_plan(first)
    assert check["valid"]

    # The direct action is valid but expensive.
    check = prob.validate_plan(["pi3"])
    assert check == {"valid": True, "cost": 3}

    ct = prob.completeness_threshold(["pi3"])
    assert ct["horizon"] == 3, "cost 3 over minimum cost 1"
    assert ct["branch"] == "cost_ratio"

    # Bounded queries: cost 2 within 2 steps works, cost 1 never does.
    assert prob.solve_bounded(2, 2) == ["pi1", "pi2"]
    assert prob.solve_bounded(1, 3) is None

    result = prob.optimize(initial=["pi3"])
    assert result["initial_cost"] == 3
    assert result["best_cost"] == 2
    assert result["best_plan"] == ["pi1", "pi2"]
    assert result["optimal_proven"] is True
    assert result["stop"] == "optimal"
    assert len(result["iterations"]) == 2
    assert result["unsat_certificate"]["cost_bound"] == 1

    dimacs, meta = prob.encode(2, 2)
    assert dimacs.startswith("p cnf ")
    assert json.loads(meta)["horizon"] == 2
    solved = cs.solve_dimacs(dimacs)
    assert solved["status"] == "sat"

    starved, _ = prob.encode(1, 3)
    assert cs.solve_dimacs(starved)["status"] == "unsat"

    # Generated problems round-trip through JSON and stay consistent.
    gen = cs.generate(seed=12, cost_mode="no-zero")
    again = cs.Problem.from_json(gen.to_json())
    assert gen.optimal_cost() == again.optimal_cost()
    opt = gen.optimize()
    assert opt["optimal_proven"] is True
    assert opt["best_cost"] == gen.optimal_cost()

    unsolvable = cs.generate(seed=3, unsolvable=True)
    assert unsolvable.optimal_cost() is None
    assert unsolvable.initial_plan() is None

    print("smoke test passed")


if __name__ == "__main__":
    main()
