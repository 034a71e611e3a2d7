"""Smoke test for the noisetab extension module.

Build it first (see README), then run `python3 python/smoke_test.py`.
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import noisetab  # noqa: E402


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    values = [328.3654, 329.2947, 328.4099, 328.5886, 328.2965, 328.4134]
    table = noisetab.difference_table(values)
    assert table[0] == values
    assert len(table) == 6 and len(table[5]) == 1

    est = noisetab.estimate_noise(values)
    assert est.is_ok(), est
    assert est.selected_order == 1
    assert close(est.value, 0.4216, 5e-5), est.value
    assert [o for o, _, _ in est.per_order] == [1, 2, 3, 4, 5]

    flat = noisetab.estimate_noise([2.5] * 7)
    assert flat.status == "NoAgreement" and flat.value == 0.0

    try:
        noisetab.estimate_noise([1.0, 2.0, 3.0])
    except ValueError as e:
        assert "too few points" in str(e)
    else:
        raise AssertionError("expected ValueError")

    assert close(noisetab.gamma(1), 0.5, 1e-15)
    assert close(noisetab.gamma(3), 36 / 720, 1e-15)

    pts = [[0.0, 1.0], [1.0, 0.5], [3.0, -1.0]]
    curve = noisetab.NewtonCurve(pts)
    assert curve.dim == 2 and curve.order == 2
    for j, p in enumerate(pts):
        assert all(close(a, b, 1e-12) for a, b in zip(curve(float(j)), p))
    bounds = noisetab.derivative_bound(pts)
    assert len(bounds) == 2 and all(b > 0 for b in bounds)

    sol = noisetab.solve_selection([0.0], [[1.0], [2.0], [3.0], [10.0], [-7.0]], 3, 3)
    oracle = noisetab.brute_force_selection([0.0], [[1.0], [2.0], [3.0], [10.0], [-7.0]], 3, 3)
    assert sol.optimal and sol.assignment == oracle.assignment == [0, 1, 2]
    assert close(sol.objective, 1.0, 1e-12)

    free = noisetab.solve_selection([0.0], [[0.5]], 2, 1, h=1.0)
    assert sum(isinstance(a, list) for a in free.assignment) == 1
    assert 0 in free.assignment

    d, p = noisetab.ks_two_sample([0.1, 0.2, 0.3], [0.1, 0.2, 0.3])
    assert d == 0.0 and p == 1.0

    cfg = {
        "kind": "geometry",
        "function": {"ground_truth": {"kind": "quadratic"},
                     "noise": {"kind": "multiplicative", "sigma": 1e-3}, "dim": 4},
        "dims": [4], "hs": [1e-6], "ms": [6], "trials": 20, "seed": 2,
    }
    summary = json.loads(noisetab.run_experiment(json.dumps(cfg)))
    cell = summary["cells"][0]
    assert len(cell["modes"]) == 2
    assert 0.0 <= cell["ks_standard_vs_arbitrary"]["p_value"] <= 1.0
    assert not math.isnan(cell["modes"][0]["success_fraction"])

    print("smoke test passed")


if __name__ == "__main__":
    main()
