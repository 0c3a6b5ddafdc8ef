"""Smoke test for the attrition_py extension.

Install first:  pip install --no-build-isolation -e crates/python
"""

import json
import math

import attrition_py as at


def main():
    exp = at.Distribution.exponential(1.0)
    assert exp.classify() == "A"
    assert at.Distribution.pareto(1.0, 1.0).classify() == "B"
    assert json.loads(exp.to_json()) == {"family": "exponential", "lambda": 1.0}

    # exponential, gamma = 1/3
    eq = at.Equilibrium(exp, c=math.log(3.0))
    sol = eq.solve()
    assert abs(sol.sigma(2.0, 1) - 2.0 / 3.0) < 1e-9
    assert abs(sol.sigma(2.0, 2) - 6.0) < 1e-9

    # Pareto with the highest zero-concession type at 2
    par = at.Equilibrium(at.Distribution.pareto(1.0, 1.0), theta1=2.0)
    psol = par.solve()
    assert abs(par.c - 0.5) < 1e-12
    assert abs(psol.sigma(3.0, 1) - 2.0 * math.log(1.25)) < 1e-9
    assert math.isinf(psol.sigma(2.5, 2))

    uni = at.Distribution.uniform01()
    report = at.Equilibrium(uni, c=0.0).solve().verify()
    assert report["passed"] and report["max_gain"] <= 1e-3

    grid = [exp.quantile(p) for p in (0.1, 0.3, 0.5, 0.7, 0.9)]
    assert at.equivalence(exp, 0.9, 0.2, grid) < 1e-8

    sel = at.selection(uni, deltas=[0.5, 0.9])
    assert all(abs(c["forced_C"]) <= 1e-12 for c in sel["cells"])

    try:
        at.Equilibrium(uni, c=0.1, theta1=0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("two anchors accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
