"""Smoke test for the fifdim extension module.

Build and install first:
    pip install --no-build-isolation crates/python
"""

import json
import math
from fractions import Fraction

import fifdim


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    problem = fifdim.Problem.three_branch_example()
    assert problem.n == 3
    validation = problem.validate()
    assert validation.positive and validation.contractive and not validation.collinear
    assert json.loads(validation.to_json())["n"] == 3

    system = problem.normalize()
    assert close(system.beta, 7 / 9, 1e-15)
    assert system.sup_f_bound == 4.5

    value, bound = system.point("1/6", depth=200)
    assert close(value, 47 / 30, 1e-12), value
    value, bound = system.point(0.5, depth=200)
    assert close(value, 2.4, 1e-12), value

    upper, lower = system.extrema_table(1)
    assert upper[1] == [43 / 81, 52 / 81, 7 / 9]
    assert lower[2] == [2 / 3, 5 / 9, 4 / 9]

    bracket = system.rho_bracket(1)
    assert close(bracket.upper, 1.7622, 5e-5) and close(bracket.lower, 1.5380, 5e-5)
    history = system.rho_history(8)
    assert close(history[-1].upper, 1.6474, 5e-5) and close(history[-1].lower, 1.6473, 5e-5)
    assert close(system.spectral_radius(1, "lower"), bracket.lower, 1e-12)
    rho, half_width, level = system.estimate_rho(target_width=2e-4, k_max=8)
    assert level == 8 and close(rho, 1.6474, 1e-4)

    gamma = system.sum_function()
    assert gamma.exact() == ("59/36", "5/3", "1/9")

    grid = system.grid(8)
    assert len(grid.x) == len(grid.values) == 3**8 + 1
    o1, o1_lower, _ = grid.oscillation(1)
    assert o1_lower >= 2.0

    report = system.dimension(k_max=8, grid_level=12, slope_window=(3, 6))
    assert report.kind == "formula" and report.branch == "sufficient_condition"
    assert 1.4530 <= report.dimension <= 1.4545, report.dimension
    assert json.loads(report.to_json())["verdict"]["kind"] == "formula"

    knots = [Fraction(i, 3) for i in range(4)]
    affine = fifdim.Problem(knots, [0, 1, 1, 0], [0, 1], [["1/2"]]).normalize()
    flat = affine.rho_bracket(1)
    assert flat.lower == flat.upper == 1.5
    expected = 1 + math.log(1.5) / math.log(3)
    assert close(affine.dimension(k_max=2, grid_level=10).dimension, expected, 1e-12)

    try:
        fifdim.Problem(knots, [0, 1, 1, 0], [0, 1], [["6/5"]]).normalize()
    except fifdim.FifError as e:
        assert "contractivity" in str(e)
    else:
        raise AssertionError("expected a contractivity error")

    print("fifdim smoke test passed:", report)


if __name__ == "__main__":
    main()
