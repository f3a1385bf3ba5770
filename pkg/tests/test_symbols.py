import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from sclb.symbols import (BUILTIN_NAMES, CaseTag, Symbol, builtin_symbol, classify_point, fiber_curvature)


def pt(*v):
    return np.array(v, dtype=float)


class TestBuiltins:
    def test_harmonic_on_energy_shell(self):
        s = builtin_symbol("harmonic", 1)
        assert s.value(pt(0), pt(1)) == 0.0

    def test_hyperbolic_at_origin(self):
        s = builtin_symbol("hyperbolic", 2)
        assert s.value(pt(0, 0), pt(0, 0)) == 0.0
        assert np.array_equal(s.dxi(pt(0, 0), pt(0, 0)), [0, 0])
        assert np.array_equal(s.dxi2(pt(0, 0), pt(0, 0)), np.diag([2.0, -2.0]))

    def test_model_turning_at_origin(self):
        s = builtin_symbol("model_turning", 2)
        assert s.value(pt(0, 0), pt(0, 0)) == 0.0
        assert np.array_equal(s.dxi(pt(0, 0), pt(0, 0)), [0, 0])
        assert np.array_equal(s.dx(pt(0, 0), pt(0, 0)), [-1, 0])

    @pytest.mark.parametrize("name", BUILTIN_NAMES)
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_analytic_derivatives_match_finite_differences(self, name, n):
        if name == "hyperbolic" and n != 2:
            with pytest.raises(ValueError):
                builtin_symbol(name, n)
            return
        s = builtin_symbol(name, n)
        bare = Symbol("bare", n, s.evaluate)
        rng = np.random.default_rng(n)
        x0, xi0 = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
        assert np.allclose(s.dxi(x0, xi0), bare.dxi(x0, xi0), atol=1e-8)
        assert np.allclose(s.dxi2(x0, xi0), bare.dxi2(x0, xi0), atol=1e-4)
        assert np.allclose(s.dx(x0, xi0), bare.dx(x0, xi0), atol=1e-8)

    @pytest.mark.parametrize("name", ["harmonic", "model_turning", "schrodinger", "xi1", "x1"])
    def test_split_parts_sum_to_symbol(self, name):
        s = builtin_symbol(name, 2)
        assert s.is_split
        rng = np.random.default_rng(0)
        x = [rng.uniform(-1, 1, 5), rng.uniform(-1, 1, 5)]
        xi = [rng.uniform(-1, 1, 5), rng.uniform(-1, 1, 5)]
        assert np.allclose(s(x, xi), s.kinetic(*xi) + s.potential(*x))

    def test_schrodinger_expression(self):
        s = builtin_symbol("schrodinger", 2, {"g": [[2, 0], [0, 1]], "V": "x1**2 + sin(x2)"})
        assert s.value(pt(1, 0.5), pt(1, 1)) == pytest.approx(2 + 1 + 1 + math.sin(0.5))

    def test_schrodinger_rejects_degenerate_metric(self):
        with pytest.raises(ValueError):
            builtin_symbol("schrodinger", 2, {"g": [[1, 0], [0, 0]]})

    def test_schrodinger_expression_is_sandboxed(self):
        with pytest.raises(Exception):
            builtin_symbol("schrodinger", 1, {"V": "__import__('os').getcwd()"}).value(pt(0), pt(0))

    def test_unknown(self):
        with pytest.raises(ValueError):
            builtin_symbol("nope", 1)

    def test_algebra(self):
        a, b = builtin_symbol("xi1", 1), builtin_symbol("x1", 1)
        x, xi = [np.array([0.3])], [np.array([-0.7])]
        assert (a * b)(x, xi) == pytest.approx(-0.21)
        assert a.scaled(3.0)(x, xi) == pytest.approx(-2.1)
        assert builtin_symbol("harmonic", 1).shifted(0.5)(x, xi) == pytest.approx(0.09 + 0.49 - 1.5)
        assert not (a * b).is_split
        assert (a * b).terms is not None


class TestClassify:
    def test_harmonic_turning_point(self):
        c = classify_point(builtin_symbol("harmonic", 2), pt(1, 0), pt(0, 0))
        assert c.tag is CaseTag.TURNING_POINT
        assert c.as_dict()["tol"] == 1e-8

    def test_beam_principal(self):
        assert classify_point(builtin_symbol("beam", 3), pt(0, 0, 0), pt(0, 0, 0)).tag is CaseTag.PRINCIPAL_NONDEG

    def test_hyperbolic_nonprincipal(self):
        assert classify_point(builtin_symbol("hyperbolic", 2), pt(0, 0), pt(0, 0)).tag is CaseTag.NONPRINCIPAL_NONDEG

    def test_elliptic(self):
        assert classify_point(builtin_symbol("harmonic", 1), pt(0), pt(0)).tag is CaseTag.ELLIPTIC

    def test_flat_characteristic_set_unclassified(self):
        assert classify_point(builtin_symbol("xi1", 2), pt(0, 0), pt(0, 0)).tag is CaseTag.UNCLASSIFIED

    def test_model_turning(self):
        assert classify_point(builtin_symbol("model_turning", 2), pt(0, 0), pt(0, 0)).tag is CaseTag.TURNING_POINT

    def test_curvature_of_sphere(self):
        # p = |xi|^2 - 1 at xi = e1 in n = 3: the unit sphere has curvature 1 up to the gradient scaling
        g, H = np.array([2.0, 0, 0]), 2 * np.eye(3)
        assert fiber_curvature(g, H) == pytest.approx(1.0)
        assert fiber_curvature(5 * g, 5 * H) == pytest.approx(1.0)

    def test_bad_tol(self):
        with pytest.raises(ValueError):
            classify_point(builtin_symbol("x1", 1), pt(0), pt(0), tol=0)

    CASES = [("harmonic", 2, (1, 0), (0, 0)), ("beam", 2, (0, 0), (0, 0)), ("beam", 3, (0, 0, 0), (0, 0, 0)),
             ("hyperbolic", 2, (0, 0), (0, 0)), ("harmonic", 2, (0, 0), (0, 0)), ("xi1", 2, (0, 0), (0, 0)),
             ("model_turning", 2, (0, 0), (0, 0)), ("harmonic", 2, (0.6, 0), (0.8, 0))]

    @given(st.sampled_from(CASES), st.lists(st.floats(-2, 2), min_size=9, max_size=9))
    def test_invariant_under_linear_change_of_frequency(self, case, entries):
        name, n, x0, xi0 = case
        A = np.array(entries[: n * n]).reshape(n, n) + 2 * np.eye(n)
        assume(abs(np.linalg.det(A)) > 0.3 and np.linalg.cond(A) < 20)
        s = builtin_symbol(name, n)
        base = classify_point(s, pt(*x0), pt(*xi0), tol=1e-6)
        moved = classify_point(s.transformed(A), pt(*x0), np.linalg.solve(A, pt(*xi0)), tol=1e-6)
        assert moved.tag is base.tag

    @given(st.sampled_from(CASES), st.floats(0.1, 10))
    def test_scale_invariant(self, case, c):
        name, n, x0, xi0 = case
        s = builtin_symbol(name, n)
        assert classify_point(s.scaled(c), pt(*x0), pt(*xi0)).tag is classify_point(s, pt(*x0), pt(*xi0)).tag
        assert classify_point(s.scaled(2.0), pt(*x0), pt(*xi0)).tag is classify_point(s, pt(*x0), pt(*xi0)).tag
