import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sclb.quasimodes import get_family
from sclb.scaling import (ExponentPrediction, ScalingReport, Verdict, fit_power, parallel_map, predicted_exponent,
                          sogge_exponent, sobolev_exponent, strip_exponents, sweep, thread_count, turning_exponent,
                          verdict)
from sclb.symbols import CaseTag

TP, PR, NP, EL = CaseTag.TURNING_POINT, CaseTag.PRINCIPAL_NONDEG, CaseTag.NONPRINCIPAL_NONDEG, CaseTag.ELLIPTIC


def mu(case, n, p):
    return predicted_exponent(case, n, p).mu


class TestExponentTables:
    def test_turning_point_meets_sobolev_bound(self):
        assert mu(TP, 3, 6) == pytest.approx(0.5, abs=1e-12)
        assert mu(TP, 3, 6) == pytest.approx(5 / 6 - 1 / 3, abs=1e-12)

    def test_principal_at_sogge_exponent(self):
        assert mu(PR, 3, 4) == pytest.approx(0.25, abs=1e-12)
        for n in (2, 3):
            ps = sogge_exponent(n)
            assert mu(PR, n, ps) == pytest.approx(1 / ps, abs=1e-12)
            assert mu(PR, n, math.inf) == pytest.approx((n - 1) / 2, abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3])
    def test_strip_sigma_continuity(self, n):
        ps = sogge_exponent(n)
        ip = 1 / ps
        assert (n - 1) / 2 * (0.5 - ip) == pytest.approx((n - 1) / 2 - n * ip, abs=1e-12)
        below = strip_exponents(ps * (1 - 1e-13), n)[0]
        assert strip_exponents(ps, n)[0] == pytest.approx(below, abs=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_strip_mu_quarter_at_turning_exponent(self, n):
        assert strip_exponents(turning_exponent(n), n)[1] == pytest.approx(0.25, abs=1e-12)

    def test_strip_mu_quarter_at_sobolev_exponent(self):
        assert strip_exponents(sobolev_exponent(3), 3)[1] == pytest.approx(0.25, abs=1e-12)

    def test_strip_domain(self):
        with pytest.raises(ValueError):
            strip_exponents(7, 3)
        with pytest.raises(ValueError):
            strip_exponents(1.5, 2)

    def test_turning_endpoint_carries_log(self):
        pr = predicted_exponent(TP, 2, turning_exponent(2))
        assert pr.correction == "power_log"
        assert pr.alpha == pytest.approx(3 / 10)

    def test_turning_literal_exponents_reported(self):
        pr = predicted_exponent(TP, 3, 2.5)
        assert pr.literal_mu is not None and pr.literal_mu != pr.mu

    def test_nonprincipal(self):
        with pytest.raises(ValueError):
            predicted_exponent(NP, 1, 4)
        pr = predicted_exponent(NP, 2, math.inf)
        assert pr.mu == 0.5 and pr.correction == "sqrt_log"

    def test_rejects_p_below_two(self):
        with pytest.raises(ValueError):
            predicted_exponent(EL, 2, 1.5)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_turning_curve_continuous_at_regime_boundaries(self, n):
        for pb in (turning_exponent(n), sobolev_exponent(n)):
            if math.isinf(pb):
                continue
            lo = mu(TP, n, pb * (1 - 1e-9))
            hi = mu(TP, n, pb * (1 + 1e-9))
            assert lo == pytest.approx(hi, abs=1e-7)

    @pytest.mark.parametrize("case", [TP, PR, NP, EL])
    @pytest.mark.parametrize("n", [2, 3])
    def test_monotone_in_inverse_p(self, case, n):
        ps = [1 / t for t in np.linspace(0.5, 1e-6, 400)] + [math.inf]
        vals = [mu(case, n, p) for p in ps]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        assert min(vals) >= vals[0] - 1e-12 and max(vals) <= vals[-1] + 1e-12


class TestFit:
    @given(st.floats(-2, 2), st.floats(-3, 3), st.integers(3, 12))
    def test_exact_on_synthetic_power(self, mu0, a, k):
        hs = [2.0**-e for e in range(1, k + 1)]
        f = fit_power(hs, [2**a * h**-mu0 for h in hs])
        assert f.slope == pytest.approx(mu0, abs=1e-12)

    def test_power_log_recovers_both(self):
        hs = [2.0**-e for e in range(3, 15)]
        vals = [h**-0.5 * math.log2(1 / h) ** 0.5 for h in hs]
        f = fit_power(hs, vals, "power_log")
        assert f.slope == pytest.approx(0.5, abs=1e-10)
        assert f.log_coef == pytest.approx(0.5, abs=1e-10)

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_power([0.5, 0.25], [1, 2])
        with pytest.raises(ValueError):
            fit_power([0.5, 0.25, 0.125], [1, 0, 2])
        with pytest.raises(ValueError):
            fit_power([0.5, 0.25, 0.125], [1, 2, 3], "cubic")
        with pytest.raises(ValueError):
            fit_power([0.9, 0.25, 0.125], [1, 2, 3], "power_log")


def report(slope, stderr=0.0, mu0=0.25, tol=0.02):
    return ScalingReport("ground_state", "x", 1, math.inf, [1, 2, 3], [1, 1, 1], slope, stderr,
                         ExponentPrediction(mu0), tol=tol)


class TestVerdict:
    def test_pass(self):
        assert verdict(report(0.251)) is Verdict.PASS

    def test_fail(self):
        assert verdict(report(0.4)) is Verdict.FAIL

    def test_inconclusive(self):
        assert verdict(report(0.25, stderr=0.05)) is Verdict.INCONCLUSIVE

    def test_residual_order(self):
        r = report(0.25)
        r.residual_order, r.required_order = 0.5, 0.8
        assert verdict(r) is Verdict.FAIL


class TestSweep:
    def test_ground_state(self):
        hs = [2.0**-e for e in range(6, 17)]
        (r,) = sweep(get_family("ground_state"), ["inf"], hs)
        assert r.slope == pytest.approx(0.25, abs=0.02)
        assert r.verdict is Verdict.PASS
        assert r.residual_order == math.inf

    def test_gaussian_beam(self):
        (r,) = sweep(get_family("gaussian_beam", 2), [6], [2.0**-e for e in range(4, 11)])
        assert r.slope == pytest.approx(1 / 6, abs=0.03)

    def test_log_counterexample_power_log(self):
        (r,) = sweep(get_family("log_counterexample"), ["inf"], [2.0**-e for e in range(3, 9)], model="power_log",
                     with_residual=False)
        assert r.slope == pytest.approx(0.5, abs=0.05)
        assert r.log_coef > 0

    def test_reports_sorted_by_p(self):
        rs = sweep(get_family("ground_state"), ["inf", 2, 4], [2.0**-e for e in range(6, 10)])
        assert [r.p for r in rs] == [2, 4, math.inf]
        d = rs[0].as_dict()
        for key in ("family", "case", "n", "p", "points", "slope", "stderr", "predicted", "correction", "verdict"):
            assert key in d

    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            sweep(get_family("ground_state"), [2], [0.1, 0.05])

    @pytest.mark.parametrize("name,n,p", [("ground_state", 1, "inf"), ("gaussian_beam", 2, 6),
                                          ("plane_sheet", 2, "inf"), ("airy_turning", 1, "inf")])
    def test_grid_stable(self, name, n, p):
        fam = get_family(name, n)
        hs = [2.0**-e for e in range(fam.default_h[0], fam.default_h[0] + 4)]
        (a,) = sweep(fam, [p], hs, with_residual=False)
        Ns = [fam.build(h).grid.N * 2 for h in hs]
        b_norms = []
        from sclb.grid import lp_norm
        for h, N in zip(hs, Ns):
            b_norms.append(lp_norm(fam.build(h, N=N), p))
        b = fit_power(hs, b_norms)
        assert abs(a.slope - b.slope) < 0.05 / 4


class TestThreads:
    def test_env(self, monkeypatch):
        monkeypatch.setenv("SCLB_THREADS", "3")
        assert thread_count() == 3
        monkeypatch.setenv("SCLB_THREADS", "zero")
        with pytest.raises(ValueError):
            thread_count()

    def test_parallel_map_order(self, monkeypatch):
        monkeypatch.setenv("SCLB_THREADS", "4")
        assert parallel_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]
