import math

import numpy as np
import pytest
from scipy import integrate, special

from sclb.cutoffs import bump
from sclb.grid import lp_norm
from sclb.hermite import w_even_at_zero_closed_form
from sclb.quantize import residual
from sclb.quasimodes import (FAMILY_NAMES, airy_cutoff, airy_dmass, airy_mass, airy_weighted_constant,
                             build_airy_turning, build_gaussian_beam, build_ground_state, build_log_counterexample,
                             build_plane_sheet, build_thin_slab, get_family, log_center_value, log_k)
from sclb.scaling import Verdict, fit_power, residual_order, sweep
from sclb.symbols import CaseTag


class TestPlaneSheet:
    def test_sup_ratio(self):
        h = 2**-6
        u = build_plane_sheet(h)
        # ||chi(x/h)||_2 over x' scales like h^{1/2}; the peak constant is 1/(||bump||_2 ||bump_r||)
        peak = lp_norm(u, math.inf) / lp_norm(u, 2)
        c, _ = integrate.quad(lambda t: bump(np.array(t)) ** 2, -1, 1)
        const = 1 / math.sqrt(c * c)
        assert 0.5 <= peak / (h**-0.5 * const) <= 2

    def test_normalized(self):
        assert lp_norm(build_plane_sheet(2**-5), 2) == pytest.approx(1, abs=1e-6)

    def test_wrong_dimension(self):
        with pytest.raises(ValueError):
            build_plane_sheet(0.1, 1)

    def test_unresolved(self):
        with pytest.raises(ValueError):
            build_plane_sheet(2**-6, N=64)


class TestThinSlab:
    def test_sup_slope(self):
        hs = [2.0**-e for e in range(3, 8)]
        assert fit_power(hs, [lp_norm(build_thin_slab(h), math.inf) for h in hs]).slope == pytest.approx(1.0, abs=0.1)

    def test_normalized(self):
        assert lp_norm(build_thin_slab(2**-5), 2) == pytest.approx(1, abs=1e-6)


class TestGaussianBeam:
    def test_n2_p6(self):
        hs = [2.0**-e for e in range(4, 11)]
        assert fit_power(hs, [lp_norm(build_gaussian_beam(h, 2), 6) for h in hs]).slope == pytest.approx(1 / 6, abs=0.03)

    def test_n3_p4(self):
        hs = [2.0**-e for e in range(4, 9)]
        assert fit_power(hs, [lp_norm(build_gaussian_beam(h, 3), 4) for h in hs]).slope == pytest.approx(1 / 4, abs=0.03)

    def test_residual_order(self):
        fam = get_family("gaussian_beam", 2)
        hs = [2.0**-e for e in range(4, 11)]
        res = [residual(fam.symbol, fam.build(h), h) for h in hs]
        assert residual_order(hs, res) == pytest.approx(1.0, abs=0.2)


class TestGroundState:
    def test_closed_form_sup(self):
        for e in (6, 10, 16):
            h = 2.0**-e
            assert lp_norm(build_ground_state(h), math.inf) == pytest.approx((math.pi * h) ** -0.25, rel=1e-12)

    def test_slopes(self):
        hs = [2.0**-e for e in range(6, 17)]
        us = [build_ground_state(h) for h in hs]
        assert fit_power(hs, [lp_norm(u, math.inf) for u in us]).slope == pytest.approx(0.25, abs=0.02)
        assert fit_power(hs, [lp_norm(u, 2) for u in us]).slope == pytest.approx(0.0, abs=0.01)


def airy_norm_oracle(h, p):
    """||u||_p / ||u||_2 for u = Ai(-x/h^{2/3}) chi(x) by adaptive quadrature with the reference Airy."""
    f = lambda x: abs(special.airy(-x / h ** (2 / 3))[0] * airy_cutoff(np.array(x)))
    pts = np.linspace(-0.5, 1.0, 400)
    num = sum(integrate.quad(lambda x: f(x) ** p, a, b, epsabs=0, epsrel=1e-11, limit=200)[0]
              for a, b in zip(pts, pts[1:]))
    den = sum(integrate.quad(lambda x: f(x) ** 2, a, b, epsabs=0, epsrel=1e-11, limit=200)[0]
              for a, b in zip(pts, pts[1:]))
    return num ** (1 / p) / den**0.5


class TestAiryTurning:
    @pytest.mark.parametrize("p", [6, 4])
    def test_norm_against_quadrature(self, p):
        h = 2**-8
        u = build_airy_turning(h)
        assert lp_norm(u, p) / lp_norm(u, 2) == pytest.approx(airy_norm_oracle(h, p), rel=1e-6)

    def test_slopes(self):
        hs = [2.0**-e for e in range(6, 15)]
        us = [build_airy_turning(h) for h in hs]
        assert fit_power(hs, [lp_norm(u, math.inf) for u in us]).slope == pytest.approx(1 / 6, abs=0.03)
        assert fit_power(hs, [lp_norm(u, 6) for u in us]).slope == pytest.approx(1 / 18, abs=0.02)
        assert fit_power(hs, [lp_norm(u, 2) for u in us]).slope == pytest.approx(0, abs=0.01)

    def test_interior_mass_slopes(self):
        h = 2**-12
        u = build_airy_turning(h)
        eps = np.geomspace(h ** (2 / 3), 0.5, 10)
        m = [airy_mass(u, e) for e in eps]
        d = [airy_dmass(u, e) for e in eps]
        # slopes vs eps, so fit against 1/eps
        assert -fit_power(eps, m).slope == pytest.approx(0.25, abs=0.05)
        assert -fit_power(eps, d).slope == pytest.approx(0.75, abs=0.07)

    def test_weighted_estimate_stable(self):
        for e in (8, 12):
            h = 2.0**-e
            u = build_airy_turning(h)
            c = [airy_weighted_constant(u, k * h ** (2 / 3)) for k in (1, 2, 4)]
            assert max(c) / min(c) <= 1.5
            assert all(0 < v < 10 for v in c)


class TestLogCounterexample:
    @pytest.mark.parametrize("k", range(3, 9))
    def test_unit_norm_and_exact_kernel(self, k):
        h = 2.0**-k
        u = build_log_counterexample(h)
        assert log_k(h) == k
        assert lp_norm(u, 2) == pytest.approx(1, abs=1e-6)
        assert residual(get_family("log_counterexample").symbol, u, h) <= 1e-8

    def test_center_value(self):
        c = []
        for k in range(3, 9):
            h = 2.0**-k
            u = build_log_counterexample(h)
            mid = u.grid.N // 2
            v = u.values[mid, mid].real * math.sqrt(h)  # undo h^{-1/2}
            # direct summation oracle from the closed form of |w_2j(0)|
            direct = sum(2 ** (-l / 2) / math.sqrt(k) * w_even_at_zero_closed_form(j) ** 2
                         for l in range(1, k + 1) for j in range(2**l, 2 ** (l + 1)))
            assert v == pytest.approx(direct, rel=1e-9)
            assert log_center_value(k) == pytest.approx(direct, rel=1e-12)
            c.append(v / math.sqrt(k))
        c = np.array(c)
        assert np.all(np.abs(c / np.median(c) - 1) <= 0.25)

    def test_compensated_ratio_increases(self):
        r = [lp_norm(build_log_counterexample(2.0**-k), math.inf) * 2.0 ** (-k / 2) for k in range(3, 9)]
        assert all(b > a for a, b in zip(r, r[1:]))

    def test_budget(self):
        with pytest.raises(ValueError):
            build_log_counterexample(2.0**-12)


class TestFamilies:
    def test_registry(self):
        assert set(FAMILY_NAMES) == {"plane_sheet", "thin_slab", "gaussian_beam", "ground_state", "airy_turning",
                                     "log_counterexample"}
        with pytest.raises(ValueError):
            get_family("nope")
        with pytest.raises(ValueError):
            get_family("ground_state", 2)

    @pytest.mark.parametrize("name,n,case", [("gaussian_beam", 2, CaseTag.PRINCIPAL_NONDEG),
                                             ("gaussian_beam", 3, CaseTag.PRINCIPAL_NONDEG),
                                             ("airy_turning", 2, CaseTag.TURNING_POINT),
                                             ("log_counterexample", 2, CaseTag.NONPRINCIPAL_NONDEG),
                                             ("plane_sheet", 2, CaseTag.UNCLASSIFIED)])
    def test_case_matches_classification(self, name, n, case):
        fam = get_family(name, n)
        assert fam.case is case
        assert fam.classify().tag is case

    SWEEPS = [("ground_state", 1, "inf", (6, 16)), ("plane_sheet", 2, "inf", (3, 7)), ("thin_slab", 2, "inf", (3, 7)),
              ("gaussian_beam", 2, 6, (4, 10)), ("airy_turning", 1, "inf", (6, 14)), ("airy_turning", 2, 2, (5, 9))]

    @pytest.mark.parametrize("name,n,p,hr", SWEEPS)
    def test_normalization_residual_and_slope_together(self, name, n, p, hr):
        fam = get_family(name, n)
        hs = [2.0**-e for e in range(hr[0], hr[1] + 1)]
        assert len(hs) >= 5
        (r,) = sweep(fam, [p], hs)
        assert r.verdict is Verdict.PASS, r.as_dict()
        assert all(abs(lp_norm(fam.build(h), 2) - 1) <= 1e-6 for h in hs[:3])
