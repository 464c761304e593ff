import numpy as np
import pytest

from threadwire import curves as cv


@pytest.fixture(scope="module")
def circle():
    return cv.make_wire("circle")


@pytest.fixture(scope="module")
def ellipse():
    return cv.make_wire("ellipse")


@pytest.fixture(scope="module")
def helix():
    return cv.make_wire("helix", radius=1.0, pitch=1.0, turns=1.5)


class TestWireCurve:
    def test_circle_invariants(self, circle):
        assert circle.total_length == pytest.approx(2 * np.pi, rel=1e-9)
        assert circle.kappa_max == pytest.approx(1.0, rel=1e-9)
        speed = np.linalg.norm(circle.d1, axis=1)
        assert np.max(np.abs(speed - 1)) < 1e-9

    def test_ellipse_curvature_extremes(self, ellipse):
        kappa = ellipse.curvature()
        assert np.max(kappa) == pytest.approx(2.0, rel=1e-8)
        assert np.min(kappa) == pytest.approx(0.25, rel=1e-8)

    def test_arclength_samples_strictly_increasing(self, ellipse):
        assert np.all(np.diff(ellipse.s) > 0)
        assert ellipse.s[0] == 0.0
        assert ellipse.s[-1] == pytest.approx(ellipse.total_length)

    def test_torsion_of_helix_constant(self, helix):
        # unit-radius, unit-pitch helix: kappa = tau = 1/2
        tor = helix.torsion()
        kap = helix.curvature()
        assert np.max(np.abs(kap[5:-5] - 0.5)) < 1e-8
        assert np.max(np.abs(tor[5:-5] - 0.5)) < 1e-8

    def test_from_samples_matches_parametric(self, circle):
        t = np.linspace(0, 2 * np.pi, 4000, endpoint=False)
        pts = np.c_[np.cos(t), np.sin(t), np.zeros_like(t)]
        wc = cv.from_samples(pts, closed=True, n_samples=512)
        assert wc.total_length == pytest.approx(2 * np.pi, rel=1e-6)
        assert np.max(np.abs(wc.curvature() - 1.0)) < 1e-3

    def test_bad_parametrization_rejected(self):
        s = np.linspace(0, 1, 64)
        pts = np.c_[2 * s, np.zeros_like(s), np.zeros_like(s)]  # speed 2
        d1 = np.tile([2.0, 0, 0], (64, 1))
        zero = np.zeros((64, 3))
        with pytest.raises(cv.CurveError):
            cv.WireCurve(s, pts, d1, zero, zero, zero, 1.0, False)


class TestParallelFrame:
    def test_circle_frame_explicit(self, circle):
        # seed with inward radial + z-hat; planar curve keeps E2 = z-hat
        seed = (np.array([-1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]))
        fr = cv.parallel_frame(circle, seed=seed)
        s = circle.s
        expect_e1 = -np.c_[np.cos(s), np.sin(s), np.zeros_like(s)]
        assert np.max(np.abs(fr.e1 - expect_e1)) < 1e-9
        assert np.max(np.abs(fr.e2 - [0, 0, 1])) < 1e-10

    def test_straight_segment_frame_constant(self):
        seg = cv.make_wire("segment", length=2.0)
        seed = (np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]))
        fr = cv.parallel_frame(seg, seed=seed)
        assert np.max(np.abs(fr.e1 - [0, 1, 0])) < 1e-12
        assert np.max(np.abs(fr.e2 - [0, 0, 1])) < 1e-12

    def test_helix_frame_against_rk4_oracle(self, helix):
        # independent fixed-step RK4 at 10x the sample resolution
        fr = cv.parallel_frame(helix)
        y = np.concatenate([fr.e1[0], fr.e2[0]])
        n = 10 * (helix.n_samples - 1)
        h = helix.total_length / n
        svals = np.linspace(0, helix.total_length, n + 1)

        def f(s, y):
            e = y.reshape(2, 3)
            t = helix.tangent(s)
            k = helix.second(s)
            return (-(e @ k)[:, None] * t[None, :]).ravel()

        oracle = {0.0: y.copy()}
        for i in range(n):
            s = svals[i]
            k1 = f(s, y)
            k2 = f(s + h / 2, y + h / 2 * k1)
            k3 = f(s + h / 2, y + h / 2 * k2)
            k4 = f(s + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            oracle[svals[i + 1]] = y.copy()
        # compare every 10th oracle step with the frame samples
        for i in range(0, helix.n_samples, 97):
            s = helix.s[i]
            ref = oracle[svals[10 * i]].reshape(2, 3)
            assert np.linalg.norm(fr.e1[i] - ref[0]) < 1e-8
            assert np.linalg.norm(fr.e2[i] - ref[1]) < 1e-8

    def test_frame_residual_and_orthonormality(self):
        for fam, kw in [("circle", {}), ("ellipse", {}),
                        ("helix", dict(radius=1.0, pitch=1.0, turns=1.5))]:
            wc = cv.make_wire(fam, n_samples=10_000, **kw)
            fr = cv.parallel_frame(wc)
            assert cv.frame_ode_residual(fr) < 1e-8
            t = wc.d1
            assert np.max(np.abs(np.einsum("ij,ij->i", fr.e1, fr.e1) - 1)) < 1e-10
            assert np.max(np.abs(np.einsum("ij,ij->i", fr.e1, fr.e2))) < 1e-10
            assert np.max(np.abs(np.einsum("ij,ij->i", fr.e1, t))) < 1e-10

    def test_bad_seed_rejected(self, circle):
        with pytest.raises(cv.CurveError):
            cv.parallel_frame(circle, seed=(np.array([1.0, 0, 0]),
                                            np.array([0.0, 1.0, 0])))


@pytest.fixture(scope="module")
def chart(ellipse):
    return cv.TubularChart(ellipse)


class TestTubularChart:

    def test_simple_radius_circle(self, circle):
        r0 = cv.compute_simple_radius(circle)
        assert 0.9 < r0 <= 1.0

    def test_exp_on_curve(self, chart, ellipse):
        p, jac = chart.exp_map(2.0, 0.0, 0.0)
        assert np.allclose(p, ellipse.point(2.0))
        assert jac == pytest.approx(1.0)

    def test_jacobian_sign_on_circle(self, circle):
        chart = cv.TubularChart(circle, radius=0.5)
        r = 0.2
        # displacement opposite the curvature vector (outward): factor 1 + r
        s = 1.3
        e1, e2 = chart.frame.frame_at(s)
        k = circle.second(s)
        x = -r * np.dot(k, e1) / np.linalg.norm(k)
        y = -r * np.dot(k, e2) / np.linalg.norm(k)
        _, jac = chart.exp_map(s, x, y)
        assert jac == pytest.approx(1 + r, abs=1e-9)
        _, jac = chart.exp_map(s, -x, -y)
        assert jac == pytest.approx(1 - r, abs=1e-9)

    def test_jacobian_bound(self, chart, ellipse):
        rng = np.random.default_rng(7)
        kmax = ellipse.kappa_max
        for _ in range(500):
            s = rng.uniform(0, ellipse.total_length)
            r = rng.uniform(0, 0.95 * chart.radius)
            th = rng.uniform(0, 2 * np.pi)
            _, jac = chart.exp_map(s, r * np.cos(th), r * np.sin(th))
            assert 1 - r * kmax - 1e-12 <= jac <= 1 + r * kmax + 1e-12
            # the looser published bound holds a fortiori
            assert jac <= 1 + 4 * r * kmax + 1e-12

    def test_roundtrip_random(self, chart, ellipse):
        rng = np.random.default_rng(11)
        n = 1000
        s = rng.uniform(0, ellipse.total_length, n)
        r = rng.uniform(0, 0.9 * chart.simple_radius, n)
        th = rng.uniform(0, 2 * np.pi, n)
        pts, _ = chart.exp_map(s, r * np.cos(th), r * np.sin(th))
        worst = 0.0
        for i in range(n):
            res = chart.project(pts[i])
            q, _ = chart.exp_map(res.s, res.x, res.y)
            worst = max(worst, np.linalg.norm(q - pts[i]))
        assert worst < 1e-8

    def test_project_on_curve_point(self, chart, ellipse):
        res = chart.project(ellipse.point(3.7))
        assert res.r < 1e-9
        assert res.s == pytest.approx(3.7, abs=1e-8)

    def test_outside_point_flagged(self, chart):
        res = chart.project(np.array([50.0, 50.0, 50.0]))
        assert not res.inside


class TestPolylinePipe:
    def test_straight_segment_zero_deviation(self):
        seg = cv.make_wire("segment", length=3.0)
        _, dev = cv.polyline_and_pipe(seg, 0.25)
        assert dev < 1e-12

    def test_circle_deviation(self, circle):
        _, dev = cv.polyline_and_pipe(circle, 0.1)
        assert dev == pytest.approx(0.1 ** 2 / 8, rel=0.05)

    def test_ellipse_deviation_bound(self, ellipse):
        _, dev = cv.polyline_and_pipe(ellipse, 0.05)
        assert dev <= (1 / 8) * ellipse.kappa_max * 0.05 ** 2 * 1.1

    def test_deviation_over_eps2_converges(self, circle, ellipse):
        for wc in (circle, ellipse):
            ratios = [cv.polyline_and_pipe(wc, e)[1] / e ** 2
                      for e in (0.2, 0.1, 0.05)]
            assert ratios[-1] <= (1 / 8) * wc.kappa_max * 1.05
            diffs = np.abs(np.diff(ratios))
            assert diffs[1] <= diffs[0] + 1e-6

    def test_distance_query(self, circle):
        poly, _ = cv.polyline_and_pipe(circle, 0.1)
        assert poly.distance_to(np.zeros(3)) == pytest.approx(
            np.cos(0.05), rel=1e-6)

    def test_bad_epsilon(self, circle):
        with pytest.raises(cv.CurveError):
            cv.polyline_and_pipe(circle, circle.total_length + 1)


class TestGenericity:
    def test_circle_fails_morse(self, circle):
        rep = cv.genericity_check(circle)
        assert not rep.passed
        assert not rep.curvature_morse

    def test_planar_ellipse_fails_torsion(self, ellipse):
        rep = cv.genericity_check(ellipse)
        assert not rep.torsion_transverse
        assert not rep.passed

    def test_wobble_passes(self):
        wc = cv.make_wire("wobble")
        rep = cv.genericity_check(wc)
        assert rep.passed

    def test_reversal_invariance(self, ellipse):
        wobble = cv.make_wire("wobble")
        for wc in (ellipse, wobble):
            a = cv.genericity_check(wc)
            b = cv.genericity_check(wc.reversed())
            assert a.passed == b.passed
            assert a.curvature_morse == b.curvature_morse
            assert a.torsion_transverse == b.torsion_transverse


@pytest.fixture(scope="module")
def circle_chart(circle):
    return cv.TubularChart(circle, radius=0.6)


class TestHullMargin:

    def test_point_loop(self, circle_chart, circle):
        p, _ = circle_chart.exp_map(1.0, 0.1, 0.05)
        r = np.hypot(0.1, 0.05)
        assert cv.hull_margin(circle_chart, p[None, :]) == pytest.approx(r, abs=1e-8)

    def test_loop_in_one_disc(self, circle_chart):
        # loop inside a single normal disc: hull stays in that disc
        s0 = 0.5
        th = np.linspace(0, 2 * np.pi, 24, endpoint=False)
        r = 0.2
        pts = np.array([circle_chart.exp_map(s0, r * np.cos(a), r * np.sin(a))[0]
                        for a in th])
        margin = cv.hull_margin(circle_chart, pts)
        assert margin == pytest.approx(r, abs=1e-6)

    def test_quadratic_growth_exponent(self, circle_chart, circle):
        # short near-wire loops: hull excess r-margin scales like length^2
        r = 0.05
        excesses = []
        halves = [0.05, 0.1, 0.2]
        for ell in halves:
            s_vals = np.linspace(-ell, ell, 16)
            fwd = np.array([circle_chart.exp_map(s % circle.total_length, r, 0.0)[0]
                            for s in s_vals])
            back = np.array([circle_chart.exp_map(s % circle.total_length, r * 0.5,
                                           0.02)[0] for s in s_vals[::-1]])
            loop = np.vstack([fwd, back])
            margin = cv.hull_margin(circle_chart, loop)
            excesses.append(max(margin - r, 1e-12))
        slope = np.polyfit(np.log(halves), np.log(excesses), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.3)


class TestConfigAndExport:
    def test_wire_config_roundtrip(self, tmp_path):
        cfgfile = tmp_path / "wire.cfg"
        cfgfile.write_text("[wire]\nfamily = ellipse\na = 2.0\nb = 1.0\n"
                           "samples = 256\n")
        wc = cv.load_wire_file(cfgfile)
        assert wc.kappa_max == pytest.approx(2.0, rel=1e-6)
        assert wc.n_samples == 257

    def test_missing_family_rejected(self, tmp_path):
        cfgfile = tmp_path / "wire.cfg"
        cfgfile.write_text("[wire]\na = 2.0\n")
        with pytest.raises(cv.CurveError):
            cv.load_wire_file(cfgfile)

    def test_csv_export(self, tmp_path, circle):
        out = tmp_path / "curve.csv"
        cv.export_curve_csv(circle, out)
        rows = out.read_text().strip().splitlines()
        assert rows[0] == "s,x,y,z,kappa,torsion"
        assert len(rows) == circle.n_samples + 1
        first = rows[1].split(",")
        assert float(first[1]) == pytest.approx(1.0)
        assert float(first[4]) == pytest.approx(1.0, rel=1e-6)
