import math

import numpy as np
import pytest

from dualaction import (
    BoundarySpec,
    HamiltonianModel,
    NotSaddleError,
    PerturbationSpec,
    PreconditionError,
    UnsolvableRestrictionError,
    action_r,
    action_s,
    certify_bounds,
    functional_G,
    functional_Gp,
    functional_J,
    functional_Jp,
    pi_from_theta,
    solve_position_bvp,
    theta_from_pi,
)
from dualaction.bounds import cosine_series, sine_series


@pytest.fixture
def saddle_bvp(saddle):
    return solve_position_bvp(saddle, BoundarySpec("position-type", 0.0, 1.0), (0.0, 1.0), 2000)


class TestRestrictions:
    def test_separable_momentum_is_mass_times_velocity(self):
        m = HamiltonianModel.free(2.0)
        theta = np.linspace(0.0, 1.0, 101)  # slope 1
        pi = pi_from_theta(m, theta, 0.01)
        np.testing.assert_allclose(pi, 2.0, atol=1e-12)

    def test_sho_critical_position_recovers_momentum(self, sho):
        t = np.linspace(0.0, 1.0, 2001)
        pi = pi_from_theta(sho, np.sin(t), t[1] - t[0])
        assert np.max(np.abs(pi - np.cos(t))) <= 1e-4

    def test_quartic_kinetic_root(self):
        quart = HamiltonianModel.general(
            lambda p, q: p**4 / 4.0,
            partials={
                (1, 0): lambda p, q: p**3 * np.ones(np.broadcast(p, q).shape),
                (2, 0): lambda p, q: 3.0 * p**2 * np.ones(np.broadcast(p, q).shape),
            },
        )
        theta = 8.0 * np.linspace(0.0, 1.0, 101)  # slope 8 exactly
        pi = pi_from_theta(quart, theta, 0.01)
        np.testing.assert_allclose(pi, 2.0, atol=1e-9)

    def test_saddle_position_from_momentum_slope(self, saddle):
        t = np.linspace(0.0, 1.0, 2001)
        theta = theta_from_pi(saddle, np.cosh(t), t[1] - t[0])
        assert np.max(np.abs(theta - np.sinh(t))) <= 1e-4

    def test_saddle_linear_solve(self):
        m = HamiltonianModel.saddle_quadratic(1.0, 4.0)
        t = np.linspace(0.0, 1.0, 101)
        theta = theta_from_pi(m, 8.0 * t, t[1] - t[0])  # dPi/dt = 8
        np.testing.assert_allclose(theta, 2.0, atol=1e-9)

    def test_free_particle_unsolvable(self, free):
        with pytest.raises(UnsolvableRestrictionError):
            theta_from_pi(free, np.cosh(np.linspace(0, 1, 51)), 0.02)


class TestFunctionalEqualities:
    def test_all_four_match_critical_actions(self, saddle, saddle_bvp):
        path = saddle_bvp.path
        dt = path.dt
        s = action_s(saddle, path).value
        r = action_r(saddle, path).value
        assert functional_J(saddle, path.q, dt) == pytest.approx(s, abs=2e-6)
        assert functional_G(saddle, path.p, dt) == pytest.approx(s, abs=2e-6)
        assert functional_Jp(saddle, path.q, dt, path.p[0]) == pytest.approx(r, abs=2e-6)
        assert functional_Gp(saddle, path.p, dt, path.q[0]) == pytest.approx(r, abs=2e-6)

    def test_critical_saddle_action_closed_form(self, saddle, saddle_bvp):
        # q = sinh(t)/sinh(1): S = coth(1)/2
        s = action_s(saddle, saddle_bvp.path).value
        assert s == pytest.approx(math.cosh(1.0) / (2.0 * math.sinh(1.0)), abs=1e-7)

    def test_perturbed_theta_raises_J(self, saddle, saddle_bvp):
        path = saddle_bvp.path
        u = (path.times - path.times[0]) / (path.times[-1] - path.times[0])
        theta = path.q + 0.1 * np.sin(np.pi * u)
        s = action_s(saddle, path).value
        assert functional_J(saddle, theta, path.dt) > s + 1e-4


class TestCertificates:
    def test_s_chain_no_violations(self, saddle, saddle_bvp):
        spec = PerturbationSpec(amplitude=0.2, mode_count=8, seed=11, pinned="q-pinned")
        cert = certify_bounds(saddle, "S-chain", saddle_bvp, spec, 200)
        assert cert.violations == 0
        assert cert.worst_margin > -cert.slack

    def test_r_chain_no_violations(self, saddle, saddle_bvp):
        spec = PerturbationSpec(amplitude=0.2, mode_count=8, seed=11, pinned="p-pinned")
        cert = certify_bounds(saddle, "R-chain", saddle_bvp, spec, 200)
        assert cert.violations == 0
        assert cert.worst_margin > -cert.slack

    def test_sho_rejected(self, sho, saddle_bvp):
        spec = PerturbationSpec(amplitude=0.2, seed=1, pinned="q-pinned")
        with pytest.raises(NotSaddleError):
            certify_bounds(sho, "S-chain", saddle_bvp, spec, 5)

    def test_pin_mismatch_rejected(self, saddle, saddle_bvp):
        spec = PerturbationSpec(amplitude=0.2, seed=1, pinned="p-pinned")
        with pytest.raises(PreconditionError):
            certify_bounds(saddle, "S-chain", saddle_bvp, spec, 5)

    def test_zero_amplitude_margins_within_slack(self, saddle, saddle_bvp):
        for chain, pin in (("S-chain", "q-pinned"), ("R-chain", "p-pinned")):
            spec = PerturbationSpec(amplitude=0.0, seed=2, pinned=pin)
            cert = certify_bounds(saddle, chain, saddle_bvp, spec, 3)
            assert np.max(np.abs(cert.margins_low)) <= cert.slack
            assert np.max(np.abs(cert.margins_high)) <= cert.slack

    def test_margins_scale_second_order(self, saddle, saddle_bvp):
        means = []
        amplitudes = (1e-1, 1e-2, 1e-3)
        for eps in amplitudes:
            spec = PerturbationSpec(amplitude=eps, mode_count=8, seed=5, pinned="q-pinned")
            cert = certify_bounds(saddle, "S-chain", saddle_bvp, spec, 40)
            means.append(np.mean(np.concatenate([cert.margins_low, cert.margins_high])))
        fit = np.polyfit(np.log(amplitudes), np.log(means), 1)[0]
        assert fit >= 1.9

    def test_opposite_sidedness(self, saddle, saddle_bvp):
        # S is bounded below by the Pi-functional and above by the
        # Theta-functional; R the other way around
        path = saddle_bvp.path
        dt = path.dt
        u = (path.times - path.times[0]) / (path.times[-1] - path.times[0])
        rng = np.random.default_rng(9)
        d_sine = sine_series(path.times, 0.2, 6, rng)
        d_cos = cosine_series(path.times, 0.2, 6, rng)
        d_cos0 = cosine_series(path.times, 0.2, 6, rng, include_constant=False)
        s = action_s(saddle, path).value
        r = action_r(saddle, path).value
        assert functional_J(saddle, path.q + d_sine, dt) >= s
        assert functional_G(saddle, path.p + d_cos, dt) <= s
        assert functional_Gp(saddle, path.p + d_sine, dt, path.q[0]) >= r
        from dualaction.bounds import _compatibility_shift

        theta = _compatibility_shift(saddle, path.q + d_cos0, dt, path.p[0], path.p[-1])
        assert functional_Jp(saddle, theta, dt, path.p[0]) <= r

    def test_certificate_exports(self, saddle, saddle_bvp, tmp_path):
        spec = PerturbationSpec(amplitude=0.2, seed=3, pinned="q-pinned")
        cert = certify_bounds(saddle, "S-chain", saddle_bvp, spec, 10)
        cert.to_json(tmp_path / "cert.json")
        cert.to_csv(tmp_path / "cert.csv")
        import json

        data = json.loads((tmp_path / "cert.json").read_text())
        assert data["violations"] == 0
        lines = (tmp_path / "cert.csv").read_text().strip().splitlines()
        assert len(lines) == 11


class TestPerturbationSpec:
    def test_validation(self):
        with pytest.raises(PreconditionError):
            PerturbationSpec(amplitude=0.1, pinned="z-pinned")
        with pytest.raises(PreconditionError):
            PerturbationSpec(amplitude=0.1, mode_count=0)

    def test_sine_series_pinned_and_normalized(self):
        t = np.linspace(0.0, 2.0, 401)
        d = sine_series(t, 0.3, 8, np.random.default_rng(0))
        assert d[0] == pytest.approx(0.0, abs=1e-15)
        assert d[-1] == pytest.approx(0.0, abs=1e-12)
        assert np.max(np.abs(d)) == pytest.approx(0.3)

    def test_cosine_series_zero_mean_without_constant(self):
        t = np.linspace(0.0, 2.0, 4001)
        d = cosine_series(t, 0.3, 8, np.random.default_rng(1), include_constant=False)
        assert abs(np.trapezoid(d, t)) <= 1e-4
