import numpy as np
import pytest
import scipy.optimize

import oscnet as on
from oscnet.errors import (
    DirectLinkForbidden,
    FrequencyMismatch,
    NoDominantMode,
    NoZeroInBracket,
    PoleAtOmega,
)
from oscnet.spectral import BathConfig


def detuned_pair_network(omega_b=1.05):
    """Two-node base with an attached pair; equal links, pair detuned."""
    base = on.build_network(
        np.array([1.3, 1.5]), np.array([[0.0, -0.05], [-0.05, 0.0]])
    )
    return on.attach_pair(
        base, 1.0, omega_b,
        links_a={0: -0.15, 1: -0.12},
        links_b={0: -0.15, 1: -0.12},
    )


class TestParameterScan:
    def test_values_match_direct_computation(self, chain3, common_bath):
        values = np.linspace(0.8, 1.4, 13)
        out = on.parameter_scan(chain3, ("omega", 1), values, common_bath)
        assert np.array_equal(out.values, values)
        for k, v in enumerate(values):
            dec = on.effective_couplings(
                on.diagonalize(chain3.with_omega(1, v)), common_bath
            )
            assert out.sigma_index[k] == dec.slowest
            assert out.kappa_sigma[k] == pytest.approx(
                abs(dec.eff_coupling[dec.slowest]), abs=1e-14
            )
        assert np.all(out.stable)

    def test_unstable_points_are_nan_not_raised(self, common_bath):
        # strong couplings push the quadratic form indefinite at small omega
        net = on.build_network(
            np.array([1.0, 1.0]), np.array([[0.0, -0.9], [-0.9, 0.0]])
        )
        values = np.linspace(0.05, 1.5, 12)
        out = on.parameter_scan(net, ("omega", 0), values, common_bath)
        assert np.any(~out.stable)
        assert np.all(np.isnan(out.kappa_sigma[~out.stable]))
        assert np.all(np.isfinite(out.kappa_sigma[out.stable]))

    def test_swap_flag(self, common_bath):
        net = detuned_pair_network(omega_b=1.0)
        values = np.linspace(0.85, 1.2, 36)
        out = on.kappa_sigma_scan(net, 3, values, common_bath)
        # the identity of the least-coupled mode changes across the scan
        assert np.any(out.swapped)
        changes = np.flatnonzero(np.diff(out.sigma_index) != 0) + 1
        assert set(changes) == set(np.flatnonzero(out.swapped))

    def test_separate_bath_rejected(self, chain3, separate_bath):
        with pytest.raises(ValueError):
            on.parameter_scan(chain3, ("omega", 0), [1.0, 1.1], separate_bath)


class TestFindSyncFrequency:
    def test_recovers_exact_pair_resonance(self, common_bath):
        # equal links means the antisymmetric mode decouples exactly when
        # the pair frequencies match: the zero must land on 1.0
        net = detuned_pair_network(omega_b=1.05)
        res = on.find_sync_frequency(net, 3, (0.9, 1.15), common_bath)
        assert res.value == pytest.approx(1.0, abs=1e-9)
        assert res.residual <= 1e-10
        assert res.param == ("omega", 3)
        assert res.report.frozen != ()

    def test_result_verified_against_fresh_decomposition(self, common_bath):
        net = detuned_pair_network()
        res = on.find_sync_frequency(net, 3, (0.9, 1.15), common_bath)
        dec = on.effective_couplings(
            on.diagonalize(net.with_omega(3, res.value)), common_bath
        )
        assert abs(dec.eff_coupling[dec.slowest]) <= 1e-10
        assert dec.freqs[dec.slowest] == pytest.approx(res.mode_freq)
        assert dec.slowest == res.mode_index

    def test_matches_fine_grid_minimum(self, er10, common_bath):
        # independent route: brute-force the |kappa| dip location
        bracket = (0.95, 1.15)
        res = on.find_sync_frequency(er10, 4, bracket, common_bath, tol=1e-9)
        grid = np.linspace(*bracket, 4001)
        kmin = np.empty(grid.shape)
        for k, v in enumerate(grid):
            dec = on.effective_couplings(
                on.diagonalize(er10.with_omega(4, v)), common_bath
            )
            kmin[k] = np.min(np.abs(dec.eff_coupling))
        assert abs(res.value - grid[np.argmin(kmin)]) < (grid[1] - grid[0]) * 1.5

    def test_local_bath(self, common_bath):
        net = detuned_pair_network()
        bath = BathConfig(kind="local", gamma=0.01, temperature=10.0,
                          cutoff=50.0, node=0)
        res = on.find_sync_frequency(net, 3, (0.9, 1.15), bath)
        assert res.value == pytest.approx(1.0, abs=1e-9)

    def test_no_zero_in_bracket(self, common_bath):
        # (1.6, 2.0) was grid-checked: |kappa| stays above 0.5 throughout
        net = detuned_pair_network()
        with pytest.raises(NoZeroInBracket):
            on.find_sync_frequency(net, 3, (1.6, 2.0), common_bath)

    def test_bad_bracket(self, chain3, common_bath):
        with pytest.raises(ValueError):
            on.find_sync_frequency(chain3, 0, (1.5, 1.5), common_bath)


class TestFindSyncParameter:
    def test_coupling_zero_at_balanced_value(self, common_bath):
        # pair balanced except one external link; the zero sits exactly at
        # the matching coupling
        base = on.build_network(
            np.array([1.3, 1.5]), np.array([[0.0, -0.05], [-0.05, 0.0]])
        )
        net = on.attach_pair(
            base, 1.0, 1.0,
            links_a={0: -0.15, 1: -0.12},
            links_b={0: -0.15, 1: -0.07},
        )
        res = on.find_sync_parameter(net, ("coupling", 3, 1), (-0.2, -0.03),
                                     common_bath)
        assert res.value == pytest.approx(-0.12, abs=1e-9)
        assert res.residual <= 1e-10


class TestEstimateSyncTimes:
    def test_formula_oracle(self, er10, common_bath):
        dec = on.analyze(er10, common_bath)
        est = on.estimate_sync_times(dec)
        gamma, f = dec.damping, dec.modes
        sigma = int(np.argmin(gamma))
        assert est.sigma == sigma
        for j in range(10):
            ts = [
                2.0 * (np.log(abs(f[j, m])) - np.log(abs(f[j, sigma])))
                / (gamma[m] - gamma[sigma])
                for m in range(10)
                if m != sigma and abs(f[j, m]) > 0.0
            ]
            assert est.node_times[j] == pytest.approx(max(max(ts), 0.0), rel=1e-12)
        assert est.t_sync == pytest.approx(
            np.max(est.node_times[np.isfinite(est.node_times)])
        )
        assert not np.any(est.unreachable)

    def test_unreachable_nodes_flagged(self, common_bath):
        # the frozen antisymmetric pair mode has no weight on the base
        # nodes, so they can never lock to it
        net = detuned_pair_network(omega_b=1.0)
        dec = on.analyze(net, common_bath)
        est = on.estimate_sync_times(dec)
        assert list(est.unreachable) == [True, True, False, False]
        assert np.all(np.isinf(est.node_times[:2]))
        assert np.all(np.isfinite(est.node_times[2:]))
        assert est.t_sync == pytest.approx(np.max(est.node_times[2:]))

    def test_tie_raises(self, chain3, separate_bath):
        dec = on.analyze(chain3, separate_bath)
        with pytest.raises(NoDominantMode):
            on.estimate_sync_times(dec)

    def test_requires_rates(self, chain3):
        with pytest.raises(ValueError):
            on.estimate_sync_times(on.diagonalize(chain3))


class TestMotifFormulas:
    OMEGA_A, OMEGA_B = 1.0, 1.3
    LAM_AC, LAM_BC = -0.09, -0.11

    def tuned_motif(self):
        """Root of the residual in (omega_b, 2), plus the matching hub."""
        f = lambda w: on.motif_frozen_residual(
            self.OMEGA_A, self.OMEGA_B, self.LAM_AC, self.LAM_BC, w
        )
        target = scipy.optimize.brentq(f, 1.31, 1.9, xtol=1e-14)
        omega_c = on.motif_hub_frequency(
            self.OMEGA_A, self.OMEGA_B, self.LAM_AC, self.LAM_BC, target
        )
        coupling = np.zeros((3, 3))
        coupling[0, 2] = coupling[2, 0] = self.LAM_AC
        coupling[1, 2] = coupling[2, 1] = self.LAM_BC
        net = on.build_network(
            np.array([self.OMEGA_A, self.OMEGA_B, omega_c]), coupling
        )
        return net, target

    def test_residual_formula(self):
        w = 1.6
        got = on.motif_frozen_residual(self.OMEGA_A, self.OMEGA_B,
                                       self.LAM_AC, self.LAM_BC, w)
        expected = (self.LAM_AC / (w**2 - self.OMEGA_A**2)
                    + self.LAM_BC / (w**2 - self.OMEGA_B**2) + 1.0)
        assert got == pytest.approx(expected, rel=1e-14)

    def test_hub_frequency_places_eigenmode(self):
        net, target = self.tuned_motif()
        dec = on.diagonalize(net)
        k = int(np.argmin(np.abs(dec.freqs - target)))
        assert dec.freqs[k] == pytest.approx(target, abs=1e-10)

    def test_tuned_motif_mode_is_frozen(self, common_bath):
        net, target = self.tuned_motif()
        dec = on.effective_couplings(on.diagonalize(net), common_bath)
        k = int(np.argmin(np.abs(dec.freqs - target)))
        assert abs(dec.eff_coupling[k]) < 1e-10

    def test_pole_guards(self):
        with pytest.raises(PoleAtOmega):
            on.motif_frozen_residual(1.0, 1.3, -0.1, -0.1, 1.0)
        with pytest.raises(PoleAtOmega):
            on.motif_hub_frequency(1.0, 1.3, -0.1, -0.1, 1.3)
        # a mode too close to a deep branch pole would need omega_c^2 < 0
        with pytest.raises(PoleAtOmega):
            on.motif_hub_frequency(1.0, 1.3, -0.9, -0.9, 1.0 + 1e-4)


class TestEmbeddingResiduals:
    def build_embedded(self, rewire):
        motif, target = TestMotifFormulas().tuned_motif()
        n = 5
        omega = np.concatenate([motif.omega, [1.45, 1.7]])
        lam = np.zeros((n, n))
        lam[:3, :3] = motif.coupling
        # externals couple to all three motif nodes
        for j, links in ((3, (-0.06, -0.04, -0.05)), (4, (0.03, -0.02, 0.04))):
            lam[0, j] = lam[j, 0] = links[0]
            lam[1, j] = lam[j, 1] = links[1]
            lam[2, j] = lam[j, 2] = links[2]
        lam[3, 4] = lam[4, 3] = -0.03
        if rewire:
            w2 = target**2
            u_a = lam[0, 2] / (w2 - omega[0] ** 2)
            u_b = lam[1, 2] / (w2 - omega[1] ** 2)
            for j in (3, 4):
                lam[2, j] = lam[j, 2] = -(u_a * lam[0, j] + u_b * lam[1, j])
        return on.build_network(omega, lam), target

    def test_residual_values(self):
        net, target = self.build_embedded(rewire=False)
        external, res = on.embedding_residuals(net, 0, 1, 2, target)
        assert list(external) == [3, 4]
        w2 = target**2
        u_a = net.coupling[0, 2] / (w2 - net.omega[0] ** 2)
        u_b = net.coupling[1, 2] / (w2 - net.omega[1] ** 2)
        for k, j in enumerate((3, 4)):
            expected = (u_a * net.coupling[0, j] + u_b * net.coupling[1, j]
                        + net.coupling[2, j])
            assert res[k] == pytest.approx(expected, rel=1e-13)
        assert np.any(np.abs(res) > 1e-3)

    def test_rewired_embedding_freezes_mode(self, common_bath):
        # zero residuals must give the full network an exact eigenmode at
        # the motif frequency with vanishing common-bath weight
        net, target = self.build_embedded(rewire=True)
        external, res = on.embedding_residuals(net, 0, 1, 2, target)
        assert np.max(np.abs(res)) < 1e-15
        dec = on.effective_couplings(on.diagonalize(net), common_bath)
        k = int(np.argmin(np.abs(dec.freqs - target)))
        assert dec.freqs[k] == pytest.approx(target, abs=1e-10)
        assert abs(dec.eff_coupling[k]) < 1e-10
        assert np.max(np.abs(dec.modes[3:, k])) < 1e-10

    def test_pole_guard(self):
        net, _ = self.build_embedded(rewire=False)
        with pytest.raises(PoleAtOmega):
            on.embedding_residuals(net, 0, 1, 2, float(net.omega[0]))


class TestBalancePair:
    def unbalanced(self):
        base = on.build_network(
            np.array([1.3, 1.5]), np.array([[0.0, -0.05], [-0.05, 0.0]])
        )
        return on.attach_pair(
            base, 1.0, 1.0,
            links_a={0: -0.15, 1: -0.12},
            links_b={0: -0.11, 1: -0.07},
        )

    def test_balancing_zeroes_residuals(self, common_bath):
        net = self.unbalanced()
        out = on.balance_pair_couplings(net, 2, 3)
        expected_before = (net.coupling[2, [0, 1]] - net.coupling[3, [0, 1]]) / np.sqrt(2)
        assert np.allclose(out.residual_before, expected_before, atol=1e-15)
        assert np.all(out.residual_after == 0.0)
        dec = on.effective_couplings(on.diagonalize(out.net), common_bath)
        assert np.min(np.abs(dec.eff_coupling)) < 1e-12

    def test_balanced_mode_is_antisymmetric_pair(self, common_bath):
        out = on.balance_pair_couplings(self.unbalanced(), 2, 3)
        dec = on.effective_couplings(on.diagonalize(out.net), common_bath)
        k = int(np.argmin(np.abs(dec.eff_coupling)))
        vec = dec.modes[:, k]
        assert np.max(np.abs(vec[:2])) < 1e-12
        assert abs(vec[2] + vec[3]) < 1e-12
        assert abs(abs(vec[2]) - 1.0 / np.sqrt(2.0)) < 1e-12

    def test_preconditions(self):
        net = self.unbalanced()
        with pytest.raises(FrequencyMismatch):
            on.balance_pair_couplings(net.with_omega(3, 1.01), 2, 3)
        with pytest.raises(DirectLinkForbidden):
            on.balance_pair_couplings(net.with_coupling(2, 3, -0.02), 2, 3)
        with pytest.raises(ValueError):
            on.balance_pair_couplings(net, 2, 2)
