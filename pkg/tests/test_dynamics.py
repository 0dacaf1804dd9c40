import numpy as np
import pytest
from scipy.linalg import expm

import oscnet as on
from oscnet.dynamics import (
    StabilityError,
    assemble_model,
    compose_preparation,
    evolve,
    evolve_bare,
    preparation_matrix,
    probe_mask,
    quadratic_energy,
    renormalize,
)
from oscnet.symplectic import is_symplectic

from conftest import random_stable_graph


def single_oscillator(omega_s=0.25, k=0.0, omega0=0.25):
    return on.build_explicit(1, omega0, []).with_probe(1, k, omega_s)


class TestAssemble:
    def test_two_by_two_by_hand(self):
        g = on.build_explicit(1, 0.25, []).with_probe(1, 0.01, 0.3)
        m = assemble_model(g)
        assert np.allclose(m.V, [[0.09, 0.01], [0.01, 0.0625]])
        assert np.all(np.linalg.eigvalsh(m.V) > 0)

    def test_interior_node_diagonal(self):
        g = on.build_linear_chain(16, [0.1, 0.05], 0.25).with_probe(8, 0.01, 0.58)
        m = assemble_model(g)
        # environment node 2 (0-based 1) couples with 0.1 and 0.05
        assert np.isclose(m.V[2, 2], 0.25**2 + 0.15)

    def test_schur_instability_detected(self):
        # single env node at omega0: stability needs omega_s^2 > k^2 / omega0^2
        g_bad = on.build_explicit(1, 0.25, []).with_probe(1, 0.026, 0.1)
        with pytest.raises(StabilityError, match="unstable"):
            assemble_model(g_bad)
        g_ok = on.build_explicit(1, 0.25, []).with_probe(1, 0.024, 0.1)
        assemble_model(g_ok)

    def test_bilinear_convention_unstable_at_paper_parameters(self):
        g = on.build_linear_chain(16, [0.1, 0.05], 0.25).with_probe(8, 0.01, 0.58)
        with pytest.raises(StabilityError):
            assemble_model(g, bilinear_env=True)


class TestEvolveBare:
    def test_time_zero_is_identity(self, net1_model):
        assert np.allclose(evolve_bare(net1_model, 0.0), np.eye(34))

    def test_full_period_single_oscillator(self):
        # probe and node share omega and are uncoupled: one full period
        m = assemble_model(single_oscillator(0.25))
        S = evolve_bare(m, 2 * np.pi / 0.25)
        assert np.linalg.norm(S - np.eye(4)) < 1e-10

    def test_matches_matrix_exponential(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            g = random_stable_graph(rng)
            m = assemble_model(g)
            n = m.n_modes
            G = np.zeros((2 * n, 2 * n))
            G[:n, n:] = np.eye(n)
            G[n:, :n] = -m.V
            S_ref = expm(G * 37.0)
            assert np.linalg.norm(evolve_bare(m, 37.0) - S_ref) < 1e-8

    def test_negative_time_rejected(self, net1_model):
        with pytest.raises(ValueError):
            evolve_bare(net1_model, -1.0)

    def test_group_property(self, net1_model):
        s1 = evolve(net1_model, 13.0)
        s2 = evolve(net1_model, 29.0)
        s12 = evolve(net1_model, 42.0)
        assert np.linalg.norm(s1 @ s2 - s12) < 1e-9

    def test_energy_conservation(self, net1_model):
        rng = np.random.default_rng(3)
        mean = rng.normal(size=34)
        A = rng.normal(size=(34, 34)) * 0.1
        cov = 0.5 * np.eye(34) + A @ A.T
        e0 = quadratic_energy(net1_model, mean, cov, renormalized=False)
        for t in (5.0, 40.0, 333.0):
            S = evolve_bare(net1_model, t)
            e = quadratic_energy(net1_model, S @ mean, S @ cov @ S.T, renormalized=False)
            assert abs(e - e0) < 1e-8 * abs(e0)


class TestRenormalize:
    def test_free_oscillator_is_rotation(self):
        m = assemble_model(single_oscillator(0.4, k=0.0, omega0=0.3))
        t = 1.7
        S = evolve(m, t)
        th = 0.4 * t
        # probe block (indices 0 and 2 in q_S, q_1, p_S, p_1) rotates by omega*t
        block = S[np.ix_([0, 2], [0, 2])]
        assert np.allclose(
            block, [[np.cos(th), np.sin(th)], [-np.sin(th), np.cos(th)]], atol=1e-12
        )
        # and the off-diagonal probe-node blocks vanish
        assert np.allclose(S[np.ix_([0, 2], [1, 3])], 0.0, atol=1e-14)

    def test_preserves_symplecticity(self, net1_model):
        for t in (0.0, 17.0, 150.0):
            ok, res = is_symplectic(evolve(net1_model, t), 1e-10)
            assert ok, res

    def test_decoupled_model_keeps_vacuum(self):
        # no probe coupling, no internal edges: vacuum invariant under S-tilde
        g = on.build_explicit(3, [0.25, 0.4, 0.7], []).with_probe(1, 0.0, 0.33)
        m = assemble_model(g)
        S = evolve(m, 57.0)
        assert np.linalg.norm(S @ (0.5 * np.eye(8)) @ S.T - 0.5 * np.eye(8)) < 1e-10

    def test_dimension_mismatch_rejected(self, net1_model):
        with pytest.raises(ValueError):
            renormalize(np.eye(4), net1_model)


class TestPreparation:
    def test_no_squeezing_is_identity(self, net1_model):
        S = evolve(net1_model, 10.0)
        assert np.array_equal(compose_preparation(S, []), S)

    def test_probe_squeezer_at_time_zero(self):
        m = assemble_model(single_oscillator(0.3))
        r = 0.6
        S_eff = compose_preparation(evolve(m, 0.0), [(0, r, 0.0)])
        cov = S_eff @ (0.5 * np.eye(4)) @ S_eff.T
        probe = cov[np.ix_([0, 2], [0, 2])]
        assert np.allclose(np.diag(probe), [0.5 * np.exp(-2 * r), 0.5 * np.exp(2 * r)])
        assert abs(probe[0, 1]) < 1e-14

    def test_thermal_occupancy_identity(self):
        # sinh^2 r quanta per squeezed mode
        nbar_target = 2.7
        r = np.arcsinh(np.sqrt(nbar_target))
        S_in = preparation_matrix(1, [(0, r, 0.0)])
        cov = S_in @ (0.5 * np.eye(2)) @ S_in.T
        nbar = 0.5 * (cov[0, 0] + cov[1, 1] - 1.0)
        assert np.isclose(nbar, nbar_target, rtol=1e-12)

    def test_preparation_is_symplectic(self):
        S_in = preparation_matrix(3, [(0, 0.5, 0.3), (2, 1.0, np.pi / 2)])
        ok, _ = is_symplectic(S_in, 1e-12)
        assert ok


class TestProbeMask:
    def test_unit_vector_at_time_zero(self, net1_model):
        pair = probe_mask(evolve(net1_model, 0.0))
        eq = np.zeros(34)
        eq[0] = 1.0
        ep = np.zeros(34)
        ep[17] = 1.0
        assert np.allclose(np.abs(pair[0]), eq)
        assert np.allclose(np.abs(pair[1]), ep)

    def test_row_pair_normalization(self, net1_model):
        from oscnet.symplectic import symplectic_form

        pair = probe_mask(evolve(net1_model, 150.0))
        omega = symplectic_form(17)
        assert np.isclose(np.linalg.norm(pair[0]), 1.0, atol=1e-10)
        assert np.isclose(np.linalg.norm(pair[1]), 1.0, atol=1e-10)
        assert np.isclose(pair[0] @ omega @ pair[1], 1.0, atol=1e-10)

    def test_golden_regression_network1(self, net1_model, request):
        # regression-locked mask coefficients for (omega_s=0.58, t=150)
        golden = np.loadtxt(
            request.path.parent / "data" / "mask_net1_w0.58_t150.csv", delimiter=","
        )
        pair = probe_mask(evolve(net1_model, 150.0))
        got = np.column_stack([np.arange(1, 18), pair[0, :17], pair[0, 17:]])
        assert np.allclose(got, golden, atol=1e-12)


def test_symplecticity_over_networks(networks):
    for idx, graph in networks.items():
        m = on.assemble_model(graph)
        for t in (0.0, 3.0, 90.0):
            ok, res = is_symplectic(evolve(m, t), 1e-10)
            assert ok, f"network {idx} at t={t}: residual {res}"
