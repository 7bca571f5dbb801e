import math

import numpy as np
import pytest

from micromaser_fpe.fpe_engine import CavityConfig, noise_report
from micromaser_fpe.numerics import herm_propagator, kron, partial_trace
from micromaser_fpe.oracle import (
    InjectionCycle,
    OracleConfig,
    build_interaction,
    coherent_state,
    collective_op,
    fock_ladder,
    injection_cycle,
    steady_state,
)
from micromaser_fpe.pump_states import (
    CLONE_MIXTURE,
    PRODUCT_UPPER,
    Z_STATE,
    PumpState,
    build_density,
    initial_moments,
)
from micromaser_fpe.atom_dynamics import RabiField, polarization

RNG = np.random.default_rng(23)


def product_config(**kw):
    defaults = dict(pump=PumpState(family=PRODUCT_UPPER, n_atoms=1),
                    gT=0.3, CT=0.05, n_max=8)
    defaults.update(kw)
    return OracleConfig(**defaults)


class TestInteraction:
    def test_single_excitation_splitting(self):
        cfg = OracleConfig(pump=PumpState(family=PRODUCT_UPPER, n_atoms=1),
                           gT=0.7, CT=0.0, n_max=4)
        h = build_interaction(cfg)
        # the {|atom upper, 0 photons>, |atom lower, 1 photon>} block splits by +-g
        evals = np.linalg.eigvalsh(h)
        assert np.min(np.abs(evals - 0.7)) < 1e-12
        assert np.min(np.abs(evals + 0.7)) < 1e-12

    def test_hermitian(self):
        cfg = OracleConfig(pump=PumpState(family=PRODUCT_UPPER, n_atoms=2),
                           gT=0.4, CT=0.0, n_max=6)
        h = build_interaction(cfg)
        assert np.max(np.abs(h - h.conj().T)) < 1e-12

    def test_commutes_with_total_excitation(self):
        cfg = OracleConfig(pump=PumpState(family=PRODUCT_UPPER, n_atoms=2),
                           gT=0.4, CT=0.0, n_max=6)
        h = build_interaction(cfg)
        a, _ = fock_ladder(cfg.n_max)
        n_op = a.T @ a
        excitation = kron(collective_op(3, 2), np.eye(cfg.n_max + 1)) + kron(
            np.eye(4), n_op)
        comm = h @ excitation - excitation @ h
        assert np.max(np.abs(comm)) < 1e-12


class TestInjectionCycle:
    def test_free_decay(self):
        ct = 0.3
        cfg = OracleConfig(pump=PumpState(family=PRODUCT_UPPER, n_atoms=1),
                           gT=0.0, CT=ct, n_max=12)
        rho = np.outer(coherent_state(2.0, 12), coherent_state(2.0, 12).conj())
        n_op = np.diag(np.arange(13.0))
        before = np.trace(n_op @ rho).real
        after_rho = injection_cycle(rho, cfg)
        after = np.trace(n_op @ after_rho).real
        assert abs(after - before * math.exp(-ct)) < 1e-10

    def test_single_photon_emission_probability(self):
        gt = 0.45
        cfg = OracleConfig(pump=PumpState(family=PRODUCT_UPPER, n_atoms=1),
                           gT=gt, CT=0.0, n_max=4)
        vac = np.zeros((5, 5), dtype=complex)
        vac[0, 0] = 1.0
        out = injection_cycle(vac, cfg)
        assert abs(out[1, 1].real - math.sin(gt) ** 2) < 1e-12

    def test_balanced_mixture_gain_is_spontaneous_only(self):
        gt = 0.05
        cfg = OracleConfig(pump=PumpState(family=CLONE_MIXTURE, n_atoms=2, lambda1=0.5),
                           gT=gt, CT=0.0, n_max=6)
        vac = np.zeros((7, 7), dtype=complex)
        vac[0, 0] = 1.0
        out = injection_cycle(vac, cfg)
        gain = np.trace(np.diag(np.arange(7.0)) @ out).real
        # the semiclassical gain vanishes at zero inversion; only the
        # O((gT)^2) spontaneous remainder survives
        assert gain < 3 * 2 * gt**2

    def test_trace_preserved_on_random_state(self):
        cfg = OracleConfig(pump=PumpState(family=Z_STATE, n_atoms=2,
                                          alpha=0.6, beta=0.8, b=0),
                           gT=0.4, CT=0.07, n_max=10)
        m = RNG.normal(size=(11, 11)) + 1j * RNG.normal(size=(11, 11))
        rho = m @ m.conj().T
        rho /= np.trace(rho)
        out = injection_cycle(rho, cfg)
        assert abs(np.trace(out) - 1.0) < 1e-10
        assert np.linalg.eigvalsh(out).min() > -1e-8

    def test_excitation_conserved_without_decay(self):
        cfg = OracleConfig(pump=PumpState(family=PRODUCT_UPPER, n_atoms=2),
                           gT=0.6, CT=0.0, n_max=8)
        u = herm_propagator(build_interaction(cfg), 1.0)
        dim_f = cfg.n_max + 1
        rho_f = np.outer(coherent_state(1.2, cfg.n_max),
                         coherent_state(1.2, cfg.n_max).conj())
        full = kron(build_density(cfg.pump), rho_f)
        evolved = u @ full @ u.conj().T
        a, _ = fock_ladder(cfg.n_max)
        excitation = kron(collective_op(3, 2), np.eye(dim_f)) + kron(
            np.eye(4), a.T @ a)
        before = np.trace(excitation @ full).real
        after = np.trace(excitation @ evolved).real
        assert abs(before - after) < 1e-10

    def test_kraus_completeness(self):
        cfg = OracleConfig(pump=PumpState(family=Z_STATE, n_atoms=2,
                                          alpha=0.6, beta=0.8, b=1),
                           gT=0.5, CT=0.0, n_max=8)
        cyc = InjectionCycle(cfg)
        total = sum(k.conj().T @ k for k in cyc.kraus)
        assert np.max(np.abs(total - np.eye(cfg.n_max + 1))) < 1e-10


class TestSteadyState:
    def test_gain_off_decays_to_vacuum(self):
        cfg = OracleConfig(pump=PumpState(family=CLONE_MIXTURE, n_atoms=2, lambda1=0.0),
                           gT=0.3, CT=0.2, n_max=10, conv_tol=1e-10)
        res = steady_state(cfg, seed_intensity=2.0)
        assert res.converged
        assert res.mean_n < 1e-4
        assert abs(res.mandel) < 1e-3

    def test_matches_drift_prediction(self):
        # moderate stable operating point: the exact mean tracks the
        # semiclassical intensity to the expected O(1/I) accuracy
        pump = PumpState(family=PRODUCT_UPPER, n_atoms=2)
        i_target = 10.0
        b_angle = 2.5
        cav = CavityConfig(gT=b_angle / math.sqrt(i_target),
                           CT=2 * math.sin(b_angle) ** 2 / i_target, n_atoms=2)
        rep = noise_report(pump, cav)
        cfg = OracleConfig(pump=pump, gT=cav.gT, CT=cav.CT, n_max=80,
                           conv_tol=1e-9)
        res = steady_state(cfg, seed_intensity=rep.i_ss)
        assert res.converged
        assert res.truncation_weight < 1e-6
        assert abs(res.mean_n - rep.i_ss) / rep.i_ss < 0.15

    def test_truncation_stability(self):
        pump = PumpState(family=PRODUCT_UPPER, n_atoms=2)
        cav = CavityConfig(gT=2.5 / math.sqrt(10.0),
                           CT=2 * math.sin(2.5) ** 2 / 10.0, n_atoms=2)
        rep = noise_report(pump, cav)
        res_inner = steady_state(OracleConfig(pump=pump, gT=cav.gT, CT=cav.CT,
                                              n_max=80, conv_tol=1e-9),
                                 seed_intensity=rep.i_ss)
        res_wider = steady_state(OracleConfig(pump=pump, gT=cav.gT, CT=cav.CT,
                                              n_max=100, conv_tol=1e-9),
                                 seed_intensity=rep.i_ss)
        assert abs(res_wider.mean_n - res_inner.mean_n) / res_inner.mean_n < 5e-3

    def test_atom_cap(self):
        with pytest.raises(ValueError):
            OracleConfig(pump=PumpState(family=PRODUCT_UPPER, n_atoms=4),
                         gT=0.1, CT=0.01, n_max=8)


class TestClassicalFieldConsistency:
    def test_polarization_against_large_coherent_field(self):
        mean_n = 120.0
        n_max = 220
        pump = PumpState(family=Z_STATE, n_atoms=2, alpha=0.6, beta=0.8, b=1)
        gt = 0.04
        cfg = OracleConfig(pump=pump, gT=gt, CT=0.0, n_max=n_max)
        u = herm_propagator(build_interaction(cfg), 1.0)
        alpha = math.sqrt(mean_n)
        v = coherent_state(alpha, n_max)
        full = kron(build_density(pump), np.outer(v, v.conj()))
        evolved = u @ full @ u.conj().T
        f_atoms = partial_trace(evolved, [4, n_max + 1], keep=[0])
        f1 = partial_trace(f_atoms, [2, 2], keep=[0])
        got = f1[1, 0]  # <s_01> = Tr(|0><1| f1)
        expected = polarization(initial_moments(pump),
                                RabiField(amplitude=alpha, g=gt), 1.0)
        assert abs(got - expected) < 3.0 / math.sqrt(mean_n)
