import warnings

import numpy as np
import pytest

from pseudomode import (
    DensityMatrix,
    EmbeddingSpec,
    FockTruncationWarning,
    IntegratorConfig,
    Lorentzian,
    Operator,
    TimeGrid,
    TruncationError,
    annihilation,
    build_embedding,
    choose_truncation,
    identity,
    kron,
    oscillator_system,
    simulate_lorentzian,
    tls_system,
    trace_distance,
    volterra_amplitude,
)

TIGHT = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12)
EXCITED = DensityMatrix.fock(2, 1)


def p_excited(states):
    return np.array([st.mat[1, 1].real for st in states])


class TestBuildEmbedding:
    def test_zero_coupling_leaves_system_hamiltonian(self):
        sys = tls_system(detuning=0.4)
        emb = build_embedding(EmbeddingSpec(sys, Lorentzian(g=0.0, omega0=0, gamma=1.0), 2), EXCITED)
        expected = kron(sys.H_S, identity(2))
        assert np.max(np.abs(emb.model.H.mat - expected.mat)) == 0.0

    def test_exchange_matrix_elements(self):
        sys = tls_system()
        emb = build_embedding(EmbeddingSpec(sys, Lorentzian(g=0.5, omega0=0, gamma=1.0), 3), EXCITED)
        h = emb.model.H.mat
        # product-basis index: system s, ancilla n -> s * d_A + n
        assert h[1 * 3 + 0, 0 * 3 + 1] == pytest.approx(0.5)  # <e,0|H|g,1>
        assert h[1 * 3 + 1, 0 * 3 + 2] == pytest.approx(0.5 * np.sqrt(2))  # <e,1|H|g,2>

    def test_single_damping_channel(self):
        gamma = 0.8
        emb = build_embedding(
            EmbeddingSpec(tls_system(), Lorentzian(g=1.0, omega0=0, gamma=gamma), 3), EXCITED
        )
        assert len(emb.model.jumps) == 1
        rate, op = emb.model.jumps[0]
        assert rate == pytest.approx(gamma)
        assert np.array_equal(op.mat, kron(identity(2), annihilation(3)).mat)

    def test_initial_state_is_system_times_vacuum(self):
        emb = build_embedding(
            EmbeddingSpec(tls_system(), Lorentzian(g=1.0, omega0=0, gamma=1.0), 3), EXCITED
        )
        expected = np.kron(EXCITED.mat, np.diag([1.0, 0.0, 0.0]))
        assert np.max(np.abs(emb.rho0.mat - expected)) == 0.0
        assert emb.factorization.dims == (2, 3)

    def test_dim_mismatch_rejected(self):
        with pytest.raises(ValueError):
            build_embedding(
                EmbeddingSpec(tls_system(), Lorentzian(g=1, omega0=0, gamma=1), 2),
                DensityMatrix.fock(3, 0),
            )

    def test_small_ancilla_rejected(self):
        with pytest.raises(ValueError):
            EmbeddingSpec(tls_system(), Lorentzian(g=1, omega0=0, gamma=1), 1)


class TestSimulateLorentzian:
    def test_decoupled_system_is_frozen(self):
        spec = EmbeddingSpec(tls_system(), Lorentzian(g=0.0, omega0=0, gamma=1.0), 2)
        states = simulate_lorentzian(spec, EXCITED, TimeGrid(0, 5, 6), TIGHT)
        for st in states:
            assert np.max(np.abs(st.mat - EXCITED.mat)) <= 1e-12

    def test_initial_instant_returns_input(self):
        spec = EmbeddingSpec(tls_system(), Lorentzian(g=1.0, omega0=0, gamma=0.5), 3)
        states = simulate_lorentzian(spec, EXCITED, TimeGrid(0, 1, 3), TIGHT)
        assert np.max(np.abs(states[0].mat - EXCITED.mat)) <= 1e-12

    def test_strong_coupling_rabi_minimum(self):
        bath = Lorentzian(g=1.0, omega0=0.0, gamma=0.2)
        grid = TimeGrid(0.0, 3.0, 301)
        states = simulate_lorentzian(EmbeddingSpec(tls_system(), bath, 3), EXCITED, grid, TIGHT)
        pe = p_excited(states)
        t_min = grid.times()[np.argmin(pe)]
        assert abs(t_min - np.pi / 2.0) < 0.1
        # cross-check the whole curve against the memory-kernel reference
        vol = volterra_amplitude(bath, grid, h=0.002)
        assert np.max(np.abs(pe - vol.p_excited)) < 1e-5

    def test_weak_coupling_matches_golden_rule_decay(self):
        g, gamma = 0.1, 10.0
        rate = 4 * g * g / gamma
        bath = Lorentzian(g=g, omega0=0.0, gamma=gamma)
        grid = TimeGrid(0.0, 2.0 / rate, 101)
        states = simulate_lorentzian(EmbeddingSpec(tls_system(), bath, 3), EXCITED, grid, TIGHT)
        pe = p_excited(states)
        ref = np.exp(-rate * grid.times())
        assert np.max(np.abs(pe - ref) / ref) < 0.02

    def test_states_pass_density_matrix_invariants(self):
        bath = Lorentzian(g=1.0, omega0=0.0, gamma=1.0)
        states = simulate_lorentzian(
            EmbeddingSpec(tls_system(), bath, 3), EXCITED, TimeGrid(0, 5, 21), TIGHT
        )
        for st in states:
            assert abs(st.op.trace() - 1.0) <= 1e-8
            assert np.linalg.eigvalsh(st.mat)[0] >= -1e-8

    def test_truncation_warning_fires_when_top_level_fills(self):
        spec = EmbeddingSpec(tls_system(), Lorentzian(g=1.0, omega0=0, gamma=0.2), 2)
        with pytest.warns(FockTruncationWarning):
            simulate_lorentzian(spec, EXCITED, TimeGrid(0, 2, 5), TIGHT)

    def test_no_warning_with_headroom(self):
        spec = EmbeddingSpec(tls_system(), Lorentzian(g=1.0, omega0=0, gamma=0.2), 3)
        with warnings.catch_warnings():
            warnings.simplefilter("error", FockTruncationWarning)
            simulate_lorentzian(spec, EXCITED, TimeGrid(0, 2, 5), TIGHT)


class TestAncillaCorrelationMechanism:
    def test_damped_ancilla_reproduces_bath_correlation(self):
        # the construction works because the damped ancilla's vacuum
        # correlation, times g^2 and the center-frequency phase, equals the
        # Lorentzian line's correlation function
        from pseudomode import LindbladModel, correlation_function, regression_correlator

        bath = Lorentzian(g=0.6, omega0=3.0, gamma=0.9)
        d_a = 4
        a = annihilation(d_a)
        zero = Operator(np.zeros((d_a, d_a)))
        ancilla = LindbladModel(dim=d_a, H=zero, jumps=((bath.gamma, a),))
        taus = TimeGrid(0.0, 6.0 / bath.gamma, 61)
        c = regression_correlator(ancilla, a, a.dagger(), DensityMatrix.fock(d_a, 0),
                                  taus, TIGHT)
        restored = bath.g**2 * c * np.exp(-1j * bath.omega0 * taus.times())
        expected = correlation_function(bath, taus.times())
        assert np.max(np.abs(restored - expected)) <= 1e-7 * bath.g**2


class TestChooseTruncation:
    CFG = IntegratorConfig(rel_tol=1e-9, abs_tol=1e-11)

    def test_single_excitation_needs_two_levels(self):
        d = choose_truncation(tls_system(), Lorentzian(g=1.0, omega0=0, gamma=0.5),
                              EXCITED, TimeGrid(0, 4, 9), self.CFG, tol=1e-7)
        assert d == 2

    def test_ground_state_needs_two_levels(self):
        d = choose_truncation(tls_system(), Lorentzian(g=1.0, omega0=0, gamma=0.5),
                              DensityMatrix.fock(2, 0), TimeGrid(0, 4, 9), self.CFG, tol=1e-7)
        assert d == 2

    def test_multi_quantum_initial_state_needs_more(self):
        sys = oscillator_system(4)
        d = choose_truncation(sys, Lorentzian(g=1.0, omega0=0, gamma=0.5),
                              DensityMatrix.fock(4, 2), TimeGrid(0, 3, 7), self.CFG, tol=1e-7)
        assert d >= 3

    def test_distances_shrink_monotonically(self):
        sys = oscillator_system(4)
        bath = Lorentzian(g=1.0, omega0=0, gamma=0.5)
        grid = TimeGrid(0, 3, 7)
        rho0 = DensityMatrix.fock(4, 2)

        def curve(d_a):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", FockTruncationWarning)
                return simulate_lorentzian(EmbeddingSpec(sys, bath, d_a), rho0, grid, self.CFG)

        dists = []
        prev = curve(2)
        for d_a in (4, 8, 16):
            nxt = curve(d_a)
            dists.append(max(trace_distance(a, b) for a, b in zip(prev, nxt)))
            prev = nxt
        # non-increasing until the integrator noise floor is reached
        noise_floor = 1e-8
        assert all(b <= a or b <= noise_floor for a, b in zip(dists, dists[1:]))
        assert dists[-1] <= noise_floor

    def test_unreachable_tolerance_raises(self):
        # consecutive truncations agree only to integrator roundoff; a
        # tolerance below that floor exhausts the doubling ladder
        with pytest.raises(TruncationError):
            choose_truncation(tls_system(), Lorentzian(g=1.0, omega0=0, gamma=0.5),
                              EXCITED, TimeGrid(0, 0.2, 2),
                              IntegratorConfig(rel_tol=1e-5, abs_tol=1e-8), tol=1e-12)
