import numpy as np
import pytest
from scipy import stats

from conftest import equal_up_to_phase
from localsearch import simulator
from localsearch.algorithms import build_circuit, efficient_sequence, grover_sequence, run_steps
from localsearch.analytic import evolve
from localsearch.circuit import Circuit, Gate, build_global_diffusion, build_local_diffusion, build_oracle, lower
from localsearch.simulator import (
    Histogram,
    NoiseModel,
    ResourceCapExceeded,
    SimulationError,
    StateVector,
    apply_global_diffusion_fast,
    apply_local_diffusion_fast,
    apply_oracle_fast,
    run,
    run_noisy,
    sample,
)


def hadamards(n):
    return Circuit(n, tuple(Gate("H", (q,)) for q in range(n)))


class TestStateVector:
    def test_rejects_unnormalized(self):
        with pytest.raises(SimulationError):
            StateVector(1, [1, 1])

    def test_rejects_wrong_length(self):
        with pytest.raises(SimulationError):
            StateVector(2, [1, 0])

    def test_json_roundtrip(self, rng):
        psi = StateVector.random(3, rng)
        again = StateVector.from_json(psi.to_json())
        np.testing.assert_allclose(again.amplitudes, psi.amplitudes)

    def test_cap(self, monkeypatch):
        monkeypatch.setenv("LOCALSEARCH_MAX_QUBITS", "3")
        with pytest.raises(ResourceCapExceeded):
            StateVector.zero(4)


class TestRun:
    def test_hadamard_layer_gives_uniform(self):
        out = run(hadamards(4))
        np.testing.assert_allclose(out.amplitudes, np.full(16, 0.25), atol=1e-12)

    def test_empty_circuit_is_identity(self, rng):
        psi = StateVector.random(3, rng)
        np.testing.assert_allclose(run(Circuit(3), psi).amplitudes, psi.amplitudes)

    def test_width_mismatch(self):
        with pytest.raises(SimulationError):
            run(Circuit(3), StateVector.zero(2))

    def test_grover_four_qubits(self):
        circ = build_circuit(4, grover_sequence(4, 3), ["1100"])
        assert run(circ).probability("1100") == pytest.approx(0.961, abs=1e-3)
        assert run(lower(circ)).probability("1100") == pytest.approx(0.961, abs=1e-3)

    def test_cnot_and_swap(self):
        bell = run(Circuit(2, (Gate("H", (0,)), Gate("CNOT", (0, 1)))))
        np.testing.assert_allclose(bell.probabilities(), [0.5, 0, 0, 0.5], atol=1e-12)
        swapped = run(Circuit(2, (Gate("SWAP", (0, 1)),)), StateVector.basis(2, "10"))
        assert swapped.probability("01") == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [2, 5, 8, 10])
    def test_norm_preserved_on_random_circuits(self, n, rng):
        kinds = ["H", "X", "Z", "P", "CNOT", "CZ", "SWAP", "MCZ"]
        psi = StateVector.random(n, rng)
        for _ in range(40):
            kind = kinds[rng.integers(len(kinds))]
            arity = {"CNOT": 2, "CZ": 2, "SWAP": 2, "MCZ": min(n, 3)}.get(kind, 1)
            ops = tuple(int(q) for q in rng.choice(n, size=arity, replace=False))
            gate = Gate(kind, ops, angle=float(rng.uniform(0, 6)))
            psi = run(Circuit(n, (gate,)), psi)
            assert np.linalg.norm(psi.amplitudes) == pytest.approx(1.0, abs=1e-9)


class TestFastPaths:
    def test_oracle_negates_target(self):
        out = apply_oracle_fast(StateVector.uniform(4), ["0001"]).amplitudes
        assert out[1] == pytest.approx(-0.25)
        assert np.all(np.delete(out, 1) == 0.25)

    def test_full_subset_is_global(self, rng):
        psi = StateVector.random(4, rng)
        a = apply_local_diffusion_fast(psi, range(4)).amplitudes
        b = apply_global_diffusion_fast(psi).amplitudes
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_matches_gate_circuits(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 6))
            width = int(rng.integers(1, n + 1))
            subset = tuple(int(q) for q in rng.choice(n, size=width, replace=False))
            target = "".join(rng.choice(["0", "1"], size=n))
            psi = StateVector.random(n, rng)
            slow = run(build_oracle(n, [target]) + build_local_diffusion(n, subset), psi).amplitudes
            fast = apply_local_diffusion_fast(apply_oracle_fast(psi, [target]), subset).amplitudes
            assert equal_up_to_phase(slow, fast, atol=1e-10)

    def test_efficient_matches_analytic_n10(self):
        steps = efficient_sequence(10, 5, 1, 1, 26)
        p = run_steps(10, steps, ["1" * 10]).probability("1" * 10)
        assert p == pytest.approx(evolve(10, 5, 1, 1, 26)[-1], abs=1e-9)


class TestSampling:
    def test_basis_state(self):
        h = sample(StateVector.zero(1), 100, seed=0)
        assert h.counts == {"0": 100}

    def test_uniform_within_five_sigma(self):
        h = sample(StateVector.uniform(2), 8192, seed=3)
        sigma = np.sqrt(8192 * 0.25 * 0.75)
        for bits in ("00", "01", "10", "11"):
            assert abs(h.get(bits) - 2048) < 5 * sigma

    def test_grover_frequency(self):
        state = run_steps(4, grover_sequence(4, 3), ["1100"])
        h = sample(state, 8192, seed=11)
        assert h.frequency("1100") == pytest.approx(0.961, abs=0.01)

    def test_seeded_determinism(self, rng):
        psi = StateVector.random(4, rng)
        assert sample(psi, 500, seed=9) == sample(psi, 500, seed=9)

    def test_rejects_zero_shots(self):
        with pytest.raises(SimulationError):
            sample(StateVector.zero(1), 0)


class TestHistogram:
    def test_csv_roundtrip(self):
        h = Histogram({"01": 3, "10": 5}, 8)
        text = h.to_csv()
        assert text.splitlines()[:2] == ["#shots=8", "bitstring,count"]
        assert Histogram.from_csv(text) == h

    def test_counts_must_sum(self):
        with pytest.raises(SimulationError):
            Histogram({"0": 3}, 4)


class TestNoise:
    @pytest.mark.parametrize("kwargs", [{"p1": -0.1}, {"p2": 1.5}, {"readout_flip": 2}])
    def test_validation(self, kwargs):
        with pytest.raises(SimulationError):
            NoiseModel(**kwargs)

    def test_zero_noise_matches_ideal(self):
        circ = lower(build_circuit(4, efficient_sequence(4, 2, tail="extra-first-local"), ["1100"]))
        ideal = run(circ).probabilities()
        shots = 8192
        h = run_noisy(circ, NoiseModel(), shots, seed=5)
        observed = np.array([h.get(format(i, "04b")) for i in range(16)])
        keep = ideal > 1e-12
        assert observed[~keep].sum() == 0
        _, p = stats.chisquare(observed[keep], ideal[keep] / ideal[keep].sum() * shots)
        assert p > 0.001

    def test_full_depolarization_is_near_uniform(self):
        circ = lower(build_circuit(4, grover_sequence(4, 2), ["1100"]))
        h = run_noisy(circ, NoiseModel(p2=1.0), 8192, seed=2)
        freq = np.array([h.frequency(format(i, "04b")) for i in range(16)])
        assert 0.5 * np.abs(freq - 1 / 16).sum() < 0.1

    def test_readout_flip_everything(self):
        h = run_noisy(Circuit(3), NoiseModel(readout_flip=1.0), 64, seed=0)
        assert h.counts == {"111": 64}

    def test_deterministic_under_seed(self):
        circ = lower(build_circuit(4, grover_sequence(4, 1), ["0110"]))
        noise = NoiseModel(0.01, 0.05, 0.01)
        assert run_noisy(circ, noise, 300, seed=4) == run_noisy(circ, noise, 300, seed=4)

    def test_batches_do_not_change_totals(self):
        circ = lower(build_circuit(3, grover_sequence(3, 1), ["101"]))
        h = run_noisy(circ, NoiseModel(0.01, 0.02), 1000, seed=1, batch=128)
        assert h.shots == 1000

    def test_unlowered_noisy_circuit_rejected(self):
        circ = build_circuit(4, grover_sequence(4, 1), ["0110"])
        with pytest.raises(SimulationError):
            run_noisy(circ, NoiseModel(p2=0.01), 10, seed=0)

    def test_efficient_beats_grover_under_noise(self):
        noise = NoiseModel(p1=0.001, p2=0.01)
        g = lower(build_circuit(4, grover_sequence(4, 3), ["1100"]))
        e = lower(build_circuit(4, efficient_sequence(4, 2, tail="extra-first-local"), ["1100"]))
        pg = run_noisy(g, noise, 8192, seed=7).frequency("1100")
        pe = run_noisy(e, noise, 8192, seed=7).frequency("1100")
        assert pe > pg
