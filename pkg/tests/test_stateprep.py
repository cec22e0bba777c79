import numpy as np
import pytest

from vqelast.ansatz import realize_unit, realize_vector
from vqelast.fem import Mesh1D, aux_vector
from vqelast.sv_core import simulate
from vqelast.stateprep import FitCache, FitFailure, basis_prep, fit_state, prepare_exact


class TestExactPrep:
    def test_random_vectors_machine_precision(self):
        rng = np.random.default_rng(0)
        for n in (1, 2, 3, 4):
            for _ in range(4):
                target = rng.normal(size=2**n)
                target /= np.linalg.norm(target)
                got = simulate(prepare_exact(target)).amplitudes
                np.testing.assert_allclose(got.real, target, atol=1e-13)
                assert np.max(np.abs(got.imag)) < 1e-15

    def test_signs_preserved(self):
        target = np.array([-0.5, 0.5, -0.5, 0.5])
        got = simulate(prepare_exact(target)).amplitudes.real
        np.testing.assert_allclose(got, target, atol=1e-14)

    def test_sparse_vector(self):
        target = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        got = simulate(prepare_exact(target)).amplitudes.real
        np.testing.assert_allclose(got, target, atol=1e-14)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            prepare_exact(np.zeros(4))

    def test_no_ancillas(self):
        assert prepare_exact(np.ones(8) / np.sqrt(8)).num_qubits == 3


class TestBasisPrep:
    def test_index_zero_is_empty_circuit(self):
        assert basis_prep(0, 3).ops == []

    def test_last_index(self):
        got = simulate(basis_prep(7, 3)).amplitudes
        assert abs(got[7]) == pytest.approx(1.0)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            basis_prep(8, 3)


class TestFitState:
    def test_basis_vector_exact(self):
        params = fit_state(np.eye(8)[0], 3, 2, seed=0)
        vec = realize_vector(params)
        assert np.linalg.norm(vec - np.eye(8)[0]) <= 1e-5

    def test_scale_is_target_norm(self):
        target = 0.42 * np.ones(8) / np.sqrt(8)
        params = fit_state(target, 3, 2, seed=0)
        assert params.scale == pytest.approx(np.linalg.norm(target), abs=1e-12)

    def test_uniform_vector(self):
        target = np.ones(8)
        params = fit_state(target, 3, 2, seed=1)
        assert np.linalg.norm(realize_vector(params) - target) <= 1e-5

    def test_mesh_coefficient_vector(self):
        mesh = Mesh1D.uniform(3, 1.0)
        target = aux_vector(mesh, "m2")
        params = fit_state(target, 3, 2, seed=2)
        assert np.linalg.norm(realize_vector(params) - target) <= 1e-5

    def test_refit_idempotent(self):
        rng = np.random.default_rng(3)
        target = np.cumsum(rng.uniform(-0.4, 0.4, 8))
        params = fit_state(target, 3, 2, seed=3)
        again = fit_state(realize_vector(params), 3, 2, seed=4)
        assert np.linalg.norm(realize_vector(again) - realize_vector(params)) <= 2e-5

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            fit_state(np.zeros(8), 3, 2)

    def test_failure_reports_best_residual(self):
        # impossible tolerance forces the failure path
        rng = np.random.default_rng(4)
        target = rng.normal(size=8)
        with pytest.raises(FitFailure) as err:
            fit_state(target, 3, 2, tol=1e-16, restarts=2, max_depth_raise=0, seed=0)
        assert err.value.residual > 0
        assert err.value.params is not None

    def test_cache_round_trip(self, tmp_path):
        cache = FitCache(str(tmp_path / "fits.json"))
        target = np.ones(8) / np.sqrt(8)
        first = fit_state(target, 3, 2, seed=5, cache=cache)
        second = fit_state(target, 3, 2, seed=999, cache=cache)  # seed ignored on hit
        np.testing.assert_allclose(first.angles, second.angles)

    def test_depth_raise_on_hard_target(self):
        # depth 1 is rank-deficient for generic targets; the fitter must
        # escalate the layer depth to reach them
        rng = np.random.default_rng(6)
        target = rng.normal(size=8)
        params = fit_state(target, 3, 1, seed=0, restarts=8)
        assert params.d > 1
        assert np.linalg.norm(realize_vector(params) - target) <= 1e-5
