import numpy as np
from django.test import SimpleTestCase

from roles.exceptions import InvalidArgumentError
from roles.gaussian import embed_matrix
from roles.model import Dims, DynParams, StaticParams
from roles.sampling import (
    default_params,
    sample_dynamic_network,
    sample_from_memberships,
    sample_scenario_network,
    sample_static_network,
    scenario_params,
)


def _static(b, k=3, scale=1.0):
    return StaticParams(mu=np.zeros(k), sigma=embed_matrix(scale * np.eye(k - 1)), b=b)


class StaticSamplerTests(SimpleTestCase):
    def test_all_ones_and_all_zeros(self):
        dims = Dims(n_nodes=8, n_roles=3)
        full, _ = sample_static_network(_static(np.ones((3, 3))), dims, seed=1)
        np.testing.assert_array_equal(full.snapshots[0], ~np.eye(8, dtype=bool))
        empty, _ = sample_static_network(_static(np.zeros((3, 3))), dims, seed=1)
        self.assertFalse(empty.snapshots.any())

    def test_deterministic_given_seed(self):
        dims = Dims(n_nodes=20, n_roles=3)
        params = _static(np.full((3, 3), 0.3))
        first, truth_a = sample_static_network(params, dims, seed=42)
        second, truth_b = sample_static_network(params, dims, seed=42)
        np.testing.assert_array_equal(first.snapshots, second.snapshots)
        np.testing.assert_array_equal(truth_a.gammas, truth_b.gammas)
        other, _ = sample_static_network(params, dims, seed=43)
        self.assertFalse(np.array_equal(first.snapshots, other.snapshots))

    def test_truth_shapes_and_pinned_roles(self):
        dims = Dims(n_nodes=6, n_roles=3)
        _, truth = sample_static_network(_static(np.full((3, 3), 0.5)), dims, seed=0)
        self.assertEqual(truth.gammas.shape, (1, 6, 3))
        np.testing.assert_array_equal(truth.gammas[..., -1], 0.0)
        np.testing.assert_allclose(truth.pis.sum(axis=-1), 1.0, atol=1e-12)
        self.assertTrue(np.all(np.diagonal(truth.z_to[0]) == -1))

    def test_undirected_is_symmetric(self):
        net, truth = sample_static_network(_static(np.full((3, 3), 0.4)), Dims(10, 3), seed=5, directed=False)
        self.assertFalse(net.directed)
        np.testing.assert_array_equal(net.snapshots[0], net.snapshots[0].T)
        np.testing.assert_array_equal(truth.z_to[0][np.tril_indices(10)], -1)
        self.assertTrue(np.all(truth.z_to[0][np.triu_indices(10, k=1)] >= 0))

    def test_mismatched_roles(self):
        with self.assertRaises(InvalidArgumentError):
            sample_static_network(_static(np.full((3, 3), 0.4)), Dims(10, 2), seed=5)


class MembershipSamplerTests(SimpleTestCase):
    def test_pure_membership_block_densities(self):
        n, k = 100, 2
        groups = np.arange(n) % k
        pi = np.eye(k)[groups]
        b = np.array([[0.9, 0.0], [0.0, 0.9]])
        adjacency, z_to, z_from = sample_from_memberships(pi, b, seed=11)
        same = (groups[:, None] == groups[None, :]) & ~np.eye(n, dtype=bool)
        cross = groups[:, None] != groups[None, :]
        within = adjacency[same].mean()
        self.assertLess(abs(within - 0.9), 0.02)
        self.assertLessEqual(adjacency[cross].mean(), 0.005)
        np.testing.assert_array_equal(z_to[~np.eye(n, dtype=bool)], np.repeat(groups, n - 1))

    def test_rejects_shape_mismatch(self):
        with self.assertRaises(InvalidArgumentError):
            sample_from_memberships(np.full((4, 3), 1 / 3), np.full((2, 2), 0.5))


class DynamicSamplerTests(SimpleTestCase):
    def _params(self, phi_scale, n_times=5, k=3):
        return DynParams(
            nu=np.zeros(k),
            phi=embed_matrix(phi_scale * np.eye(k - 1)),
            sigmas=np.tile(embed_matrix(np.eye(k - 1)), (n_times, 1, 1)),
            b=np.full((k, k), 0.3),
        )

    def test_zero_transition_noise_keeps_mean(self):
        params = self._params(0.0)
        net, truth = sample_dynamic_network(params, Dims(12, 3, 5), seed=3)
        self.assertEqual(net.n_times, 5)
        np.testing.assert_array_equal(truth.mu_traj, np.zeros((5, 3)))

    def test_random_walk_steps(self):
        params = self._params(0.25, n_times=2, k=2)
        steps = []
        for seed in range(3000):
            _, truth = sample_dynamic_network(params, Dims(2, 2, 2), seed=seed)
            steps.append(truth.mu_traj[1, 0] - truth.mu_traj[0, 0])
        # 3000 draws: the sample variance has standard error 0.25 * sqrt(2 / 3000) < 0.007
        self.assertLess(abs(np.var(steps) - 0.25), 0.025)

    def test_shapes_and_determinism(self):
        params = self._params(0.5, n_times=4)
        net_a, truth_a = sample_dynamic_network(params, Dims(9, 3, 4), seed=8)
        net_b, _ = sample_dynamic_network(params, Dims(9, 3, 4), seed=8)
        np.testing.assert_array_equal(net_a.snapshots, net_b.snapshots)
        self.assertEqual(truth_a.pis.shape, (4, 9, 3))
        self.assertEqual(truth_a.mu_traj.shape, (4, 3))

    def test_rejects_time_mismatch(self):
        with self.assertRaises(InvalidArgumentError):
            sample_dynamic_network(self._params(0.5, n_times=4), Dims(9, 3, 3), seed=8)

    def test_rejects_static_params(self):
        with self.assertRaisesMessage(InvalidArgumentError, "StaticParams"):
            sample_dynamic_network(default_params(2), Dims(9, 2, 1), seed=8)


class ScenarioTests(SimpleTestCase):
    def test_compatibility_matrices(self):
        np.testing.assert_allclose(np.diag(scenario_params("I").b), 0.8)
        np.testing.assert_allclose(scenario_params("I").b[0, 1], 0.02)
        self.assertAlmostEqual(scenario_params("II").b[0, 1], 0.30)
        self.assertAlmostEqual(scenario_params("III").b[1, 1], 0.4)
        with self.assertRaises(InvalidArgumentError):
            scenario_params("IV")

    def test_scenario_one_is_nearly_pure(self):
        net, truth = sample_scenario_network("I", 60, seed=2)
        self.assertEqual(net.n_nodes, 60)
        self.assertGreater(np.median(truth.pis[0].max(axis=1)), 0.9)

    def test_scenario_three_is_mixed(self):
        _, truth = sample_scenario_network("III", 60, seed=2)
        self.assertLess(np.median(truth.pis[0].max(axis=1)), 0.9)

    def test_default_params(self):
        static = default_params(3)
        self.assertIsInstance(static, StaticParams)
        static.validate()
        dynamic = default_params(3, n_times=4)
        self.assertIsInstance(dynamic, DynParams)
        dynamic.validate()
        self.assertEqual(dynamic.n_times, 4)
        default_params(1).validate()
