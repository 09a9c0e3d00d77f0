import numpy as np
from django.test import SimpleTestCase, tag

from roles.config import RunConfig
from roles.dynamic import fit_dmmsb, infer_dmmsb, mstep_b_dynamic, mstep_dynamics
from roles.evaluation import aligned_error
from roles.exceptions import InvalidArgumentError
from roles.gaussian import active_matrix, embed_matrix, embed_vector, is_spd
from roles.kalman import kalman_filter, pseudo_observations, smooth_trajectory
from roles.model import Dims, DynParams, MembershipPosterior, StaticParams
from roles.rng import spawn
from roles.sampling import default_params, sample_dynamic_network
from roles.static import fit_independent_static, infer_lnmmsb, mstep_b_static


def quick_config(**overrides):
    values = dict(n_restarts=2, max_inner=30, max_outer=15, tol=1e-6, threads=1)
    values.update(overrides)
    return RunConfig(**values)


def small_sequence(n_times=3, n_nodes=12, seed=0):
    base = default_params(2, max(n_times, 2))
    params = DynParams(nu=base.nu, phi=base.phi, sigmas=base.sigmas[:n_times], b=base.b)
    return sample_dynamic_network(params, Dims(n_nodes, 2, n_times), seed=seed)


def fixed_params(net, phi_scale, k=2):
    return DynParams(
        nu=np.zeros(k),
        phi=embed_matrix(phi_scale * np.eye(k - 1)),
        sigmas=np.tile(embed_matrix(4.0 * np.eye(k - 1)), (net.n_times, 1, 1)),
        b=np.array([[0.8, 0.05], [0.05, 0.8]]),
    )


class MStepBTests(SimpleTestCase):
    def test_pooled_ratio(self):
        snapshots = np.zeros((2, 2, 2), dtype=bool)
        snapshots[0] = ~np.eye(2, dtype=bool)
        deltas = np.zeros((2, 2, 2, 2, 2))
        deltas[..., 0, 0] = 1.0
        b = mstep_b_dynamic(snapshots, deltas, ~np.eye(2, dtype=bool))
        self.assertAlmostEqual(b[0, 0], 0.5)

    def test_single_time_matches_static(self):
        rng = np.random.default_rng(0)
        adjacency = rng.random((5, 5)) < 0.5
        np.fill_diagonal(adjacency, False)
        raw = rng.random((5, 5, 2, 2))
        delta = raw / raw.sum(axis=(-2, -1), keepdims=True)
        mask = ~np.eye(5, dtype=bool)
        np.testing.assert_allclose(
            mstep_b_dynamic(adjacency[None], [delta], mask), mstep_b_static(adjacency, delta, mask)
        )

    def test_all_edges(self):
        snapshots = np.ones((3, 3, 3), dtype=bool) & ~np.eye(3, dtype=bool)
        deltas = np.full((3, 3, 3, 2, 2), 0.25)
        np.testing.assert_allclose(mstep_b_dynamic(snapshots, deltas, ~np.eye(3, dtype=bool)), 1.0)


class MStepDynamicsTests(SimpleTestCase):
    def setUp(self):
        self.trace = smooth_trajectory(
            embed_vector(np.array([[2.0], [2.0]])),
            np.zeros(2),
            embed_matrix(np.eye(1)),
            np.tile(embed_matrix(np.eye(1)), (2, 1, 1)),
            n_nodes=1,
        )
        self.posteriors = [
            MembershipPosterior(np.array([[1.0, 0.0], [1.4, 0.0]]), np.tile(embed_matrix([[0.1]]), (2, 1, 1))),
            MembershipPosterior(np.array([[1.6, 0.0], [1.6, 0.0]]), np.zeros((2, 2, 2))),
        ]

    def test_worked_example(self):
        nu, phi, sigmas = mstep_dynamics(self.trace, self.posteriors)
        self.assertAlmostEqual(phi[0, 0], 0.4**2 + 0.6 / 9, places=12)
        np.testing.assert_allclose(nu, [1.2, 0.0])
        self.assertAlmostEqual(sigmas[0, 0, 0], (0.04 + 0.04 + 0.2) / 2, places=12)
        # identical posteriors at x_{2|2} with no spread collapse to the floor
        self.assertAlmostEqual(sigmas[1, 0, 0], 1e-6, places=12)
        np.testing.assert_array_equal(phi[-1], 0.0)

    def test_fixed_transition_uses_residual(self):
        a = embed_matrix([[0.5]])
        _, phi, _ = mstep_dynamics(self.trace, self.posteriors, a=a)
        step = 1.6 - 0.5 * 1.2
        self.assertAlmostEqual(phi[0, 0], step**2 + 0.6 / 9, places=12)

    def test_single_time_keeps_phi(self):
        trace = smooth_trajectory(
            embed_vector(np.array([[2.0]])), np.zeros(2), embed_matrix(np.eye(1)), embed_matrix(np.eye(1))[None], 1
        )
        previous = embed_matrix([[3.0]])
        _, phi, _ = mstep_dynamics(trace, self.posteriors[:1], phi_previous=previous)
        np.testing.assert_array_equal(phi, previous)
        with self.assertRaises(InvalidArgumentError):
            mstep_dynamics(trace, self.posteriors[:1])

    def test_needs_smoothed_trace(self):
        trace = kalman_filter(
            embed_vector(np.array([[2.0]])), np.zeros(2), embed_matrix(np.eye(1)), embed_matrix(np.eye(1))[None], 1
        )
        with self.assertRaises(InvalidArgumentError):
            mstep_dynamics(trace, self.posteriors[:1])


class InferenceTests(SimpleTestCase):
    def test_single_time_is_one_measurement_update(self):
        net, _ = small_sequence(n_times=1)
        params = fixed_params(net, 2.0)
        result = infer_dmmsb(net, params, quick_config(), seed=1)
        y = pseudo_observations(np.stack([p.gamma_tilde for p in result.posteriors]))[0, 0]
        phi, r = 2.0, 4.0 / net.n_nodes
        expected = phi / (phi + r) * y
        self.assertAlmostEqual(params.mu_traj[0, 0], expected, places=10)
        self.assertEqual(params.mu_traj[0, -1], 0.0)

    def test_no_pooling_limit(self):
        net, _ = small_sequence()
        cfg = quick_config()
        params = fixed_params(net, 1e6)
        result = infer_dmmsb(net, params, cfg, seed=2)
        y = pseudo_observations(np.stack([p.gamma_tilde for p in result.posteriors]))
        np.testing.assert_allclose(params.mu_traj, y, atol=1e-2)

        # each snapshot alone: same starts, prior mean re-estimated as its own Y^(t)
        for t, child in enumerate(spawn(2, net.n_times)):
            mu, init = params.nu, None
            for _ in range(result.report.n_outer):
                single = infer_lnmmsb(
                    net.at(t), StaticParams(mu=mu, sigma=params.sigmas[t], b=params.b), cfg, seed=child, gamma_init=init
                )
                init = single.posterior.gamma_tilde
                mu = pseudo_observations(init[None])[0]
            np.testing.assert_allclose(mu, params.mu_traj[t], atol=1e-2)
            np.testing.assert_allclose(single.posterior.gamma_tilde, result.posteriors[t].gamma_tilde, atol=1e-2)
            np.testing.assert_allclose(single.posterior.pi, result.posteriors[t].pi, atol=1e-2)

    def test_full_pooling_limit(self):
        net, _ = small_sequence()
        params = fixed_params(net, 1e-12)
        infer_dmmsb(net, params, quick_config(), seed=3)
        spread = np.abs(params.mu_traj - params.mu_traj[0]).max()
        self.assertLess(spread, 1e-6)

    def test_report_and_normalization(self):
        net, _ = small_sequence()
        result = infer_dmmsb(net, fixed_params(net, 0.5), quick_config(), seed=4)
        self.assertEqual(len(result.posteriors), net.n_times)
        self.assertTrue(np.all(np.isfinite(result.report.objective_trace)))
        mask = net.mask()
        for delta in result.deltas:
            np.testing.assert_allclose(delta[mask].sum(axis=(-2, -1)), 1.0, atol=1e-12)
        self.assertTrue(result.trace.smoothed)

    def test_rejects_time_mismatch(self):
        net, _ = small_sequence()
        params = fixed_params(net.at(0), 0.5)
        with self.assertRaises(InvalidArgumentError):
            infer_dmmsb(net, params, quick_config())


class FitTests(SimpleTestCase):
    def test_fit_outputs_are_valid(self):
        net, _ = small_sequence()
        fit = fit_dmmsb(net, 2, quick_config(), seed=5)
        fit.params.validate()
        self.assertEqual(fit.params.sigmas.shape, (3, 2, 2))
        self.assertTrue(is_spd(active_matrix(fit.params.phi)))
        self.assertTrue(np.all(np.isfinite(fit.report.objective_trace)))
        np.testing.assert_allclose(fit.params.nu, embed_vector(fit.trace.x_smooth[0]))
        for p_filt, p_smooth in zip(fit.trace.p_filt, fit.trace.p_smooth):
            self.assertGreaterEqual(np.linalg.eigvalsh(p_filt - p_smooth).min(), -1e-8)

    def test_deterministic(self):
        net, _ = small_sequence()
        first = fit_dmmsb(net, 2, quick_config(), seed=6)
        second = fit_dmmsb(net, 2, quick_config(threads=2), seed=6)
        np.testing.assert_array_equal(first.params.b, second.params.b)
        np.testing.assert_array_equal(first.params.mu_traj, second.params.mu_traj)
        self.assertEqual(first.report.objective_trace, second.report.objective_trace)

    def test_single_time_point(self):
        net, _ = small_sequence(n_times=1)
        fit = fit_dmmsb(net, 2, quick_config(n_restarts=1), seed=7)
        self.assertEqual(fit.params.mu_traj.shape, (1, 2))
        np.testing.assert_allclose(fit.params.phi, embed_matrix(10.0 * np.eye(1)))

    def test_fixed_transition_is_kept(self):
        net, _ = small_sequence()
        a = embed_matrix(0.9 * np.eye(1))
        fit = fit_dmmsb(net, 2, quick_config(n_restarts=1), seed=8, a=a)
        np.testing.assert_array_equal(fit.params.a, a)

    def test_single_role(self):
        net, _ = small_sequence()
        fit = fit_dmmsb(net, 1, quick_config(n_restarts=1), seed=9)
        self.assertAlmostEqual(fit.params.b[0, 0], net.snapshots.sum() / net.n_dyads(), places=12)
        self.assertEqual(fit.params.mu_traj.shape, (3, 1))


@tag("slow")
class DynamicBeatsStaticTests(SimpleTestCase):
    def test_pooling_improves_recovery(self):
        cfg = RunConfig(n_restarts=3, threads=4)
        wins, improvements = 0, []
        for seed in range(5):
            net, truth = sample_dynamic_network(default_params(3, 10), Dims(100, 3, 10), seed=seed)
            dynamic = fit_dmmsb(net, 3, cfg, seed=seed)
            pi_dyn = np.stack([p.pi for p in dynamic.posteriors])
            dyn_error, _ = aligned_error(truth.pis, pi_dyn)
            static_errors = [
                aligned_error(truth.pis[t], fit.posterior.pi)[0]
                for t, fit in enumerate(fit_independent_static(net, 3, cfg, seed=seed))
            ]
            static_error = float(np.mean(static_errors))
            wins += dyn_error <= static_error
            improvements.append(1.0 - dyn_error / static_error)
        self.assertGreaterEqual(wins, 4, msg=f"relative improvements {improvements}")
