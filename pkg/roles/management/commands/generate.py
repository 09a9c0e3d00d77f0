from django.core.management.base import CommandError

from roles.gaussian import embed_matrix, floor_eigenvalues
from roles.model import Dims, DynParams, StaticParams
from roles.netio import PARAMS_FILE, TrajectoryExport, read_params, write_network, write_params, write_trajectories
from roles.sampling import (
    default_params,
    sample_dynamic_network,
    sample_scenario_network,
    sample_static_network,
    scenario_params,
)

from ._common import EXIT_USAGE, RoleCommand

NETWORK_FILES = {"edgelist": "network.tsv", "dense": "network.csv"}
TRUTH_FILE = "truth.csv"


class Command(RoleCommand):
    help = "Sample a static or dynamic network together with its true memberships."

    def add_command_arguments(self, parser):
        parser.add_argument("--out", required=True, help="Output directory.")
        parser.add_argument("--nodes", type=int, default=100)
        parser.add_argument("--roles", type=int, default=3)
        parser.add_argument("--times", type=int, default=1)
        parser.add_argument("--params", help="JSON parameter file (as written by fit).")
        parser.add_argument("--scenario", choices=["I", "II", "III"], help="Synthetic scenario preset.")
        parser.add_argument("--format", choices=sorted(NETWORK_FILES), default="edgelist")
        direction = parser.add_mutually_exclusive_group()
        direction.add_argument("--directed", dest="directed", action="store_true", default=None)
        direction.add_argument("--undirected", dest="directed", action="store_false")

    def run(self, options):
        cfg = self.run_config(options, directed=options["directed"], k=options["roles"])
        if options["params"] and options["scenario"]:
            raise CommandError("--params and --scenario are mutually exclusive", returncode=EXIT_USAGE)

        if options["scenario"]:
            if options["times"] != 1:
                raise CommandError("scenarios describe a single snapshot", returncode=EXIT_USAGE)
            net, truth = sample_scenario_network(
                options["scenario"], options["nodes"], seed=cfg.seed, k=cfg.k, directed=cfg.directed
            )
            params = scenario_summary(scenario_params(options["scenario"], cfg.k).b, truth)
        else:
            if options["params"]:
                params, _, _ = read_params(options["params"])
                n_times = params.n_times if isinstance(params, DynParams) else 1
            else:
                n_times = options["times"]
                params = default_params(cfg.k, n_times)
            dims = Dims(n_nodes=options["nodes"], n_roles=params.n_roles, n_times=n_times)
            if isinstance(params, DynParams):
                net, truth = sample_dynamic_network(params, dims, seed=cfg.seed, directed=cfg.directed)
            else:
                net, truth = sample_static_network(params, dims, seed=cfg.seed, directed=cfg.directed)

        out_dir = self.prepare_output(options["out"], cfg)
        network_path = out_dir / NETWORK_FILES[options["format"]]
        write_network(net, network_path, options["format"])
        truth_export = TrajectoryExport(pi=truth.pis, gamma=truth.gammas, sigma_tilde=None, params=params)
        write_trajectories(truth_export, out_dir / TRUTH_FILE)
        if isinstance(params, DynParams):
            params.mu_traj = truth.mu_traj
        write_params(params, out_dir / PARAMS_FILE)

        self.stdout.write(
            f"wrote {net.n_times} snapshot(s) of {net.n_nodes} nodes ({int(net.snapshots.sum())} edges) "
            f"to {network_path}"
        )


def scenario_summary(b, truth):
    """Scenario networks have no Gaussian prior; summarize the drawn role vectors instead."""
    gammas = truth.gammas[0][:, :-1]
    centered = gammas - gammas.mean(axis=0)
    spread = floor_eigenvalues(centered.T @ centered / gammas.shape[0], 1e-6)
    return StaticParams(mu=truth.mu_traj[0], sigma=embed_matrix(spread), b=b)
