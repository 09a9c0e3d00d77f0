from roles.config import MODELS
from roles.dynamic import fit_dmmsb
from roles.exceptions import InvalidArgumentError
from roles.netio import TrajectoryExport, export_trajectories
from roles.static import fit_lnmmsb

from ._common import RoleCommand, write_json

REPORT_FILE = "report.json"


class Command(RoleCommand):
    help = "Fit the static or dynamic mixed-membership model to a network file."

    def add_command_arguments(self, parser):
        self.add_network_arguments(parser)
        parser.add_argument("--out", required=True, help="Output directory.")
        parser.add_argument("--model", choices=MODELS)
        parser.add_argument("--k", type=int, help="Number of roles.")
        parser.add_argument("--restarts", type=int, dest="n_restarts")
        parser.add_argument("--tol", type=float)

    def run(self, options):
        net = self.load_network(options)
        cfg = self.run_config(
            options,
            model=options["model"],
            k=options["k"],
            n_restarts=options["n_restarts"],
            tol=options["tol"],
            directed=net.directed,
        )
        if cfg.model == "static":
            if net.n_times != 1:
                raise InvalidArgumentError(
                    f"the static model fits one snapshot, got {net.n_times}; use --model dynamic"
                )
            fit = fit_lnmmsb(net, cfg.k, cfg, seed=cfg.seed)
        else:
            fit = fit_dmmsb(net, cfg.k, cfg, seed=cfg.seed)

        out_dir = self.prepare_output(options["out"], cfg)
        export_trajectories(TrajectoryExport.from_fit(fit), out_dir)
        report = fit.report.as_dict()
        report.update(model=cfg.model, k=cfg.k, n_nodes=net.n_nodes, n_times=net.n_times, seed=cfg.seed)
        write_json(out_dir / REPORT_FILE, report)

        state = "converged" if fit.report.converged else "did not converge"
        self.stdout.write(
            f"{cfg.model} fit with K={cfg.k} {state} after {fit.report.n_outer} outer iteration(s); "
            f"objective {fit.report.objective:.6f}; results in {out_dir}"
        )
