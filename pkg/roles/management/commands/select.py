import math

from roles.config import MODELS
from roles.evaluation import select_roles

from ._common import RoleCommand, write_json

SELECTION_FILE = "selection.json"


class Command(RoleCommand):
    help = "Choose the number of roles by BIC over a range of K."

    def add_command_arguments(self, parser):
        self.add_network_arguments(parser)
        parser.add_argument("--k-range", dest="k_range", help='Role counts, e.g. "1..5" or "2,3,4".')
        parser.add_argument("--model", choices=MODELS)
        parser.add_argument("--is-samples", type=int, dest="is_samples")
        parser.add_argument("--out", help="Directory for selection.json and config.txt.")

    def run(self, options):
        net = self.load_network(options)
        cfg = self.run_config(
            options,
            k_range=options["k_range"],
            model=options["model"],
            is_samples=options["is_samples"],
            directed=net.directed,
        )
        best_k, scores = select_roles(net, cfg.k_range, cfg, seed=cfg.seed)

        rows = []
        for k in cfg.k_range:
            score = scores[k]
            if score.failed:
                self.stdout.write(f"K={k} failed: {score.error}")
            else:
                self.stdout.write(
                    f"K={k} loglik={score.loglik:.6f} se={score.loglik_se:.6f} "
                    f"n_params={score.n_params} bic={score.bic:.6f}"
                )
            rows.append(
                {
                    "k": k,
                    "loglik": None if math.isnan(score.loglik) else score.loglik,
                    "loglik_se": None if math.isnan(score.loglik_se) else score.loglik_se,
                    "n_params": score.n_params,
                    "bic": None if math.isnan(score.bic) else score.bic,
                    "error": score.error,
                }
            )
        self.stdout.write(f"best_k={best_k}")

        if options["out"]:
            out_dir = self.prepare_output(options["out"], cfg)
            write_json(out_dir / SELECTION_FILE, {"best_k": best_k, "scores": rows})
