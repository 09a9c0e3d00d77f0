from pathlib import Path

from django.core.management.base import CommandError

from roles.evaluation import (
    aligned_error,
    large_error_fraction,
    loglik_importance,
    loglik_importance_dynamic,
    membership_error,
)
from roles.exceptions import DataFormatError
from roles.model import DynParams
from roles.netio import PARAMS_FILE, TRAJECTORY_FILE, read_params, read_trajectories

from ._common import EXIT_USAGE, RoleCommand, write_json

EVALUATION_FILE = "evaluation.json"


class Command(RoleCommand):
    help = "Compare fitted memberships with the truth and estimate the log-likelihood."

    def add_command_arguments(self, parser):
        parser.add_argument("--fit", required=True, help="Directory written by the fit command.")
        parser.add_argument("--truth", help="Trajectory CSV with the true memberships.")
        self.add_network_arguments(parser, required=False)
        parser.add_argument("--is-samples", type=int, dest="is_samples")
        parser.add_argument("--threshold", type=float, default=0.2, help="l1 cut-off for large errors.")
        parser.add_argument("--out", help="Directory for evaluation.json and config.txt.")

    def run(self, options):
        if not (options["truth"] or options["input"]):
            raise CommandError("nothing to evaluate: pass --truth and/or --input", returncode=EXIT_USAGE)
        cfg = self.run_config(options, is_samples=options["is_samples"])
        fit_dir = Path(options["fit"])
        result = {}

        if options["truth"]:
            pi_true, _ = read_trajectories(options["truth"])
            pi_est, _ = read_trajectories(fit_dir / TRAJECTORY_FILE)
            l2, alignment = aligned_error(pi_true, pi_est, "l2")
            aligned = alignment.apply(pi_est)
            l1 = membership_error(pi_true, aligned, "l1")
            result.update(
                l1_error=l1,
                l2_error=l2,
                large_error_fraction=large_error_fraction(pi_true, aligned, options["threshold"]),
                alignment=list(alignment.perm),
            )
            self.stdout.write(f"l1_error={l1:.6f}")
            self.stdout.write(f"l2_error={l2:.6f}")
            self.stdout.write(f"large_error_fraction={result['large_error_fraction']:.6f}")
            self.stdout.write("alignment=" + ",".join(str(k) for k in alignment.perm))

        if options["input"]:
            net = self.load_network(options)
            params, posteriors, _ = read_params(fit_dir / PARAMS_FILE)
            if posteriors is None:
                raise DataFormatError("params file carries no posterior", fit_dir / PARAMS_FILE)
            if isinstance(params, DynParams):
                loglik, se = loglik_importance_dynamic(net, params, posteriors, cfg.is_samples, cfg.seed)
            else:
                loglik, se = loglik_importance(net, params, posteriors[0], cfg.is_samples, cfg.seed)
            result.update(loglik=loglik, loglik_se=se)
            self.stdout.write(f"loglik={loglik:.6f} se={se:.6f}")

        if options["out"]:
            out_dir = self.prepare_output(options["out"], cfg)
            write_json(out_dir / EVALUATION_FILE, result)
