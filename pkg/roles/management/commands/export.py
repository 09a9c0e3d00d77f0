from pathlib import Path

from roles.exceptions import DataFormatError
from roles.netio import PARAMS_FILE, TrajectoryExport, export_trajectories, read_params

from ._common import RoleCommand


class Command(RoleCommand):
    help = "Write membership trajectories and dominant roles from a fitted params file."

    def add_command_arguments(self, parser):
        parser.add_argument("--fit", required=True, help="Fit directory or params.json path.")
        parser.add_argument("--out", required=True, help="Output directory.")

    def run(self, options):
        cfg = self.run_config(options)
        source = Path(options["fit"])
        if source.is_dir():
            source = source / PARAMS_FILE
        params, posteriors, _ = read_params(source)
        if posteriors is None:
            raise DataFormatError("params file carries no posterior to export", source)
        out_dir = self.prepare_output(options["out"], cfg)
        export = TrajectoryExport.from_posteriors(params, posteriors)
        export_trajectories(export, out_dir)
        n_times, n_nodes, k = export.pi.shape
        self.stdout.write(f"exported T={n_times} N={n_nodes} K={k} to {out_dir}")
