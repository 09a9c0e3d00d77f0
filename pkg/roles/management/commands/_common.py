"""Pieces shared by the role-model management commands."""
import json
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from roles.config import RunConfig, read_config_file
from roles.exceptions import DataFormatError, NumericalError, RoleModelError
from roles.netio import FORMATS, read_network

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

CONFIG_FILE = "config.txt"


def exit_code_for(exc):
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(exc, (DataFormatError, OSError)):
        return EXIT_DATA
    return EXIT_USAGE


def write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=1, sort_keys=True) + "\n", encoding="utf-8")


class RoleCommand(BaseCommand):
    """Base command: common flags, RunConfig assembly and error mapping.

    Subclasses implement ``run(options)``; library errors leave as
    ``CommandError`` carrying the process exit code.
    """

    def add_arguments(self, parser):
        parser.add_argument("--seed", type=int, help="Seed for every random draw of the run.")
        parser.add_argument("--config", help="key=value file overriding the default settings.")
        parser.add_argument("--threads", type=int, help="Worker threads for random restarts.")
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def add_network_arguments(self, parser, required=True):
        parser.add_argument("--input", required=required, help="Network file to read.")
        parser.add_argument("--format", choices=FORMATS, default="edgelist")
        parser.add_argument(
            "--undirected",
            action="store_true",
            help="Treat a header-less dense file as undirected.",
        )

    def handle(self, *args, **options):
        try:
            self.run(options)
        except CommandError:
            raise
        except (RoleModelError, OSError) as exc:
            logger.debug("%s failed", self.__class__.__module__, exc_info=True)
            raise CommandError(str(exc), returncode=exit_code_for(exc)) from exc

    def run(self, options):
        raise NotImplementedError

    def run_config(self, options, **flags):
        """Settings defaults, then the --config file, then explicit flags."""
        overrides = {}
        if options.get("config"):
            overrides.update(read_config_file(options["config"]))
        flags.update(seed=options.get("seed"), threads=options.get("threads"))
        overrides.update({key: value for key, value in flags.items() if value is not None})
        return RunConfig.from_settings(**overrides)

    def load_network(self, options):
        return read_network(options["input"], options["format"], directed=not options["undirected"])

    def prepare_output(self, out_dir, cfg):
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        cfg.dump(out_dir / CONFIG_FILE)
        return out_dir
