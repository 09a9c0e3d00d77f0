"""``cli_main``: run one role-model subcommand and return its exit code.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""
import os
import sys

import django
from django.core.management import call_command
from django.core.management.base import CommandError

COMMANDS = ("generate", "fit", "evaluate", "select", "export")

USAGE = "usage: roles {" + ",".join(COMMANDS) + "} [options]\n"


def cli_main(argv=None, stdout=None, stderr=None):
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "rolenet.settings")
    django.setup()
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr

    if not argv:
        stderr.write(USAGE)
        return 1
    if argv[0] in {"-h", "--help"}:
        stdout.write(USAGE)
        return 0
    name, args = argv[0], argv[1:]
    if name not in COMMANDS:
        stderr.write(f"unknown command {name!r}\n{USAGE}")
        return 1
    try:
        call_command(name, *args, stdout=stdout, stderr=stderr)
    except CommandError as exc:
        stderr.write(f"error: {exc}\n")
        return exc.returncode
    except SystemExit as exc:
        # argparse exits after --help
        return exc.code if isinstance(exc.code, int) else 1
    return 0
