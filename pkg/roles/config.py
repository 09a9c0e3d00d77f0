import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path

from django.conf import settings

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

MODELS = ("static", "dynamic")


def _parse_bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in {"1", "true", "yes", "on"}:
        return True
    if text in {"0", "false", "no", "off"}:
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def parse_k_range(value):
    """Parse ``"1..5"``, ``"2,3,4"`` or ``"3"`` into a tuple of role counts."""
    if isinstance(value, (tuple, list)):
        ks = tuple(int(k) for k in value)
    else:
        text = str(value).strip()
        try:
            if ".." in text:
                lo, hi = text.split("..", 1)
                ks = tuple(range(int(lo), int(hi) + 1))
            else:
                ks = tuple(int(part) for part in text.split(",") if part.strip())
        except ValueError as exc:
            raise ConfigError(f"bad k range {value!r}") from exc
    if not ks:
        raise ConfigError(f"empty k range {value!r}")
    return ks


@dataclass(frozen=True)
class RunConfig:
    """Effective settings of one run; serialized next to every output."""

    k: int = 3
    k_range: tuple = (1, 2, 3, 4, 5)
    n_restarts: int = 5
    tol: float = 1e-6
    max_inner: int = 200
    max_outer: int = 100
    jitter: float = 1e-8
    seed: int = 0
    directed: bool = True
    model: str = "static"
    is_samples: int = 1000
    threads: int = 1

    _converters = {
        "k": int,
        "k_range": parse_k_range,
        "n_restarts": int,
        "tol": float,
        "max_inner": int,
        "max_outer": int,
        "jitter": float,
        "seed": int,
        "directed": _parse_bool,
        "model": str,
        "is_samples": int,
        "threads": int,
    }

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        for name in ("k", "n_restarts", "max_inner", "max_outer", "is_samples", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if any(k < 1 for k in self.k_range):
            raise ConfigError(f"role counts must be >= 1, got {self.k_range}")
        if self.jitter < 0:
            raise ConfigError(f"jitter must be >= 0, got {self.jitter}")
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")

    @classmethod
    def from_settings(cls, **overrides):
        defaults = getattr(settings, "ROLENET", {})
        values = {
            "n_restarts": defaults.get("N_RESTARTS", cls.n_restarts),
            "tol": defaults.get("TOL", cls.tol),
            "max_inner": defaults.get("MAX_INNER", cls.max_inner),
            "max_outer": defaults.get("MAX_OUTER", cls.max_outer),
            "jitter": defaults.get("JITTER", cls.jitter),
            "is_samples": defaults.get("IS_SAMPLES", cls.is_samples),
            "threads": max(1, defaults.get("THREADS", cls.threads)),
        }
        return cls(**values).with_overrides(overrides)

    def with_overrides(self, overrides):
        """Return a copy with ``overrides`` applied; ``None`` values are ignored."""
        changes = {}
        for key, value in overrides.items():
            if value is None:
                continue
            key = key.replace("-", "_")
            if key not in self._converters:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                changes[key] = self._converters[key](value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
        return dataclasses.replace(self, **changes)

    def as_lines(self):
        lines = []
        for field in sorted(f.name for f in dataclasses.fields(self)):
            value = getattr(self, field)
            if field == "k_range":
                value = ",".join(str(k) for k in value)
            elif isinstance(value, bool):
                value = int(value)
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{field}={value}")
        return lines

    def dump(self, path):
        Path(path).write_text("\n".join(self.as_lines()) + "\n", encoding="utf-8")


def read_config_file(path):
    """Read a key=value file; blank lines and ``#`` comments are skipped."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    logger.debug("read %d config keys from %s", len(values), path)
    return values
