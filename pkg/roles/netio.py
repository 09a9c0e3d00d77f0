"""Text formats: networks, trajectory exports and parameter files.

Edge lists hold a header ``#nodes=N #times=T directed={0,1}`` followed by
``t<TAB>i<TAB>j`` lines; time points are 1-based, node ids 0-based and
absent pairs are non-edges. Dense files hold one comma-separated N x N block
per time point with a blank line between blocks, optionally preceded by the
same header. Trajectory CSVs have columns ``t,node,role,pi,gamma`` with
0-based roles.
"""
import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DataFormatError
from .model import DynParams, MembershipPosterior, NetSeq, StaticParams, dominant_roles, logistic_transform

logger = logging.getLogger(__name__)

FORMATS = ("edgelist", "dense")
FLOAT_FORMAT = "{:.10g}"

TRAJECTORY_FILE = "trajectories.csv"
DOMINANT_FILE = "dominant_roles.csv"
PARAMS_FILE = "params.json"


def _parse_header(line, path, line_no):
    fields = {}
    for token in line.split():
        token = token.lstrip("#")
        if not token:
            continue
        if "=" not in token:
            raise DataFormatError(f"bad header token {token!r}", path, line_no)
        key, value = token.split("=", 1)
        fields[key] = value
    try:
        n_nodes = int(fields["nodes"])
        n_times = int(fields["times"])
        directed = fields.get("directed", "1")
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"header needs integer nodes= and times=: {line!r}", path, line_no) from exc
    if directed not in {"0", "1"}:
        raise DataFormatError(f"directed must be 0 or 1, got {directed!r}", path, line_no)
    if n_nodes < 2 or n_times < 1:
        raise DataFormatError(f"bad dimensions nodes={n_nodes} times={n_times}", path, line_no)
    return n_nodes, n_times, directed == "1"


def _header_line(net):
    return f"#nodes={net.n_nodes} #times={net.n_times} directed={int(net.directed)}"


def _read_lines(path):
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataFormatError(f"cannot read network file: {exc}", path) from exc
    except UnicodeDecodeError as exc:
        raise DataFormatError("network file is not UTF-8", path) from exc


def _read_edgelist(path):
    lines = _read_lines(path)
    header = None
    snapshots = None
    seen = set()
    duplicates = 0
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if header is None:
            if not line.startswith("#"):
                raise DataFormatError("missing '#nodes=N #times=T directed=d' header", path, line_no)
            header = _parse_header(line, path, line_no)
            n_nodes, n_times, directed = header
            snapshots = np.zeros((n_times, n_nodes, n_nodes), dtype=bool)
            continue
        if line.startswith("#"):
            continue
        parts = raw.rstrip("\r\n").split("\t")
        if len(parts) != 3:
            raise DataFormatError(f"expected 't<TAB>i<TAB>j', got {raw!r}", path, line_no)
        try:
            t, i, j = (int(part) for part in parts)
        except ValueError as exc:
            raise DataFormatError(f"non-integer field in {raw!r}", path, line_no) from exc
        if not 1 <= t <= n_times:
            raise DataFormatError(f"time {t} outside 1..{n_times}", path, line_no)
        if not (0 <= i < n_nodes and 0 <= j < n_nodes):
            raise DataFormatError(f"node id outside 0..{n_nodes - 1}", path, line_no)
        if i == j:
            raise DataFormatError(f"self-loop on node {i}", path, line_no)
        key = (t, i, j) if directed else (t, min(i, j), max(i, j))
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        snapshots[t - 1, i, j] = True
        if not directed:
            snapshots[t - 1, j, i] = True
    if header is None:
        raise DataFormatError("missing '#nodes=N #times=T directed=d' header", path)
    if duplicates:
        logger.warning("%s: dropped %d duplicate edge line(s)", path, duplicates)
    return NetSeq(snapshots, directed=header[2])


def _read_dense(path, directed=True):
    """Header-less files take ``directed`` from the caller."""
    lines = _read_lines(path)
    header = None
    blocks, current = [], []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if line.startswith("#"):
            if header is None and not blocks and not current:
                header = _parse_header(line, path, line_no)
            continue
        if not line:
            if current:
                blocks.append(current)
                current = []
            continue
        try:
            row = [int(value) for value in line.split(",")]
        except ValueError as exc:
            raise DataFormatError(f"non-integer value in {line!r}", path, line_no) from exc
        if any(value not in (0, 1) for value in row):
            raise DataFormatError("dense values must be 0 or 1", path, line_no)
        current.append((line_no, row))
    if current:
        blocks.append(current)
    if not blocks:
        raise DataFormatError("no adjacency blocks found", path)

    n_nodes = len(blocks[0])
    if header is not None:
        n_nodes, n_times, directed = header
        if len(blocks) != n_times:
            raise DataFormatError(f"header says {n_times} time points, found {len(blocks)} blocks", path)
    elif n_nodes < 2:
        raise DataFormatError(f"a network needs at least 2 nodes, found {n_nodes} row", path, blocks[0][0][0])
    snapshots = np.zeros((len(blocks), n_nodes, n_nodes), dtype=bool)
    for t, block in enumerate(blocks):
        if len(block) != n_nodes:
            raise DataFormatError(f"block {t + 1} has {len(block)} rows, expected {n_nodes}", path, block[0][0])
        for i, (line_no, row) in enumerate(block):
            if len(row) != n_nodes:
                raise DataFormatError(f"row has {len(row)} columns, expected {n_nodes}", path, line_no)
            if row[i]:
                raise DataFormatError(f"self-loop on node {i}", path, line_no)
            snapshots[t, i] = row
    if not directed and np.any(snapshots != np.swapaxes(snapshots, 1, 2)):
        raise DataFormatError("undirected network blocks must be symmetric", path)
    return NetSeq(snapshots, directed=directed)


def read_network(path, format="edgelist", directed=True):
    """Read a network file; ``directed`` only matters for header-less dense files."""
    if format == "edgelist":
        return _read_edgelist(path)
    if format == "dense":
        return _read_dense(path, directed)
    raise DataFormatError(f"unknown network format {format!r}; expected one of {FORMATS}")


def write_network(net, path, format="edgelist"):
    lines = [_header_line(net)]
    if format == "edgelist":
        mask = net.mask()
        for t in range(net.n_times):
            rows, cols = np.nonzero(net.snapshots[t] & mask)
            lines.extend(f"{t + 1}\t{i}\t{j}" for i, j in zip(rows, cols))
    elif format == "dense":
        for t in range(net.n_times):
            if t:
                lines.append("")
            lines.extend(",".join(str(int(v)) for v in row) for row in net.snapshots[t])
    else:
        raise DataFormatError(f"unknown network format {format!r}; expected one of {FORMATS}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass
class TrajectoryExport:
    """Per-(t, node) memberships plus the global parameters of a fit."""

    pi: np.ndarray  # (T, N, K)
    gamma: np.ndarray  # (T, N, K)
    sigma_tilde: np.ndarray  # (T, N, K, K)
    params: object  # StaticParams or DynParams

    @property
    def dominant(self):
        return dominant_roles(self.pi)

    @property
    def model(self):
        return "dynamic" if isinstance(self.params, DynParams) else "static"

    @classmethod
    def from_posteriors(cls, params, posteriors):
        gamma = np.stack([p.gamma_tilde for p in posteriors])
        sigma = np.stack([p.sigma_tilde for p in posteriors])
        return cls(pi=logistic_transform(gamma), gamma=gamma, sigma_tilde=sigma, params=params)

    @classmethod
    def from_fit(cls, fit):
        if isinstance(fit.params, DynParams):
            return cls.from_posteriors(fit.params, fit.posteriors)
        return cls.from_posteriors(fit.params, [fit.posterior])

    def posteriors(self):
        return [MembershipPosterior(g, s) for g, s in zip(self.gamma, self.sigma_tilde)]


def _fmt(value):
    return FLOAT_FORMAT.format(float(value))


def write_trajectories(export, path):
    """Rows ``t,node,role,pi,gamma`` in (t, node, role) order."""
    n_times, n_nodes, k = export.pi.shape
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["t", "node", "role", "pi", "gamma"])
        for t in range(n_times):
            for i in range(n_nodes):
                for role in range(k):
                    writer.writerow([t + 1, i, role, _fmt(export.pi[t, i, role]), _fmt(export.gamma[t, i, role])])


def write_dominant_roles(export, path):
    dominant = export.dominant
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["t", "node", "role"])
        for t in range(dominant.shape[0]):
            for i in range(dominant.shape[1]):
                writer.writerow([t + 1, i, int(dominant[t, i])])


def read_trajectories(path):
    """Return (pi, gamma) arrays of shape (T, N, K) from a trajectory CSV."""
    rows = []
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames != ["t", "node", "role", "pi", "gamma"]:
                raise DataFormatError(f"unexpected columns {reader.fieldnames}", path, 1)
            for line_no, row in enumerate(reader, start=2):
                try:
                    rows.append((int(row["t"]), int(row["node"]), int(row["role"]), float(row["pi"]), float(row["gamma"])))
                except (TypeError, ValueError) as exc:
                    raise DataFormatError(f"bad row {row}", path, line_no) from exc
    except OSError as exc:
        raise DataFormatError(f"cannot read trajectories: {exc}", path) from exc
    if not rows:
        raise DataFormatError("no trajectory rows", path)
    table = np.array(rows)
    shape = (int(table[:, 0].max()), int(table[:, 1].max()) + 1, int(table[:, 2].max()) + 1)
    if len(rows) != shape[0] * shape[1] * shape[2]:
        raise DataFormatError(f"expected {shape[0] * shape[1] * shape[2]} rows, got {len(rows)}", path)
    pi = np.full(shape, np.nan)
    gamma = np.full(shape, np.nan)
    idx = (table[:, 0].astype(int) - 1, table[:, 1].astype(int), table[:, 2].astype(int))
    pi[idx] = table[:, 3]
    gamma[idx] = table[:, 4]
    if np.isnan(pi).any():
        raise DataFormatError("missing (t, node, role) rows", path)
    return pi, gamma


def params_to_dict(params):
    if isinstance(params, DynParams):
        return {
            "model": "dynamic",
            "b": params.b.tolist(),
            "nu": params.nu.tolist(),
            "phi": params.phi.tolist(),
            "a": params.a.tolist(),
            "sigmas": params.sigmas.tolist(),
            "mu_traj": params.mu_traj.tolist(),
        }
    return {
        "model": "static",
        "b": params.b.tolist(),
        "mu": params.mu.tolist(),
        "sigma": params.sigma.tolist(),
    }


def params_from_dict(data, path=None):
    try:
        if data.get("model", "static") == "dynamic":
            return DynParams(
                nu=data["nu"],
                phi=data["phi"],
                sigmas=data["sigmas"],
                b=data["b"],
                a=data.get("a"),
                mu_traj=data.get("mu_traj"),
            )
        return StaticParams(mu=data["mu"], sigma=data["sigma"], b=data["b"])
    except KeyError as exc:
        raise DataFormatError(f"params file lacks {exc.args[0]!r}", path) from exc
    except ValueError as exc:
        raise DataFormatError(f"bad params: {exc}", path) from exc


def write_params(params, path, posteriors=None, extra=None):
    """JSON with the model parameters and, optionally, the fitted posteriors."""
    data = params_to_dict(params)
    if posteriors is not None:
        data["posterior"] = {
            "gamma_tilde": np.stack([p.gamma_tilde for p in posteriors]).tolist(),
            "sigma_tilde": np.stack([p.sigma_tilde for p in posteriors]).tolist(),
        }
    if extra:
        data.update(extra)
    Path(path).write_text(json.dumps(data, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def read_params(path):
    """Return (params, posteriors or None, raw dict)."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataFormatError(f"cannot read params: {exc}", path) from exc
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc.msg}", path, exc.lineno) from exc
    params = params_from_dict(data, path)
    posteriors = None
    if "posterior" in data:
        gammas = np.asarray(data["posterior"]["gamma_tilde"], dtype=float)
        sigmas = np.asarray(data["posterior"]["sigma_tilde"], dtype=float)
        posteriors = [MembershipPosterior(g, s) for g, s in zip(gammas, sigmas)]
    return params, posteriors, data


def export_trajectories(export, out_dir):
    """Write trajectories.csv, dominant_roles.csv and params.json into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectories(export, out_dir / TRAJECTORY_FILE)
    write_dominant_roles(export, out_dir / DOMINANT_FILE)
    write_params(export.params, out_dir / PARAMS_FILE, posteriors=export.posteriors())
    logger.info("exported %d time point(s) to %s", export.pi.shape[0], out_dir)
    return out_dir
