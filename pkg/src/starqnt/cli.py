"""Command-line front end: ``starqnt {verify,sweep,converge,estimate}``.

Exit codes: 0 success, 1 tolerance or validation failure, 2 usage error.

Every command accepts ``--config FILE`` with a flat JSON object whose keys are
the long flag names (dashes or underscores); explicit flags win over the file.
When ``--output`` is absent and ``STARQNT_OUTPUT_DIR`` is set, tabular output
goes to ``$STARQNT_OUTPUT_DIR/<command>.<format>``; otherwise to stdout.

CSV columns
-----------
sweep:    protocol, theta_star, m_total, qcrb_trace, singular, condition_number
converge: protocol, m_total, trial, seed, err_l2, theta_hat_0 .. theta_hat_{n-1}, invalid_count

``converge`` writes one row per trial followed by a ``trial=mean`` row for each
(protocol, m_total) cell. Floats are written with ``repr`` (round-trip exact).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import UsageError, as_theta
from .dists import Circuit, meas_dist, valid_bases
from .fisher import protocol_qfim, qcrb_trace
from .oracle import MAX_QUBITS, oracle_dist
from .protocols import Protocol, execute_protocol, feasible_m, parse_protocol, plan_protocol
from .sampling import child_seed, make_rng

OUTPUT_ENV = "STARQNT_OUTPUT_DIR"

SWEEP_COLUMNS = ["protocol", "theta_star", "m_total", "qcrb_trace", "singular", "condition_number"]


def converge_columns(n: int) -> list[str]:
    return ["protocol", "m_total", "trial", "seed", "err_l2"] + [f"theta_hat_{j}" for j in range(n)] + ["invalid_count"]


@dataclass
class ExperimentConfig:
    n: int = 3
    protocols: tuple[Protocol, ...] = tuple(Protocol)
    theta_star: Optional[float] = 0.58
    theta: Optional[tuple[float, ...]] = None
    m_total: int = 6
    m_start: int = 36
    m_end: int = 2022
    m_step: int = 6
    trials: int = 5
    seed: int = 0
    grid: Optional[tuple[float, ...]] = None
    grid_start: float = 0.505
    grid_end: float = 0.995
    grid_points: int = 50
    output: Optional[str] = None
    format: str = "csv"
    jobs: int = 1

    def __post_init__(self):
        self.protocols = tuple(parse_protocol(p) for p in self.protocols)
        if self.n < 2:
            raise UsageError("n must be >= 2")
        if self.trials < 1:
            raise UsageError("trials must be >= 1")
        if self.format not in ("csv", "json"):
            raise UsageError(f"format must be csv or json, got {self.format!r}")
        if self.theta is not None:
            th = as_theta(self.theta)
            if th.size != self.n:
                raise UsageError(f"theta has {th.size} entries but n={self.n}")
            self.theta = tuple(float(t) for t in th)

    def theta_true(self) -> np.ndarray:
        if self.theta is not None:
            return np.array(self.theta)
        if self.theta_star is None:
            raise UsageError("give theta_star or a full theta vector")
        return as_theta([self.theta_star] * self.n)

    def sweep_grid(self) -> np.ndarray:
        if self.grid is not None:
            return np.array(self.grid, dtype=float)
        return np.linspace(self.grid_start, self.grid_end, self.grid_points)

    def m_values(self) -> list[int]:
        if self.m_step < 1 or self.m_start < 1 or self.m_end < self.m_start:
            raise UsageError("need 1 <= m_start <= m_end and m_step >= 1")
        return list(range(self.m_start, self.m_end + 1, self.m_step))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _json_value(x):
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def render(rows: list[dict], columns: list[str], fmt: str) -> str:
    if fmt == "json":
        clean = [{c: _json_value(row[c]) for c in columns} for row in rows]
        return json.dumps(clean, indent=1, allow_nan=False) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def emit(text: str, output: Optional[str], command: str, fmt: str) -> Optional[Path]:
    if output is None and os.environ.get(OUTPUT_ENV):
        output = str(Path(os.environ[OUTPUT_ENV]) / f"{command}.{fmt}")
    if output is None or output == "-":
        sys.stdout.write(text)
        return None
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


# ---------------------------------------------------------------- commands


def cmd_verify(n: int = 3, draws: int = 100, tol: float = 1e-9, seed: int = 0) -> tuple[int, dict]:
    """Compare closed forms against the density-matrix oracle on random theta."""
    if not 2 <= n <= MAX_QUBITS:
        raise UsageError(f"oracle supports 2 <= n <= {MAX_QUBITS}, got {n}")
    if draws < 1:
        raise UsageError("draws must be >= 1")
    rng = make_rng(seed)
    worst: dict[str, float] = {}
    for _ in range(draws):
        theta = rng.random(n)
        for circuit in Circuit:
            for basis in valid_bases(circuit):
                dev = np.max(np.abs(meas_dist(circuit, basis, n, theta).probs - oracle_dist(circuit, basis, n, theta).probs))
                key = f"{circuit.value}/{basis.value}"
                worst[key] = max(worst.get(key, 0.0), float(dev))
    max_dev = max(worst.values())
    report = {"n": n, "draws": draws, "tol": tol, "seed": seed, "max_deviation": max_dev, "per_pair": worst}
    return (0 if max_dev < tol else 1), report


def cmd_sweep(config: ExperimentConfig) -> list[dict]:
    rows = []
    for protocol in config.protocols:
        spec = plan_protocol(protocol, config.n, config.m_total)
        for t in config.sweep_grid():
            t = float(t)
            try:
                res = qcrb_trace(protocol_qfim(spec, [t] * config.n))
                trace, singular, kappa = res.trace_inv, res.singular, res.condition_number
            except UsageError:
                trace, singular, kappa = None, True, float("inf")
            rows.append({
                "protocol": protocol.value,
                "theta_star": t,
                "m_total": spec.m_total,
                "qcrb_trace": trace,
                "singular": singular,
                "condition_number": kappa,
            })
    return rows


def _converge_cell(args) -> dict:
    protocol, n, m, theta, seed, trial = args
    report = execute_protocol(plan_protocol(protocol, n, m), theta, seed)
    row = {"protocol": protocol.value, "m_total": m, "trial": trial, "seed": seed,
           "err_l2": report.err_l2, "invalid_count": report.invalid_count}
    for j, v in enumerate(report.values):
        row[f"theta_hat_{j}"] = float(v)
    return row


def cmd_converge(config: ExperimentConfig) -> list[dict]:
    """Per-trial and per-cell mean estimation errors over an m grid.

    Trial t at grid position i of protocol p draws from the seed
    ``child_seed(seed, p.index, i * trials + t, 0)``.
    """
    theta = tuple(config.theta_true())
    m_grid = config.m_values()
    cells = []
    for protocol in config.protocols:
        for i, m_req in enumerate(m_grid):
            m = feasible_m(protocol, config.n, m_req)
            if m < 1:
                raise UsageError(f"{protocol.value} has no feasible m_total <= {m_req}")
            for t in range(config.trials):
                seed = child_seed(config.seed, protocol.index, i * config.trials + t, 0)
                cells.append((protocol, config.n, m, theta, seed, t))
    if config.jobs > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            trial_rows = list(pool.map(_converge_cell, cells, chunksize=64))
    else:
        trial_rows = [_converge_cell(c) for c in cells]

    rows = []
    for start in range(0, len(trial_rows), config.trials):
        group = trial_rows[start:start + config.trials]
        rows.extend(group)
        mean = {"protocol": group[0]["protocol"], "m_total": group[0]["m_total"], "trial": "mean", "seed": None,
                "err_l2": float(np.mean([r["err_l2"] for r in group])),
                "invalid_count": sum(r["invalid_count"] for r in group)}
        for j in range(config.n):
            mean[f"theta_hat_{j}"] = float(np.mean([r[f"theta_hat_{j}"] for r in group]))
        rows.append(mean)
    return rows


def cmd_estimate(protocol, theta, m: int, seed: int = 0, exact: bool = False):
    th = as_theta(theta, min_len=2)
    spec = plan_protocol(protocol, th.size, m)
    return execute_protocol(spec, th, None if exact else seed, exact=exact)


def format_report(report) -> str:
    lines = [f"protocol {report.protocol.value}  m_total={report.m_total}  "
             f"{'exact' if report.exact else f'seed={report.seed}'}"]
    for j, r in enumerate(report.theta_hat):
        flags = ",".join(f for f, on in (("invalid", not r.valid), ("clamped", r.clamped)) if on)
        lines.append(f"  theta_hat[{j}] = {r.value!r}" + (f"  raw={r.raw!r} [{flags}]" if flags else ""))
    lines.append(f"  err_l2 = {report.err_l2!r}  invalid_count = {report.invalid_count}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- argv handling

DEFAULTS = {
    "verify": {"n": 3, "draws": 100, "tol": 1e-9, "seed": 0, "format": "text"},
    "sweep": {"n": 3, "m_total": 6, "format": "csv"},
    "converge": {"n": 3, "trials": 5, "seed": 0, "format": "csv", "jobs": 1},
    "estimate": {"seed": 0, "exact": False, "json": False},
}


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _names(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="starqnt", description="Bit-flip star network tomography workbench.")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def common(p):
        p.add_argument("--config", default=S, help="flat JSON file of flag values")

    v = sub.add_parser("verify", help="closed forms vs density-matrix oracle")
    common(v)
    v.add_argument("--n", type=int, default=S)
    v.add_argument("--draws", type=int, default=S)
    v.add_argument("--tol", type=float, default=S)
    v.add_argument("--seed", type=int, default=S)
    v.add_argument("--format", choices=["text", "json"], default=S)

    for name, helptext in (("sweep", "QCRB trace vs uniform theta*"), ("converge", "estimation error vs m")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--n", type=int, default=S)
        p.add_argument("--protocols", type=_names, default=S, help="comma list; default all six")
        p.add_argument("--output", default=S)
        p.add_argument("--format", choices=["csv", "json"], default=S)
        if name == "sweep":
            p.add_argument("--m-total", dest="m_total", type=int, default=S)
            p.add_argument("--grid", type=_floats, default=S, help="explicit comma list of theta*")
            p.add_argument("--grid-start", dest="grid_start", type=float, default=S)
            p.add_argument("--grid-end", dest="grid_end", type=float, default=S)
            p.add_argument("--grid-points", dest="grid_points", type=int, default=S)
        else:
            p.add_argument("--theta-star", dest="theta_star", type=float, default=S)
            p.add_argument("--theta", type=_floats, default=S)
            p.add_argument("--m-start", dest="m_start", type=int, default=S)
            p.add_argument("--m-end", dest="m_end", type=int, default=S)
            p.add_argument("--m-step", dest="m_step", type=int, default=S)
            p.add_argument("--trials", type=int, default=S)
            p.add_argument("--seed", type=int, default=S)
            p.add_argument("--jobs", type=int, default=S)

    e = sub.add_parser("estimate", help="run one protocol once")
    common(e)
    e.add_argument("--protocol", default=S)
    e.add_argument("--theta", type=_floats, default=S)
    e.add_argument("--m", type=int, default=S)
    e.add_argument("--seed", type=int, default=S)
    e.add_argument("--exact", action="store_true", default=S, help="use exact probabilities")
    e.add_argument("--json", action="store_true", default=S)
    return parser


def _load_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config must be a flat JSON object")
    out = {}
    for key, value in data.items():
        key = key.replace("-", "_")
        if isinstance(value, list):
            value = tuple(value)
        elif key in ("protocols",) and isinstance(value, str):
            value = _names(value)
        elif key in ("theta", "grid") and isinstance(value, str):
            value = _floats(value)
        out[key] = value
    return out


def _settings(args: argparse.Namespace) -> dict:
    raw = vars(args).copy()
    command = raw.pop("command")
    merged = dict(DEFAULTS[command])
    if "config" in raw:
        merged.update(_load_config(raw.pop("config")))
    merged.update(raw)
    return merged


def _experiment(settings: dict) -> ExperimentConfig:
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(settings) - known
    if unknown:
        raise UsageError(f"unknown settings: {sorted(unknown)}")
    return ExperimentConfig(**settings)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = _settings(args)
        command = args.command
        if command == "verify":
            fmt = settings.pop("format")
            unknown = set(settings) - {"n", "draws", "tol", "seed"}
            if unknown:
                raise UsageError(f"unknown settings: {sorted(unknown)}")
            status, report = cmd_verify(**settings)
            if fmt == "json":
                print(json.dumps(report, indent=1))
            else:
                for key, dev in report["per_pair"].items():
                    print(f"{key:10s} max|dev| = {dev:.3e}")
                verdict = "PASS" if status == 0 else "FAIL"
                print(f"{verdict}: max deviation {report['max_deviation']:.3e} (tol {report['tol']:.1e})")
            return status
        if command == "sweep":
            config = _experiment(settings)
            text = render(cmd_sweep(config), SWEEP_COLUMNS, config.format)
            emit(text, config.output, "sweep", config.format)
            return 0
        if command == "converge":
            config = _experiment(settings)
            text = render(cmd_converge(config), converge_columns(config.n), config.format)
            emit(text, config.output, "converge", config.format)
            return 0
        missing = [k for k in ("protocol", "theta", "m") if k not in settings]
        if missing:
            raise UsageError(f"estimate needs --{' --'.join(missing)}")
        report = cmd_estimate(settings["protocol"], settings["theta"], settings["m"],
                              settings["seed"], settings["exact"])
        if settings["json"]:
            print(json.dumps(report.to_dict(), indent=1))
        else:
            sys.stdout.write(format_report(report))
        return 0
    except UsageError as exc:
        print(f"starqnt: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
