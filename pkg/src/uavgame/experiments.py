"""Experiment driver: solver dispatch, parameter sweeps and CSV/JSON output."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path as FilePath

from .cpt import PTParams, TruncationConfig
from .graph import Instance, Path, enumerate_paths, load_instance, path_by_label, shortest_path
from .mdp import MixedInterdiction, origin_value_closed_form
from .montecarlo import simulate_delivery
from .pure import solve_SE
from .ptgame import PTGameSpec, mixed_valuation_U, rational_response, solve_MSE_PT, solve_SE_PT
from .search import SearchConfig, risky_nodes, solve_MSE

MODES = ("se", "mse", "se-pt", "mse-pt", "simulate", "sweep")
SWEEPS = ("R_common", "gamma_U", "lambda_U")
SWEEP_ALIASES = {"r": "R_common", "R": "R_common", "gamma": "gamma_U", "lambda": "lambda_U"}
DEFAULT_SWEEP_VALUES = {
    "R_common": [10.0, 15.0, 20.0, 25.0, 30.0, 35.0],
    "gamma_U": [0.25, 0.3, 0.35, 0.5, 0.75, 0.9],
    "lambda_U": [1.0, 2.5, 5.0],
}


@dataclass(frozen=True)
class ExperimentConfig:
    instance_path: str
    mode: str
    output_path: str | None = None
    pt_params_I: PTParams | None = None
    pt_params_U: PTParams | None = None
    sweep: tuple | None = None
    search: SearchConfig = SearchConfig()
    trunc: TruncationConfig = TruncationConfig()
    x: dict | None = None
    path: str | None = None
    trials: int = 100_000
    seed: int = 0
    step_cap: int = 10_000
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not FilePath(self.instance_path).is_file():
            raise FileNotFoundError(f"instance file not found: {self.instance_path}")
        if self.sweep is not None:
            name = SWEEP_ALIASES.get(self.sweep[0], self.sweep[0])
            if name not in SWEEPS:
                raise ValueError(f"unknown sweep parameter {self.sweep[0]!r}; expected one of {SWEEPS}")
            object.__setattr__(self, "sweep", (name, tuple(float(v) for v in self.sweep[1])))


def fmt(v):
    """Fixed float formatting for output files: 9 significant digits."""
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".9g")
    return v


def path_number(inst: Instance, h: Path) -> int:
    """Path index: the instance's own numbering if it has one, else enumeration order (1-based)."""
    labels = inst.metadata.get("path_labels")
    if labels:
        for num, interior in labels.items():
            if [str(n) for n in interior] == [str(n) for n in h.interior]:
                return int(num)
    return enumerate_paths(inst.graph).index(h) + 1


def provenance(inst: Instance, config: ExperimentConfig) -> dict:
    prov = {"instance_hash": inst.graph.fingerprint(), "seed": config.search.rng_seed,
            "rehandling_time": inst.rehandling_time}
    prov.update({f"trunc_{k}": v for k, v in vars(config.trunc).items()})
    prov.update({f"search_{k}": v for k, v in config.search.to_dict().items() if k != "rng_seed"})
    return prov


def pct(new: float, ref: float) -> float:
    """Percentage difference of ``new`` relative to ``ref``."""
    return (new - ref) / ref * 100.0


def _x_columns(prefix: str, x: MixedInterdiction, nodes) -> dict:
    return {f"{prefix}_x_{n}": x[n] for n in nodes}


def resolve_params(inst: Instance, config: ExperimentConfig) -> tuple[PTParams, PTParams]:
    """Player parameters: explicit config values, else the instance's ``pt_defaults``, else rational."""
    base = inst.metadata.get("pt_defaults")
    default = PTParams.from_dict(base) if base else PTParams.rational()
    return config.pt_params_I or default, config.pt_params_U or default


def _spec(inst, config, params_I, params_U):
    return PTGameSpec(inst.graph, inst.rehandling_time, params_I, params_U, config.trunc)


def sweep_params(base_I: PTParams, base_U: PTParams, name: str, value: float) -> tuple[PTParams, PTParams]:
    """Player parameters at one sweep point.

    The reference-point sweep moves both players' ``R`` together; the
    ``gamma_U`` and ``lambda_U`` sweeps hold the interdictor rational.
    """
    if name == "R_common":
        return base_I.replace(R=value), base_U.replace(R=value)
    if name == "gamma_U":
        return PTParams.rational(), base_U.replace(gamma_plus=value, gamma_minus=value)
    if name == "lambda_U":
        return PTParams.rational(), base_U.replace(lam=value)
    raise ValueError(f"unknown sweep parameter {name!r}")


def _sweep_point(args):
    inst, config, name, value, mse = args
    params_I, params_U = sweep_params(*resolve_params(inst, config), name, value)
    spec = _spec(inst, config, params_I, params_U)
    g, t_a = inst.graph, inst.rehandling_time
    res = solve_MSE_PT(spec, config.search)
    h_sp = shortest_path(g)
    rr_path, rr_E = rational_response(spec, res.x)
    mse_x, mse_path, mse_E = mse
    sp_vs_mse = origin_value_closed_form(g, t_a, mse_x, h_sp)
    sp_vs_pt = origin_value_closed_form(g, t_a, res.x, h_sp)
    nodes = risky_nodes(g)
    row = {"sweep": name, "value": value}
    row.update(_x_columns("mse_pt", res.x, nodes))
    row.update({
        "mse_pt_path": path_number(inst, res.path),
        "mse_pt_path_nodes": " ".join(map(str, res.path.interior)),
        "mse_pt_E": res.expected_time,
        "mse_pt_xi_I": res.xi_I,
        "mse_pt_xi_U": res.xi_U,
        "mse_pt_search_evals": res.search.evals_used,
    })
    row.update(_x_columns("mse", mse_x, nodes))
    row.update({
        "mse_path": path_number(inst, mse_path),
        "mse_E": mse_E,
        "rational_response_path": path_number(inst, rr_path),
        "rational_response_E": rr_E,
        "shortest_path": path_number(inst, h_sp),
        "sp_vs_mse_E": sp_vs_mse,
        "sp_vs_mse_pt_E": sp_vs_pt,
        "sp_vs_mse_pt_xi_U": mixed_valuation_U(spec, res.x, h_sp),
        "pct_mse_pt_vs_mse": pct(res.expected_time, mse_E),
        "pct_rational_response_vs_mse_pt": pct(rr_E, res.expected_time),
        "pct_rational_response_vs_mse": pct(rr_E, mse_E),
        "pct_sp_vs_mse_pt_E": pct(sp_vs_pt, res.expected_time),
        "pct_sp_vs_mse_E": pct(sp_vs_mse, mse_E),
    })
    return row


def run_sweep(config: ExperimentConfig, name: str, values=None) -> list[dict]:
    """One MSE baseline plus an MSE-PT solve per sweep value; rows come back in sweep order."""
    inst = load_instance(config.instance_path)
    values = list(DEFAULT_SWEEP_VALUES[name] if values is None else values)
    x, h, E, _ = solve_MSE(inst.graph, inst.rehandling_time, config.search)
    jobs = [(inst, config, name, float(v), (x, h, E)) for v in values]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    prov = provenance(inst, config)
    return [{**r, **prov} for r in rows]


def run_sweep_R(config: ExperimentConfig, values=None) -> list[dict]:
    return run_sweep(config, "R_common", values)


def run_sweep_gamma(config: ExperimentConfig, values=None) -> list[dict]:
    return run_sweep(config, "gamma_U", values)


def run_sweep_lambda(config: ExperimentConfig, values=None) -> list[dict]:
    return run_sweep(config, "lambda_U", values)


def solve(config: ExperimentConfig) -> dict:
    """Run one solver and return a flat result row."""
    inst = load_instance(config.instance_path)
    g, t_a = inst.graph, inst.rehandling_time
    params_I, params_U = resolve_params(inst, config)
    row = {"mode": config.mode}
    if config.mode == "se":
        eq = solve_SE(g, t_a)
        row.update({"node": eq.node, "path": path_number(inst, eq.path),
                    "path_nodes": " ".join(map(str, eq.path.interior)), "E": eq.value})
    elif config.mode == "se-pt":
        eq = solve_SE_PT(_spec(inst, config, params_I, params_U))
        row.update({"node": eq.node, "path": path_number(inst, eq.path),
                    "path_nodes": " ".join(map(str, eq.path.interior)), "E": eq.expected_time, "xi_I": eq.value_I})
    elif config.mode == "mse":
        x, h, E, res = solve_MSE(g, t_a, config.search)
        row.update(_x_columns("mse", x, risky_nodes(g)))
        row.update({"path": path_number(inst, h), "path_nodes": " ".join(map(str, h.interior)), "E": E,
                    "search_evals": res.evals_used, "converged": res.converged})
    elif config.mode == "mse-pt":
        res = solve_MSE_PT(_spec(inst, config, params_I, params_U), config.search)
        row.update(_x_columns("mse_pt", res.x, risky_nodes(g)))
        row.update({"path": path_number(inst, res.path), "path_nodes": " ".join(map(str, res.path.interior)),
                    "E": res.expected_time, "xi_I": res.xi_I, "xi_U": res.xi_U,
                    "search_evals": res.search.evals_used, "converged": res.search.converged})
    else:
        raise ValueError(f"solve does not handle mode {config.mode!r}")
    if config.mode in ("se-pt", "mse-pt"):
        row.update({f"I_{k}": v for k, v in params_I.to_dict().items()})
        row.update({f"U_{k}": v for k, v in params_U.to_dict().items()})
    row.update(provenance(inst, config))
    return row


def simulate(config: ExperimentConfig) -> dict:
    inst = load_instance(config.instance_path)
    g = inst.graph
    lookup = {str(n): n for n in g.nodes}
    x = MixedInterdiction({lookup[str(k)]: v for k, v in (config.x or {}).items()})
    h = path_by_label(g, config.path) if config.path else shortest_path(g)
    rep = simulate_delivery(g, inst.rehandling_time, x, h, config.trials, config.seed, config.step_cap, config.workers)
    out = rep.to_dict()
    out.update({"path": path_number(inst, h), "path_nodes": list(h.interior),
                "analytic_E": origin_value_closed_form(g, inst.rehandling_time, x, h),
                "seed": config.seed, "instance_hash": g.fingerprint()})
    return out


def write_rows(rows: list[dict], out_path, meta: dict | None = None):
    """Write ``rows`` as CSV (when the suffix is .csv) plus a JSON mirror next to it."""
    out = FilePath(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    columns = []
    for r in rows:
        columns.extend(k for k in r if k not in columns)
    formatted = [{k: fmt(r.get(k)) for k in columns} for r in rows]
    json_path = out if out.suffix == ".json" else out.with_suffix(".json")
    if out.suffix != ".json":
        with open(out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            writer.writerows(formatted)
    with open(json_path, "w") as fh:
        json.dump({"meta": meta or {}, "columns": columns, "rows": formatted}, fh, indent=2)
        fh.write("\n")
    return json_path


def run(config: ExperimentConfig) -> list[dict]:
    """Dispatch on ``config.mode``, write the output files if a path is set, and return the rows."""
    if config.mode == "simulate":
        report = simulate(config)
        if config.output_path:
            FilePath(config.output_path).parent.mkdir(parents=True, exist_ok=True)
            with open(config.output_path, "w") as fh:
                json.dump(report, fh, indent=2)
                fh.write("\n")
        return [report]
    if config.mode == "sweep":
        if config.sweep is None:
            raise ValueError("sweep mode needs a sweep parameter")
        name, values = config.sweep
        rows = run_sweep(config, name, values or None)
    else:
        rows = [solve(config)]
    if config.output_path:
        write_rows(rows, config.output_path, {"mode": config.mode})
    return rows
