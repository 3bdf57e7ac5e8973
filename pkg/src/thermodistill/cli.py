"""Batch front-end: parse an experiment config, run a sweep, write CSV.

Config documents are YAML; the schema is documented in the README and the
shipped presets (``fig3``, ``fig4``).  Output is deterministic for a
fixed config and seed: floats are written with 17 significant digits and
rows follow the sweep grid order regardless of worker scheduling.

Exit codes: 0 success, 2 config error, 3 atom-budget overflow.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .asymptotics import std_normal_cdf, std_normal_quantile
from .atoms import DEFAULT_ATOM_BUDGET, AtomBudgetError
from .majorization import DistillationProblem
from .model import Ensemble, Subsystem, TargetSpec
from .moments import ensemble_moments
from .protocols import (
    encoding_capacity,
    encoding_error_at,
    erasure_cost,
    erasure_cost_exact,
    hypothesis_testing_rel_entropy_product,
    hypothesis_testing_second_order,
    work_extraction_error,
    work_for_epsilon,
)
from .purestate import (
    DEFAULT_MC_SEED,
    asymptotic_error_pure,
    exact_error_pure,
    mc_hyperplane_probability,
    pure_moments,
)
from .report import distillation_report

SCHEMA_HEADER = "# schema=v1"
TASKS = ("distill", "work", "erasure", "encode", "pure-distill", "mc-validate", "dh")

# Columns converted when --bits is passed (entropic/log quantities in nats,
# and energy-like quantities at beta*E resolution).
_NAT_COLUMNS = {
    "loggamma", "x", "F", "sigmaF", "W_exact", "W_asymptotic", "W_cost",
    "Fbat_final", "Fbat_target", "f_diss_exact", "f_diss_asymptotic",
    "entropy", "logM_asymptotic", "R", "dh", "dh_per_copy", "dh_second_order",
}


class ConfigError(Exception):
    """Malformed or inconsistent experiment configuration."""


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def _require(cfg: dict, key: str, ctx: str = "config"):
    if key not in cfg:
        raise ConfigError(f"{ctx}: missing required field '{key}'")
    return cfg[key]


def _as_positive_int(value, ctx: str) -> int:
    try:
        i = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{ctx}: expected an integer, got {value!r}") from None
    if i < 1:
        raise ConfigError(f"{ctx}: must be >= 1, got {i}")
    return i


def parse_group(entry: dict, beta: float, idx: int) -> tuple[Subsystem, int]:
    ctx = f"ensemble[{idx}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{ctx}: expected a mapping")
    state = _require(entry, "state", ctx)
    count = _as_positive_int(entry.get("count", 1), f"{ctx}.count")
    beta = float(entry.get("beta", beta))  # per-group override, rarely sensible
    try:
        if "gibbs" in entry:
            sub = Subsystem.from_gibbs(entry["gibbs"], state, beta)
        elif "energies" in entry:
            sub = Subsystem.incoherent(entry["energies"], state, beta)
        else:
            raise ConfigError(f"{ctx}: need 'gibbs' or 'energies'")
    except ValueError as exc:
        raise ConfigError(f"{ctx}: {exc}") from None
    return sub, count


def parse_ensemble(cfg: dict, beta: float) -> Ensemble:
    entries = _require(cfg, "ensemble")
    if not isinstance(entries, list) or not entries:
        raise ConfigError("ensemble: must be a non-empty list of groups")
    groups = tuple(parse_group(g, beta, i) for i, g in enumerate(entries))
    try:
        return Ensemble(groups)
    except ValueError as exc:
        raise ConfigError(f"ensemble: {exc}") from None


def parse_pure_system(cfg: dict, beta: float) -> Subsystem:
    sys_cfg = _require(cfg, "system")
    energies = _require(sys_cfg, "energies", "system")
    state = _require(sys_cfg, "state", "system")
    try:
        return Subsystem.pure(energies, state, beta,
                              incommensurable=bool(sys_cfg.get("incommensurable", False)))
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from None


def parse_target(cfg: dict, beta: float) -> TargetSpec:
    tgt = _require(cfg, "target")
    try:
        if "loggamma" in tgt:
            return TargetSpec(float(tgt["loggamma"]))
        if "messages" in tgt:
            return TargetSpec.degenerate(_as_positive_int(tgt["messages"], "target.messages"))
        if "energies" in tgt:
            from .model import target_from_hamiltonian

            return target_from_hamiltonian(tgt["energies"], beta,
                                           int(tgt.get("level", 0)))
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"target: {exc}") from None
    raise ConfigError("target: need 'loggamma', 'messages' or 'energies'+'level'")


def parse_grid(cfg: dict) -> list[float]:
    sweep = _require(cfg, "sweep")
    grid = _require(sweep, "grid", "sweep")
    if isinstance(grid, dict):
        for key in ("start", "stop", "num"):
            _require(grid, key, "sweep.grid")
        num = _as_positive_int(grid["num"], "sweep.grid.num")
        values = np.linspace(float(grid["start"]), float(grid["stop"]), num)
        return [float(v) for v in values]
    if not isinstance(grid, list) or not grid:
        raise ConfigError("sweep.grid: must be a non-empty list or {start, stop, num}")
    return [float(v) for v in grid]


def normalize_config(cfg: dict) -> dict:
    """Validate the whole document; returns a normalized copy."""
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a mapping")
    task = _require(cfg, "task")
    if task not in TASKS:
        raise ConfigError(f"task: unknown task {task!r}; expected one of {TASKS}")
    beta = float(cfg.get("beta", 1.0))
    if beta <= 0:
        raise ConfigError("beta: must be positive")
    out = {"task": task, "beta": beta}

    if task in ("pure-distill", "mc-validate"):
        sub = parse_pure_system(cfg, beta)
        out["system"] = {
            "energies": [float(v) for v in sub.spectrum.energies],
            "state": [float(v) for v in sub.state.populations],
            "incommensurable": sub.spectrum.incommensurable,
        }
    else:
        ens = parse_ensemble(cfg, beta)
        out["ensemble"] = [
            {"gibbs": [float(g) for g in sub.spectrum.gibbs],
             "state": [float(v) for v in sub.state.populations],
             "count": count}
            for sub, count in ens.groups
        ]

    if task in ("distill", "pure-distill", "mc-validate"):
        out["target"] = {"loggamma": parse_target(cfg, beta).log_gibbs_weight}
    variable = _require(_require(cfg, "sweep"), "variable", "sweep")
    allowed = {
        "distill": ("loggamma", "x"),
        "work": ("epsilon",),
        "erasure": ("epsilon",),
        "encode": ("eps_d",),
        "pure-distill": ("copies",),
        "mc-validate": ("copies",),
        "dh": ("epsilon",),
    }[task]
    if variable not in allowed:
        raise ConfigError(f"sweep.variable: {variable!r} not valid for task {task} "
                          f"(allowed: {allowed})")
    out["sweep"] = {"variable": variable, "grid": parse_grid(cfg)}
    if task == "work":
        report = cfg.get("report", "extraction")
        if report not in ("extraction", "quality"):
            raise ConfigError("report: must be 'extraction' or 'quality'")
        out["report"] = report
    if task == "mc-validate":
        out["samples"] = _as_positive_int(cfg.get("samples", 100_000), "samples")
    if task == "pure-distill":
        out["ancilla_gap"] = float(cfg.get("ancilla_gap", 0.0))
    out["output"] = str(cfg.get("output", f"{task}.csv"))
    out["seed"] = int(cfg.get("seed", DEFAULT_MC_SEED))
    out["atom_budget"] = _as_positive_int(cfg.get("atom_budget", DEFAULT_ATOM_BUDGET),
                                          "atom_budget")
    return out


# ---------------------------------------------------------------------------
# Task runners: (column names, row factory over the grid)
# ---------------------------------------------------------------------------

def _run_distill(cfg):
    ens = parse_ensemble(cfg, cfg["beta"])
    m0 = ensemble_moments(ens)
    variable = cfg["sweep"]["variable"]

    def point(v: float) -> dict:
        if variable == "x":
            loggamma = min(0.0, v * m0.beta_sigma_f - m0.beta_f)
        else:
            loggamma = v
        rep = distillation_report(DistillationProblem(ens, TargetSpec(loggamma)),
                                  budget=cfg["atom_budget"])
        return {
            "loggamma": loggamma,
            "x": rep.moments.x,
            "epsilon_exact": rep.epsilon_exact,
            "epsilon_asymptotic": rep.epsilon_asymptotic,
            "epsilon_upper_bound": rep.epsilon_upper_bound,
            "f_diss_exact": rep.dissipated_exact,
            "f_diss_asymptotic": rep.dissipated_asymptotic,
            "F": rep.moments.f,
            "sigmaF": rep.moments.sigma_f,
            "regime": rep.regime.value,
        }

    cols = ["loggamma", "x", "epsilon_exact", "epsilon_asymptotic", "epsilon_upper_bound",
            "f_diss_exact", "f_diss_asymptotic", "F", "sigmaF", "regime"]
    return cols, point


def _run_work(cfg):
    ens = parse_ensemble(cfg, cfg["beta"])
    m = ensemble_moments(ens)
    quality = cfg.get("report") == "quality"

    def point(eps: float) -> dict:
        w = work_for_epsilon(ens, eps, budget=cfg["atom_budget"])
        res = work_extraction_error(ens, w, budget=cfg["atom_budget"])
        if quality:
            return {"epsilon": eps, "Fbat_final": res.f_bat,
                    "Fbat_target": res.f_bat_target, "F": m.f}
        w_asym = m.f + m.sigma_f * std_normal_quantile(eps) if eps > 0 else -math.inf
        return {"epsilon": eps, "W_exact": w, "W_asymptotic": w_asym,
                "F": m.f, "sigmaF": m.sigma_f}

    cols = (["epsilon", "Fbat_final", "Fbat_target", "F"] if quality
            else ["epsilon", "W_exact", "W_asymptotic", "F", "sigmaF"])
    return cols, point


def _run_erasure(cfg):
    ens = parse_ensemble(cfg, cfg["beta"])

    def point(eps: float) -> dict:
        res = erasure_cost(ens, eps)
        w_exact = erasure_cost_exact(ens, eps, budget=cfg["atom_budget"])
        return {"epsilon": eps, "W_cost": res.w_cost, "W_exact": w_exact,
                "entropy": res.entropy, "sigmaF": res.sigma_f}

    return ["epsilon", "W_cost", "W_exact", "entropy", "sigmaF"], point


def _run_encode(cfg):
    ens = parse_ensemble(cfg, cfg["beta"])

    def point(eps_d: float) -> dict:
        res = encoding_capacity(ens, eps_d)
        return {
            "eps_d": eps_d, "M": res.m, "R": res.rate,
            "logM_asymptotic": res.log_m_asymptotic,
            "epsilon_at_M": encoding_error_at(ens, res.m, budget=cfg["atom_budget"]),
            "experimental": int(res.experimental),
        }

    return ["eps_d", "M", "R", "logM_asymptotic", "epsilon_at_M", "experimental"], point


def _run_pure_distill(cfg):
    sub = parse_pure_system(cfg, cfg["beta"])
    target = TargetSpec(cfg["target"]["loggamma"])
    gap = cfg.get("ancilla_gap", 0.0)

    def point(copies: float) -> dict:
        n = int(copies)
        m = pure_moments(sub, n, target, gap)
        return {
            "N": n,
            "epsilon_exact": exact_error_pure(sub, n, target, gap,
                                              budget=cfg["atom_budget"]),
            "epsilon_asymptotic": asymptotic_error_pure(sub, target, n, gap),
            "x": m.x,
        }

    return ["N", "epsilon_exact", "epsilon_asymptotic", "x"], point


def _run_mc_validate(cfg):
    sub = parse_pure_system(cfg, cfg["beta"])
    target = TargetSpec(cfg["target"]["loggamma"])
    samples = cfg["samples"]
    seed = cfg["seed"]

    def point(copies: float) -> dict:
        n = int(copies)
        est, stderr = mc_hyperplane_probability(sub, target, n, samples, seed=seed)
        m = pure_moments(sub, n, target)
        phi = std_normal_cdf(m.x) if m.sigma_f > 0 else (1.0 if m.delta_f > 0 else 0.0)
        return {"N": n, "estimate": est, "stderr": stderr, "phi_x": phi, "x": m.x}

    return ["N", "estimate", "stderr", "phi_x", "x"], point


def _run_dh(cfg):
    ens = parse_ensemble(cfg, cfg["beta"])

    def point(eps: float) -> dict:
        dh = hypothesis_testing_rel_entropy_product(ens, eps, budget=cfg["atom_budget"])
        return {
            "epsilon": eps, "dh": dh, "dh_per_copy": dh / ens.n_total,
            "dh_second_order": hypothesis_testing_second_order(ens, eps),
        }

    return ["epsilon", "dh", "dh_per_copy", "dh_second_order"], point


_RUNNERS = {
    "distill": _run_distill,
    "work": _run_work,
    "erasure": _run_erasure,
    "encode": _run_encode,
    "pure-distill": _run_pure_distill,
    "mc-validate": _run_mc_validate,
    "dh": _run_dh,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _format_value(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: str, columns: list[str], rows: list[dict], bits: bool) -> None:
    lines = [SCHEMA_HEADER, ",".join(columns)]
    for row in rows:
        out = []
        for col in columns:
            v = row[col]
            if bits and col in _NAT_COLUMNS and isinstance(v, float):
                v = v / math.log(2.0)
            out.append(_format_value(v))
        lines.append(",".join(out))
    Path(path).write_text("\n".join(lines) + "\n")


def resolve_config_path(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    preset = resources.files("thermodistill").joinpath("presets", f"{name}.yaml")
    if preset.is_file():
        return Path(str(preset))
    raise ConfigError(f"config '{name}' is neither a file nor a shipped preset")


def load_config(name: str) -> dict:
    path = resolve_config_path(name)
    try:
        cfg = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return normalize_config(cfg)


def run_config(cfg: dict, out_path: str | None, threads: int, bits: bool,
               plot: bool) -> str:
    columns, point = _RUNNERS[cfg["task"]](cfg)
    grid = cfg["sweep"]["grid"]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(point, grid))
    else:
        rows = [point(v) for v in grid]
    path = out_path or cfg["output"]
    write_csv(path, columns, rows, bits)
    if plot:
        from .figures import render

        render(cfg["task"], cfg.get("report", ""), rows, str(Path(path).with_suffix(".png")))
    return path


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermodistill",
        description="Exact and second-order thermodynamic distillation sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "run a config and write CSV results"),
                            ("validate", "parse and validate a config without running")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True,
                       help="path to a YAML config, or a preset name (fig3, fig4)")
        if name == "run":
            p.add_argument("--out", help="output CSV path (overrides config)")
            p.add_argument("--seed", type=int, help="RNG seed override")
            p.add_argument("--threads", type=int, default=1, help="sweep worker threads")
            p.add_argument("--atom-budget", type=int, help="atom class budget override")
            p.add_argument("--bits", action="store_true",
                           help="convert entropic columns from nats to bits")
            p.add_argument("--plot", action="store_true",
                           help="also render a figure next to the CSV")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(yaml.safe_dump(cfg, sort_keys=False).rstrip())
        print("OK")
        return 0
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.atom_budget is not None:
        cfg["atom_budget"] = args.atom_budget
    try:
        path = run_config(cfg, args.out, max(1, args.threads), args.bits, args.plot)
    except AtomBudgetError as exc:
        print(f"computational overflow: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
