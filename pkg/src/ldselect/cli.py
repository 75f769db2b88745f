"""Command-line entry point: ``ldselect <command> [config.json] [options]``.

Exit codes: 0 success, 2 configuration error, 3 infeasible selection set,
4 enumeration size guard exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Any

from . import empirical as em
from . import ldr, oracle, rates
from . import markov as mk
from .errors import LDPError, SizeError

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_SIZE = 0, 2, 3, 4

CONFIG_KEYS = {"alphabet_size", "source", "storage", "weight", "eta", "eps", "log_base", "seed", "output_path", "v"}
MODEL_KEYS = {"kind", "rows", "p", "initial", "order"}
WEIGHT_KEYS = {"kind", "phi", "psi", "k"}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    alphabet_size: int
    source: mk.TransitionModel
    storage: mk.TransitionModel
    weight: em.WeightSpec
    eta: float
    eps: float
    log_base: str = "e"
    seed: int = 0
    output_path: str | None = None
    v: float | None = None

    @property
    def spec(self) -> em.SelectionSpec:
        return em.selection(self.source, self.weight, self.eta, self.eps)

    def unit(self) -> float:
        """Divisor turning nats into the configured unit."""
        return {"e": 1.0, "2": math.log(2), "ell": math.log(self.alphabet_size)}[self.log_base]


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(extra))}")


def parse_model(d: Any, ell: int, where: str) -> mk.TransitionModel:
    if d == "uniform":
        return mk.uniform(ell)
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be an object or \"uniform\"")
    _reject_unknown(d, MODEL_KEYS, where)
    kind = d.get("kind", "markov")
    initial = d.get("initial")
    if kind == "uniform":
        model = mk.uniform(ell)
    elif kind == "iid":
        model = mk.iid(d["p"], initial)
    elif kind == "markov":
        model = mk.markov(d["rows"], initial)
    elif kind == "markov_order_k":
        model = mk.lift_to_order_k(d["rows"], ell, int(d["order"]), initial)
    else:
        raise ConfigError(f"{where}: unknown kind {kind!r}")
    if model.alphabet_size != ell:
        raise ConfigError(f"{where}: alphabet size {model.alphabet_size} != {ell}")
    if model.kind in ("markov", "markov_order_k"):
        mk.validate(model)
    return model


def parse_weight(d: Any) -> em.WeightSpec:
    if not isinstance(d, dict):
        raise ConfigError("weight must be an object")
    _reject_unknown(d, WEIGHT_KEYS, "weight")
    kind = d.get("kind", "additive")
    if kind == "additive":
        return em.additive(d["phi"])
    if kind == "additive_k":
        return em.additive_k(d["phi"], int(d["k"]))
    if kind == "multiplicative":
        return em.multiplicative(d["psi"])
    raise ConfigError(f"weight: unknown kind {kind!r}")


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _reject_unknown(raw, CONFIG_KEYS, "config")
    try:
        ell = int(raw["alphabet_size"])
        source = parse_model(raw["source"], ell, "source")
        storage = parse_model(raw.get("storage", "uniform"), ell, "storage")
        weight = parse_weight(raw["weight"])
        log_base = str(raw.get("log_base", "e"))
        if log_base not in ("e", "2", "ell"):
            raise ConfigError("log_base must be one of e, 2, ell")
        cfg = RunConfig(ell, source, storage, weight, float(raw["eta"]), float(raw["eps"]), log_base,
                        int(raw.get("seed", 0)), raw.get("output_path"),
                        None if raw.get("v") is None else float(raw["v"]))
        cfg.spec  # validates eps and alphabet agreement
    except KeyError as exc:
        raise ConfigError(f"missing key {exc}") from exc
    except (LDPError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


# ----------------------------------------------------------------------------
# output helpers


def _num(x: float) -> Any:
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else "-inf"


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["%.17g" % v if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _json(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------------
# commands


def cmd_chain_info(cfg: RunConfig, args) -> tuple[str, int]:
    out = {}
    for name, model in (("source", cfg.source), ("storage", cfg.storage)):
        report = mk.validate(model) if model.kind in ("markov", "markov_order_k") else None
        out[name] = {
            "kind": model.kind,
            "order": model.order,
            "stationary": mk.stationary_distribution(model).tolist(),
            "entropy_rate": _num(mk.entropy_rate(model) / cfg.unit()),
            "validation": report.as_dict() if report else {"valid": True},
        }
    out["log_base"] = cfg.log_base
    return _json(out), EXIT_OK


def cmd_ldr_curve(cfg: RunConfig | None, args) -> tuple[str, int]:
    data = ldr.curve(args.alpha, args.beta, args.points)
    if cfg is not None:
        unit = cfg.unit()
    else:
        unit = 1.0 if args.log_base in (None, "e") else math.log(2)
    rows = [(r[0], r[1] / unit, r[2] / unit, r[3] / unit) for r in data.tolist()]
    return _csv(["y0", "m_star_closed", "m_star_numeric", "abs_diff"], rows), EXIT_OK


def compute_rate(cfg: RunConfig) -> dict:
    unit = cfg.unit()
    v = math.log(cfg.alphabet_size) if cfg.v is None else cfg.v
    weight = cfg.weight
    S = rates.build_set(cfg.source, weight, cfg.eta, cfg.eps)
    kappa = rates.kappa_inf_rate(cfg.storage, S, v=v)
    out = {
        "kappa": _num(kappa.value / unit),
        "gamma": _num(rates.volume_exponent(kappa, v) / unit),
        "v": _num(v / unit),
        "status": kappa.status,
        "optimizer": None if kappa.optimizer is None else kappa.optimizer.tolist(),
        "log_base": cfg.log_base,
    }
    if weight.kind == "multiplicative":
        out["iota"] = _num(rates.iota_multiplicative(cfg.source, weight, cfg.eta, cfg.eps).value / unit)
    return out


def cmd_rate(cfg: RunConfig, args) -> tuple[str, int]:
    out = compute_rate(cfg)
    return _json(out), EXIT_INFEASIBLE if out["status"] == rates.INFEASIBLE else EXIT_OK


def cmd_enumerate(cfg: RunConfig, args) -> tuple[str, int]:
    e = oracle.enumerate_with_probability(cfg.storage, cfg.spec, args.n)
    out = {
        "n": args.n,
        "b_n": e.count,
        "p_st": _num(e.probability),
        "log_rate": _num(e.log_rate / cfg.unit()),
    }
    return _json(out), EXIT_OK


def cmd_simulate(cfg: RunConfig, args) -> tuple[str, int]:
    est, se = oracle.monte_carlo_probability(cfg.storage, cfg.spec, args.n, args.trials, cfg.seed)
    return _json({"n": args.n, "trials": args.trials, "seed": cfg.seed, "estimate": est, "stderr": se}), EXIT_OK


def cmd_convergence(cfg: RunConfig, args) -> tuple[str, int]:
    n_list = [int(t) for t in args.n_list.split(",") if t.strip()]
    S = rates.build_set(cfg.source, cfg.weight, cfg.eta, cfg.eps)
    if args.mode == "count":
        analytic = rates.gamma_max_entropy(S)
        rows = oracle.rate_convergence(cfg.spec, analytic, n_list, "count")
    else:
        analytic = rates.kappa_inf_rate(cfg.storage, S)
        rows = oracle.rate_convergence(cfg.spec, analytic, n_list, "probability", storage=cfg.storage)
    unit = cfg.unit()
    table = [(r.n, float(_scale(r.empirical, unit)), float(_scale(r.analytic, unit)), float(_scale(r.gap, unit)))
             for r in rows]
    code = EXIT_INFEASIBLE if analytic.status == rates.INFEASIBLE else EXIT_OK
    return _csv(["n", "empirical", "analytic", "gap"], table), code


def _scale(x: float, unit: float) -> float:
    return x / unit if math.isfinite(x) else x


COMMANDS = {
    "chain-info": cmd_chain_info,
    "ldr-curve": cmd_ldr_curve,
    "rate": cmd_rate,
    "enumerate": cmd_enumerate,
    "simulate": cmd_simulate,
    "convergence": cmd_convergence,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ldselect", description="Large-deviation exponents of selected string sets.")
    p.add_argument("--log-base", choices=["e", "2", "l", "ell"], help="override the config's output unit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("chain-info", help="stationary law, entropy rate and validity")
    s.add_argument("config")
    s = sub.add_parser("ldr-curve", help="closed-form vs numeric binary rate function (CSV)")
    s.add_argument("config", nargs="?")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--points", type=int, default=99)
    s = sub.add_parser("rate", help="kappa, gamma (and iota) as JSON")
    s.add_argument("config")
    s = sub.add_parser("enumerate", help="exact count and storage probability (JSON)")
    s.add_argument("config")
    s.add_argument("--n", type=int, required=True)
    s = sub.add_parser("simulate", help="Monte Carlo storage probability (JSON)")
    s.add_argument("config")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--trials", type=int, default=100_000)
    s = sub.add_parser("convergence", help="(1/n) log b_n or (1/n) log p_st against the analytic rate (CSV)")
    s.add_argument("config")
    s.add_argument("--n-list", required=True, help="comma-separated ascending lengths")
    s.add_argument("--mode", choices=["count", "probability"], default="count")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config) if getattr(args, "config", None) else None
        if cfg is not None and args.log_base:
            cfg.log_base = "ell" if args.log_base in ("l", "ell") else args.log_base
        text, code = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SizeError as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except LDPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(text, cfg.output_path if cfg else None)
    return code


if __name__ == "__main__":
    sys.exit(main())
