"""Config-driven runner: ``regeninc run | verify-all | list-models | emit-curve``.

Exit status is 0 when every verdict passes, 1 when any fails (or a run
stops on its cycle budget), 2 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import inspect
import io
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from . import theorem_suite as ts
from .cycle_models import REGISTRY, CycleModel, ParetoCounterexample, make_model
from .errors import BudgetExceeded
from .estimators import estimate_mean_curve
from .renewal_numerics import duration_table
from .streams import Streams

EXIT_PASS, EXIT_FAIL, EXIT_INVALID = 0, 1, 2
SEED_ENV = "REGEN_SEED"
MAX_SEED = 2**64 - 1

CHECKS = {
    "clt": ts.verify_clt,
    "moment_convergence": ts.verify_moment_convergence,
    "self_normalized_clt": ts.verify_self_normalized_clt,
    "weak_lln": ts.verify_weak_lln,
    "strong_lln_gap": ts.verify_strong_lln_gap,
    "tightness_limit": ts.verify_tightness_limit,
    "overshoot_rate": ts.verify_overshoot_rate,
    "mean_rate": ts.verify_mean_rate,
    "mean_expansion": ts.verify_mean_expansion,
    "counterexample": ts.verify_counterexample,
}
# the argument each check receives the configured model through
MODEL_ARG = {"strong_lln_gap": "heavy", "counterexample": None}

QUANTITIES = {
    "mean_curve": ("mean_expansion", "mean_rate"),
    "ks_curve": ("clt",),
    "block_counts": ("strong_lln_gap",),
    "renewal_function": ("mean_expansion", "counterexample"),
}
CURVE_HEADER = ("abscissa", "value", "stderr")


class ConfigError(ValueError):
    pass


@dataclass
class CheckSpec:
    name: str
    overrides: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    model_kind: str
    model_params: dict
    checks: list
    declared: dict = field(default_factory=dict)
    seed: int | None = None
    format: str = "json"
    out: str | None = None

    def build_model(self) -> CycleModel:
        model = make_model(self.model_kind, **self.model_params)
        flags = model.hypotheses()
        for key, value in self.declared.items():
            if key not in flags:
                raise ConfigError(f"unknown moment flag {key!r}; known: {sorted(flags)}")
            if bool(value) != flags[key]:
                raise ConfigError(f"{key} declared {value} but {self.model_kind} has {flags[key]}")
        return model

    def echo(self, seed: int) -> dict:
        return {
            "model": {"kind": self.model_kind, "params": self.model_params, "declared": self.declared},
            "checks": [{"name": c.name, **c.overrides} for c in self.checks],
            "seed": seed,
            "format": self.format,
        }


def _check_seed(seed, origin: str) -> int:
    if isinstance(seed, str):
        try:
            seed = int(seed, 10)
        except ValueError:
            raise ConfigError(f"{origin}: seed must be an integer") from None
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"{origin}: seed must be an integer")
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError(f"{origin}: seed must be a 64-bit unsigned integer")
    return seed


def _check_overrides(name: str, overrides: dict) -> dict:
    params = inspect.signature(CHECKS[name]).parameters
    fixed = {"model", "streams", MODEL_ARG.get(name, "model")}
    out = {}
    for key, value in overrides.items():
        if key not in params or key in fixed:
            allowed = sorted(k for k in params if k not in fixed)
            raise ConfigError(f"check {name!r} has no option {key!r}; options: {allowed}")
        if key in ("t_grid", "c_list", "blocks"):
            if not isinstance(value, list) or not value or not all(isinstance(x, (int, float)) for x in value):
                raise ConfigError(f"{name}.{key} must be a non-empty list of numbers")
            if key != "blocks" and any(x <= 0 for x in value):
                raise ConfigError(f"{name}.{key} must be positive")
            if any(b <= a for a, b in zip(value, value[1:])):
                raise ConfigError(f"{name}.{key} must be increasing")
        if key == "light":
            if not isinstance(value, dict) or "kind" not in value:
                raise ConfigError(f"{name}.light must be a table with a 'kind'")
        out[key] = value
    return out


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a table")
    unknown = set(raw) - {"model", "checks", "seed", "format", "out"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    model = raw.get("model")
    if not isinstance(model, dict) or not isinstance(model.get("kind"), str):
        raise ConfigError("config needs a [model] table with a string 'kind'")
    if model["kind"] not in REGISTRY:
        raise ConfigError(f"unknown model kind {model['kind']!r}; known: {sorted(REGISTRY)}")
    extra = set(model) - {"kind", "params", "declared"}
    if extra:
        raise ConfigError(f"unknown [model] keys: {sorted(extra)}")
    checks_raw = raw.get("checks")
    if not isinstance(checks_raw, list) or not checks_raw:
        raise ConfigError("config needs at least one [[checks]] entry")
    checks = []
    for entry in checks_raw:
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            raise ConfigError("every [[checks]] entry needs a string 'name'")
        name = entry["name"]
        if name not in CHECKS:
            raise ConfigError(f"unknown check {name!r}; known: {sorted(CHECKS)}")
        overrides = {k: v for k, v in entry.items() if k != "name"}
        checks.append(CheckSpec(name, _check_overrides(name, overrides)))
    fmt = raw.get("format", "json")
    if fmt not in ("json", "csv"):
        raise ConfigError("format must be 'json' or 'csv'")
    seed = raw.get("seed")
    if seed is not None:
        seed = _check_seed(seed, "config")
    cfg = ExperimentConfig(
        model_kind=model["kind"],
        model_params=dict(model.get("params", {})),
        checks=checks,
        declared=dict(model.get("declared", {})),
        seed=seed,
        format=fmt,
        out=raw.get("out"),
    )
    model_obj = cfg.build_model()
    if any(c.name == "counterexample" for c in checks) and not isinstance(model_obj, ParetoCounterexample):
        raise ConfigError("the counterexample check needs a pareto_counterexample model")
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        return parse_config(tomllib.load(fh))


def resolve_seed(flag, config: ExperimentConfig | None) -> int:
    """``--seed`` wins over the config's seed, which wins over ``REGEN_SEED``."""
    if flag is not None:
        return _check_seed(flag, "--seed")
    if config is not None and config.seed is not None:
        return config.seed
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        return _check_seed(env.strip(), SEED_ENV)
    raise ConfigError(f"no seed given (use --seed, a config 'seed' or {SEED_ENV})")


def _call(spec: CheckSpec, model: CycleModel, streams: Streams) -> ts.Verdict:
    kwargs = dict(spec.overrides)
    for key in ("t_grid", "c_list", "blocks"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    if "light" in kwargs:
        light = kwargs["light"]
        kwargs["light"] = make_model(light["kind"], **light.get("params", {}))
    target = MODEL_ARG.get(spec.name, "model")
    if target is not None:
        kwargs[target] = model
    elif isinstance(model, ParetoCounterexample):
        kwargs.setdefault("alpha", model.params["alpha"])
        kwargs.setdefault("beta", model.params["beta"])
    return CHECKS[spec.name](streams=streams, **kwargs)


def execute(config: ExperimentConfig, seed: int, log=None):
    """Run the configured checks in order; returns (report, timings, status)."""
    model = config.build_model()
    streams = Streams(seed)
    verdicts, timings = [], {}
    status = EXIT_PASS
    for i, spec in enumerate(config.checks):
        start = time.perf_counter()
        try:
            verdict = _call(spec, model, streams).to_dict()
        except BudgetExceeded as exc:
            verdicts.append({"name": spec.name, "passed": False, "error": f"budget exceeded: {exc}"})
            timings[f"{i}:{spec.name}"] = time.perf_counter() - start
            status = EXIT_FAIL
            if log:
                log(f"FAIL {spec.name} (budget exceeded)")
            break
        timings[f"{i}:{spec.name}"] = time.perf_counter() - start
        verdicts.append(verdict)
        if not verdict["passed"]:
            status = EXIT_FAIL
        if log:
            log(f"{'PASS' if verdict['passed'] else 'FAIL'} {spec.name}")
    report = {
        "config": config.echo(seed),
        "verdicts": verdicts,
        # wall-clock varies run to run; it lives beside the report so the report itself is reproducible
        "timing": {"file": "timing.json", "unit": "seconds", "checks": list(timings)},
        "version": __version__,
    }
    return report, timings, status


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def verdict_rows(report: dict):
    yield ("check", "passed", "abscissa", "value", "threshold")
    for v in report["verdicts"]:
        for x, y in v.get("statistic_trajectory", []):
            yield (v["name"], v["passed"], x, y, v.get("threshold"))


def write_csv(rows, fh) -> None:
    writer = csv.writer(fh)
    for row in rows:
        writer.writerow(["" if x is None else x for x in row])


def write_report(report: dict, timings: dict, out_dir: Path, fmt: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(dump_json(report), encoding="utf-8")
    (out_dir / "timing.json").write_text(dump_json(timings), encoding="utf-8")
    if fmt == "csv":
        with open(out_dir / "verdicts.csv", "w", newline="", encoding="utf-8") as fh:
            write_csv(verdict_rows(report), fh)


# ---------------------------------------------------------------------------
# curves


def curve_rows(config: ExperimentConfig, quantity: str, seed: int) -> list:
    if quantity not in QUANTITIES:
        raise ConfigError(f"unknown quantity {quantity!r}; known: {sorted(QUANTITIES)}")
    spec = next((c for c in config.checks if c.name in QUANTITIES[quantity]), None)
    if spec is None:
        raise ConfigError(f"{quantity} needs one of the checks {list(QUANTITIES[quantity])} in the config")
    model = config.build_model()
    streams = Streams(seed)
    defaults = {k: p.default for k, p in inspect.signature(CHECKS[spec.name]).parameters.items()}
    opts = {**defaults, **spec.overrides}
    if quantity == "mean_curve":
        curve = estimate_mean_curve(model, opts["t_grid"], opts["replicates"], streams.child("mean_curve"))
        return [(p.t, p.adj_mean, p.adj_se) for p in curve]
    if quantity == "renewal_function":
        t_max = float(max(opts["t_grid"]))
        table = duration_table(model, t_max)
        return [(float(t), float(u), 0.0) for t, u in zip(table.grid, table.values)]
    verdict = _call(spec, model, streams)
    if quantity == "ks_curve":
        scale = verdict.details["ks_scale"]
        return [(t, ks, scale) for t, ks in verdict.statistic_trajectory]
    ses = verdict.details["heavy_block_se"]
    return [(j, m, float(se)) for (j, m), se in zip(verdict.statistic_trajectory, ses)]


# ---------------------------------------------------------------------------
# bundled suite

DEFAULT_SEED = 20_240_601

DEFAULT_SUITE = {
    "poisson": {
        "model": {"kind": "poisson_count", "params": {"lam": 2.0}},
        "checks": [
            {"name": "clt"},
            {"name": "moment_convergence"},
            {"name": "self_normalized_clt"},
            {"name": "weak_lln"},
            {"name": "mean_expansion", "replicates": 20_000},
            {"name": "mean_rate"},
        ],
    },
    "uniform_count": {
        "model": {"kind": "uniform_count", "params": {"width": 2.0}},
        "checks": [
            {"name": "clt"},
            {"name": "moment_convergence"},
            {"name": "self_normalized_clt"},
            {"name": "mean_expansion"},
            {"name": "mean_rate", "r": 0.5},
        ],
    },
    "arithmetic_count": {
        "model": {"kind": "arithmetic_count", "params": {"pmf": [0.5, 0.5]}},
        "checks": [{"name": "mean_expansion", "replicates": 20_000}, {"name": "weak_lln"}],
    },
    "arithmetic_unit": {
        "model": {"kind": "arithmetic_count", "params": {"pmf": [1.0]}},
        "checks": [{"name": "mean_expansion", "replicates": 1000}],
    },
    "heavy_spike": {
        "model": {"kind": "heavy_spike", "params": {"rate": 1.0}},
        "checks": [{"name": "weak_lln"}, {"name": "strong_lln_gap"}],
    },
    "counterexample": {
        "model": {"kind": "pareto_counterexample", "params": {"alpha": 1.5, "beta": 1.0}},
        "checks": [{"name": "counterexample"}],
    },
    "size_biased": {
        "model": {"kind": "linear_to_eta", "params": {"rate": 1.0, "slope": 0.0}},
        "checks": [
            {"name": "tightness_limit", "a": 1.0},
            {"name": "overshoot_rate", "selector": "xi", "r": 0.5},
        ],
    },
}


# ---------------------------------------------------------------------------
# entry points


def cmd_run(args) -> int:
    config = load_config(args.config)
    seed = resolve_seed(args.seed, config)
    fmt = args.format or config.format
    out = Path(args.out or config.out or "regen_report")
    report, timings, status = execute(config, seed, log=lambda s: print(s, file=sys.stderr))
    write_report(report, timings, out, fmt)
    return status


def cmd_verify_all(args) -> int:
    status = EXIT_PASS
    configs = {name: parse_config({**raw, "seed": DEFAULT_SEED}) for name, raw in DEFAULT_SUITE.items()}
    for name, config in configs.items():
        seed = resolve_seed(args.seed, config)
        report, timings, code = execute(config, seed, log=lambda s, n=name: print(f"{n}: {s}"))
        if args.out:
            write_report(report, timings, Path(args.out) / name, "json")
        status = max(status, code)
    print("all checks passed" if status == EXIT_PASS else "some checks failed")
    return status


def cmd_list_models(args) -> int:
    for kind, cls in REGISTRY.items():
        model = cls()
        desc = model.describe()
        flags = ", ".join(f"{k}: {'yes' if v else 'NO'}" for k, v in desc["hypotheses"].items())
        params = ", ".join(f"{k}={v}" for k, v in desc["params"].items())
        print(f"{kind}({params})")
        print(f"    {cls.summary}")
        print(f"    constraints: {desc['constraints']}")
        print(f"    moments: {flags}")
        for note in desc["notes"]:
            print(f"    note: {note}")
    return EXIT_PASS


def cmd_emit_curve(args) -> int:
    config = load_config(args.config)
    seed = resolve_seed(args.seed, config)
    rows = curve_rows(config, args.quantity, seed)
    buf = io.StringIO(newline="")
    write_csv([CURVE_HEADER, *rows], buf)
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8", newline="")
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="regeninc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the checks of a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed")
    p.add_argument("--out", help="report directory (default: config 'out' or ./regen_report)")
    p.add_argument("--format", choices=("csv", "json"))
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify-all", help="run the bundled default suite")
    p.add_argument("--seed")
    p.add_argument("--out", help="also write one report directory per suite entry")
    p.set_defaults(func=cmd_verify_all)

    p = sub.add_parser("list-models", help="catalogue of model kinds")
    p.set_defaults(func=cmd_list_models)

    p = sub.add_parser("emit-curve", help="plot-ready CSV for a check's statistic")
    p.add_argument("--config", required=True)
    p.add_argument("--quantity", required=True, choices=sorted(QUANTITIES))
    p.add_argument("--seed")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_emit_curve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, tomllib.TOMLDecodeError) as exc:
        # validation, precondition and hypothesis errors all derive from ValueError
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
