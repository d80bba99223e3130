"""Command-line entry point: ``gatesim {gen-trace,enroll,run,compare,eval}``.

Configuration is one JSON file (``--config``) whose sections mirror the
dataclasses (``policy``, ``cost_model``, ``noise``, ``scenario``) plus
``seed``, ``trace_path``, ``database_path``, ``out`` and ``eval_window``.
Any scalar can be overridden with a dotted flag such as
``--policy.face_period 3``. Precedence is flag > file > default.

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from gatesim.embeddings import DatabaseFormatError, load_database, save_database
from gatesim.core import EMOTIONS
from gatesim.scheduler import GatingPolicy
from gatesim.simulator import (
    DEFAULT_EVAL_WINDOW,
    ScenarioSpec,
    TraceFormatError,
    compare,
    dumps_report,
    dumps_trace,
    evaluate,
    generate_trace,
    load_trace,
    outcomes_from_dict,
    run_simulation,
)
from gatesim.stages import NoiseConfig, StageCostModel, synthetic_enrollment

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

SECTIONS = {"policy": GatingPolicy, "cost_model": StageCostModel, "noise": NoiseConfig, "scenario": ScenarioSpec}
TOP_LEVEL = {"seed", "trace_path", "database_path", "out", "eval_window"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    policy: GatingPolicy
    cost_model: StageCostModel
    noise: NoiseConfig
    scenario: ScenarioSpec | None
    trace_path: str | None
    database_path: str | None
    out: str | None
    seed: int
    eval_window: int = DEFAULT_EVAL_WINDOW


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_overrides(tokens: list[str]) -> dict[str, Any]:
    """Turn ``--a.b value`` / ``--a.b=value`` tokens into ``{"a.b": value}``."""
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or "." not in tok.split("=", 1)[0]:
            raise ConfigError(f"unrecognized argument {tok!r}")
        if "=" in tok:
            key, raw = tok[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigError(f"missing value for {tok}")
            key, raw = tok[2:], tokens[i + 1]
            i += 2
        out[key] = _parse_value(raw)
    return out


def _set_dotted(doc: dict, key: str, value: Any) -> None:
    section, _, name = key.partition(".")
    if section not in SECTIONS or not name or "." in name:
        raise ConfigError(f"unknown override {key!r}")
    target = doc.get(section)
    if target is None:
        target = doc[section] = {}
    target[name] = value


def _build_section(name: str, values: dict | None, seed: int, force_seed: bool):
    cls = SECTIONS[name]
    values = dict(values or {})
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown field(s) in {name}: {', '.join(sorted(unknown))}")
    if "seed" in known and (force_seed or "seed" not in values):
        values["seed"] = seed
    if name == "scenario" and "extra_object_classes" in values:
        values["extra_object_classes"] = [tuple(item) for item in values["extra_object_classes"]]
    if name == "scenario" and "emotion_distribution" in values:
        dist = values["emotion_distribution"]
        if isinstance(dist, list):
            values["emotion_distribution"] = dict(zip(EMOTIONS, dist))
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def load_config_doc(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - TOP_LEVEL - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    return doc


def build_config(args: argparse.Namespace, overrides: dict[str, Any]) -> RunConfig:
    doc = copy.deepcopy(load_config_doc(args.config))
    for key, value in overrides.items():
        _set_dotted(doc, key, value)
    if args.policy is not None:
        _set_dotted(doc, "policy.mode", args.policy)
    if args.overhead_ms is not None:
        _set_dotted(doc, "cost_model.overhead_ms", args.overhead_ms)
    for flag in ("trace_path", "database_path", "out"):
        value = getattr(args, flag, None)
        if value is not None:
            doc[flag] = value

    force_seed = args.seed is not None
    seed = args.seed if force_seed else doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    window = doc.get("eval_window", DEFAULT_EVAL_WINDOW)
    if isinstance(window, bool) or not isinstance(window, int) or window < 1:
        raise ConfigError(f"eval_window must be a positive integer, got {window!r}")

    scenario = None
    if "scenario" in doc:
        scenario = _build_section("scenario", doc["scenario"], seed, force_seed)
    return RunConfig(
        policy=_build_section("policy", doc.get("policy"), seed, force_seed),
        cost_model=_build_section("cost_model", doc.get("cost_model"), seed, force_seed),
        noise=_build_section("noise", doc.get("noise"), seed, force_seed),
        scenario=scenario,
        trace_path=doc.get("trace_path"),
        database_path=doc.get("database_path"),
        out=doc.get("out"),
        seed=seed,
        eval_window=window,
    )


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _load_inputs(config: RunConfig):
    if (config.scenario is None) == (config.trace_path is None):
        raise ConfigError("exactly one of scenario or trace_path must be given")
    if config.database_path is None:
        raise ConfigError("database_path is required: the face stage needs an owner database")
    if not Path(config.database_path).is_file():
        raise ConfigError(f"database_path: file not found: {config.database_path}")
    if config.trace_path is not None and not Path(config.trace_path).is_file():
        raise ConfigError(f"trace_path: file not found: {config.trace_path}")
    try:
        db = load_database(config.database_path)
    except DatabaseFormatError as exc:
        raise ConfigError(f"database_path: {exc}") from None
    if config.trace_path is not None:
        try:
            trace = load_trace(config.trace_path)
        except TraceFormatError as exc:
            raise ConfigError(f"trace_path: {exc}") from None
    else:
        trace = generate_trace(config.scenario)
    return trace, db


def cmd_gen_trace(args, overrides) -> int:
    config = build_config(args, overrides)
    scenario = config.scenario or _build_section("scenario", {}, config.seed, True)
    if config.out is None:
        raise ConfigError("out is required for gen-trace")
    text = dumps_trace(generate_trace(scenario))
    _write(text, config.out)
    return EXIT_OK


def cmd_enroll(args, overrides) -> int:
    config = build_config(args, overrides)
    if args.count < 1:
        raise ConfigError("count must be >= 1")
    if args.sigma < 0:
        raise ConfigError("sigma must be >= 0")
    if not args.identity:
        raise ConfigError("identity must be nonempty")
    if config.out is None:
        raise ConfigError("out is required for enroll")
    db = synthetic_enrollment(args.identity, args.count, args.sigma, config.seed)
    save_database(db, config.out)
    return EXIT_OK


def cmd_run(args, overrides) -> int:
    config = build_config(args, overrides)
    trace, db = _load_inputs(config)
    report = run_simulation(trace, config.policy, db, config.cost_model, config.noise, config.eval_window)
    _write(dumps_report(report), config.out)
    return EXIT_OK


def cmd_compare(args, overrides) -> int:
    config = build_config(args, overrides)
    trace, db = _load_inputs(config)
    policy = config.policy
    if policy.mode != "adaptive":
        raise ConfigError("compare needs an adaptive policy; the baseline is derived from it")
    report = compare(trace, db, config.cost_model, config.noise, policy, config.eval_window)
    _write(dumps_report(report), config.out)
    return EXIT_OK


def _fmt(value) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def _print_metrics(title: str, metrics: dict) -> None:
    print(f"== {title}")
    m = metrics["matcher"]
    print(f"faces matched: {m['samples']}")
    if m["samples"]:
        c = m["confusion"]
        print(f"matcher confusion: tp={c['tp']} fp={c['fp']} tn={c['tn']} fn={c['fn']}")
        print(f"matcher accuracy: {_fmt(m['accuracy'])}  auc: {_fmt(m['auc'])}  ap: {_fmt(m['ap'])}")
    e = metrics["emotion"]
    print(f"emotion samples: {e['samples']}")
    if e["samples"]:
        print(f"emotion accuracy: {_fmt(e['accuracy'])}")
        for label, entry in e["per_class"].items():
            print(f"  {label:<8} auc={_fmt(entry['auc'])} ap={_fmt(entry['ap'])}")
        points = e["windowed_accuracy"]["points"]
        if points:
            values = [a for _, a in points]
            print(
                f"windowed accuracy (window {e['windowed_accuracy']['window']}): "
                f"min={min(values):.4f} max={max(values):.4f} last={values[-1]:.4f}"
            )


def cmd_eval(args, overrides) -> int:
    if overrides:
        raise ConfigError("eval takes no overrides")
    path = Path(args.report)
    if not path.is_file():
        raise ConfigError(f"report not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed report at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        if doc.get("kind") == "comparison":
            sections = [("baseline", doc["baseline"]), ("adaptive", doc["adaptive"])]
        else:
            sections = [(doc["policy"]["mode"], doc)]
        evaluated = []
        for title, section in sections:
            window = args.window or section.get("metrics", {}).get("emotion", {}).get(
                "windowed_accuracy", {}
            ).get("window", DEFAULT_EVAL_WINDOW)
            evaluated.append((title, evaluate(outcomes_from_dict(section), window)))
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"{path}: malformed report: {exc!r}") from None
    for title, metrics in evaluated:
        _print_metrics(title, metrics)
    if doc.get("kind") == "comparison":
        print(f"fps ratio: {doc['fps_ratio']:.4f}")
        print(f"module compute reduction: {doc['module_compute_reduction_pct']:.2f}%")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gatesim", description="Adaptive perception-pipeline gating simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, paths: bool = True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="seed for trace generation and stage noise")
        p.add_argument("--policy", choices=["adaptive", "baseline"], help="gating mode")
        p.add_argument("--overhead-ms", type=float, help="fixed per-frame overhead")
        p.add_argument("--out", help="output path (stdout when omitted, where allowed)")
        if paths:
            p.add_argument("--trace", dest="trace_path", help="trace file")
            p.add_argument("--db", dest="database_path", help="owner database (EMBDB1)")

    p = sub.add_parser("gen-trace", help="generate a scenario trace")
    common(p, paths=False)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("enroll", help="build a synthetic owner database")
    common(p, paths=False)
    p.add_argument("--identity", default="owner")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--sigma", type=float, default=0.05)
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("run", help="simulate one policy")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="baseline vs adaptive on one trace")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("eval", help="print metrics from a report")
    p.add_argument("report")
    p.add_argument("--window", type=int, help="sliding window for accuracy over time")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args, rest = parser.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        overrides = parse_overrides(rest)
        return args.func(args, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
