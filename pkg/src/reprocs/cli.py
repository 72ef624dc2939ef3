"""Command-line entry point: ``reprocs run | bounds | gen``.

Exit status is 0 on success, 1 for configuration errors and 2 for failures
while running.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields

from . import bounds
from .experiment import ConfigError, load_config, records_csv, records_json, run_experiment, write_records
from .signal_model import ModelConfig, dump_stream, gen_model

_logger = logging.getLogger("reprocs")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

BOUNDS_KEYS = ("r0", "J", "c", "n", "zeta", "gamma_new", "gamma_star", "lambda_minus", "f")


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return doc


def cmd_run(args) -> int:
    cfg = load_config(args.config, trials=args.trials, seed=args.seed, fmt=args.format)
    out = args.out or cfg.output_path
    try:
        result = run_experiment(cfg)
    except Exception as exc:  # noqa: BLE001
        _logger.error("run failed: %s", exc)
        return EXIT_RUNTIME
    if out:
        try:
            write_records(result, out, cfg.output_format)
        except OSError as exc:
            _logger.error("%s", exc)
            return EXIT_RUNTIME
    else:
        text = records_csv(result) if cfg.output_format == "csv" else records_json(result)
        sys.stdout.write(text)
    agg = result.aggregate()
    print(
        f"trials ok {agg['trials_ok']}/{agg['trials']}, exact-support rate "
        f"{agg['support_exact_rate']:.4f}",
        file=sys.stderr,
    )
    return EXIT_RUNTIME if not result.trials_ok else EXIT_OK


def _bounds_inputs(doc: dict) -> tuple[dict, bounds.BoundParams | None, int | None]:
    missing = [k for k in BOUNDS_KEYS if k not in doc]
    if missing:
        raise ConfigError(f"bounds params missing keys: {missing}")
    extra = set(doc) - set(BOUNDS_KEYS) - {"K_max", "bound_params"}
    if extra:
        raise ConfigError(f"unknown bounds keys: {sorted(extra)}")
    kw = {k: doc[k] for k in BOUNDS_KEYS}
    bp = None
    if "bound_params" in doc:
        allowed = {f.name for f in fields(bounds.BoundParams)}
        bad = set(doc["bound_params"]) - allowed
        if bad:
            raise ConfigError(f"unknown bound_params keys: {sorted(bad)}")
        try:
            bp = bounds.BoundParams(**doc["bound_params"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid bound_params: {exc}") from exc
    return kw, bp, doc.get("K_max")


def _text_table(rep: dict) -> str:
    lines = [f"{'K':<12}{rep['K']}", f"{'xi0':<12}{rep['xi0']:.6g}",
             f"{'alpha_add':<12}{rep['alpha_add']}", f"{'zeta cap':<12}{rep['zeta_cap']:.6g}"]
    if "zeta_plus" in rep:
        lines.append("k   zeta_k^+")
        lines += [f"{k:<4}{v:.6f}" for k, v in enumerate(rep["zeta_plus"])]
        lines.append(f"envelope 0.6^k + 0.15 c zeta holds: {rep['envelope_ok']}")
    else:
        lines.append(f"zeta recursion: {rep['zeta_plus_error']}")
    if "fact_checks" in rep:
        lines.append("plug-in bound            value        holds")
        lines += [f"{it['name']:<25}{it['value']:<13.6g}{it['holds']}" for it in rep["fact_checks"]]
    else:
        lines.append(f"plug-in bounds: {rep['fact_checks_error']}")
    return "\n".join(lines) + "\n"


def cmd_bounds(args) -> int:
    doc = _read_json(args.params)
    kw, bp, K_max = _bounds_inputs(doc)
    try:
        rep = bounds.bounds_report(**kw, K_max=K_max, p=bp)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.format == "text":
        sys.stdout.write(_text_table(rep))
    else:
        sys.stdout.write(json.dumps(rep, indent=1) + "\n")
    return EXIT_OK


def cmd_gen(args) -> int:
    doc = _read_json(args.config)
    model_doc = dict(doc.get("model", doc))
    if args.seed is not None:
        model_doc["seed"] = args.seed
    try:
        model = ModelConfig(**model_doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model: {exc}") from exc
    try:
        paths = dump_stream(gen_model(model), args.out)
    except OSError as exc:
        _logger.error("%s", exc)
        return EXIT_RUNTIME
    print("wrote " + ", ".join(str(p) for p in paths), file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reprocs", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int, help="base seed (trial i uses seed + i)")
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("--out", help="output file (default: config output_path, else stdout)")
    run.set_defaults(func=cmd_run)

    bnd = sub.add_parser("bounds", help="evaluate the guarantee quantities")
    bnd.add_argument("--params", required=True)
    bnd.add_argument("--format", choices=("json", "text"), default="text")
    bnd.set_defaults(func=cmd_bounds)

    gen = sub.add_parser("gen", help="generate a stream and dump it")
    gen.add_argument("--config", required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int)
    gen.set_defaults(func=cmd_gen)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        _logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        _logger.error("failed: %s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
