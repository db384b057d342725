"""``gasforge`` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, emit_config, parse_config
from .experiment import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, run_experiment
from .model import PRESETS

log = logging.getLogger("gasforge")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gasforge", description="Sample Coulomb and log-gases.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the study described by a JSON config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--workers", type=int, default=None, help="worker processes (default: all cores)")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--out", default=None, help="output path prefix")

    sub.add_parser("list-models", help="list model presets")

    val = sub.add_parser("validate", help="check a config and print it with defaults filled")
    val.add_argument("--config", required=True, type=Path)
    return parser


def _load(path: Path, overrides=None):
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, overrides)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    if args.command == "list-models":
        for name, factory in sorted(PRESETS.items()):
            model = factory(2.0, 2)
            print(f"{name}\td={model.particle_dim}\t{type(model.confinement).__name__}\t{type(model.interaction).__name__}")
        return EXIT_OK

    try:
        overrides = {"seed": args.seed, "out": args.out} if args.command == "run" else None
        config = _load(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        sys.stdout.write(emit_config(config))
        return EXIT_OK

    if args.workers is not None and args.workers < 1:
        print("config error: workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(config, workers=args.workers)
    except Exception as exc:  # noqa: BLE001
        log.error("run aborted: %s", exc)
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in result.files.values():
        print(path)
    if result.status != EXIT_OK:
        print("run aborted; partial output flagged in meta", file=sys.stderr)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
