"""hshap-serve: wrap a model loader as a stdio protocol server."""

from __future__ import annotations

import argparse
import importlib
import sys

from .server import AdapterConfig, serve


def load_model(spec: str, args: dict[str, str]):
    """Resolve 'package.module:loader' and call it with --arg values.

    The loader returns either the model callable or a (callable, outputs)
    pair for multi-output models.
    """
    module_name, _, attr = spec.partition(":")
    if not module_name or not attr:
        raise ValueError(f"model spec must look like module:loader, got {spec!r}")
    loader = getattr(importlib.import_module(module_name), attr)
    loaded = loader(**args)
    if isinstance(loaded, tuple):
        model, outputs = loaded
        return model, int(outputs)
    return loaded, 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hshap-serve",
        description="Serve a Python model over the stdio scoring protocol.",
    )
    parser.add_argument(
        "--model", required=True, metavar="MODULE:LOADER",
        help="dotted path of a loader returning the model callable",
    )
    parser.add_argument(
        "--arg", action="append", default=[], metavar="KEY=VALUE",
        help="keyword argument passed to the loader (repeatable)",
    )
    parser.add_argument("--max-batch", type=int, default=1024)
    parser.add_argument(
        "--nondeterministic", action="store_true",
        help="advertise the model as nondeterministic in the handshake",
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    kwargs = {}
    for item in args.arg:
        key, sep, value = item.partition("=")
        if not sep:
            parser.error(f"--arg needs KEY=VALUE, got {item!r}")
        kwargs[key] = value
    try:
        model, outputs = load_model(args.model, kwargs)
    except (ImportError, AttributeError, ValueError, TypeError) as exc:
        print(f"could not load model: {exc}", file=sys.stderr)
        return 1
    config = AdapterConfig(
        model=model,
        outputs=outputs,
        max_batch=args.max_batch,
        deterministic=not args.nondeterministic,
    )
    return serve(config)


if __name__ == "__main__":
    sys.exit(main())
