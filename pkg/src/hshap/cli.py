"""Command-line front end.

Subcommands: ``generate`` (synthetic dataset), ``baseline`` (per-feature
mean over a dataset), ``explain`` (saliency maps for one image or a whole
dataset), ``ablate`` (top-k removal curve), ``theory`` (visited-node formula
vs. simulation), ``replay`` (re-run a recorded manifest).

Exit codes: 0 success, 2 usage errors, 3 bridge or I/O failures. Every run
writes a manifest (run.json) that ``replay`` can re-execute.
"""

from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bridge import BridgeConfig, BridgeOracle
from .errors import BridgeError, HshapError
from .explain import (
    BREADTH_FIRST,
    DEPTH_FIRST,
    ExplainerConfig,
    NodeScore,
    SaliencyMap,
    Tolerance,
    explain,
)
from .masking import Baseline, compute_baseline, load_baseline, save_baseline
from .metrics import ablate_topk, f1_score, write_curve_csv, write_report_csv
from .netpbm import read_pgm, read_ppm, write_pgm
from .synthetic import (
    PixelMilOracle,
    SyntheticSpec,
    generate,
    read_manifest,
    write_dataset,
)
from .theory import MilParams, expected_visited_nodes, simulate_visited_nodes

USAGE_EXIT = 2
BRIDGE_EXIT = 3


def _versions() -> dict:
    return {
        "hshap": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def _write_run_manifest(out_dir: Path, command: str, options: dict, extra: dict):
    manifest = {
        "command": command,
        "options": options,
        "versions": _versions(),
        **extra,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "run.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
    return path


def _parse_size(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from None


def _parse_tau(text: str) -> tuple[str, float]:
    try:
        kind, value = text.split(":", 1)
        if kind not in ("abs", "rel"):
            raise ValueError
        return kind, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected abs:FLOAT or rel:PCT, got {text!r}"
        ) from None


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints: {text!r}")


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hshap",
        description="Hierarchical Shapley saliency maps and their validators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic shapes dataset")
    gen.add_argument("--out", required=True)
    gen.add_argument("--count", type=int, default=200)
    gen.add_argument("--size", type=_parse_size, default=(64, 64), metavar="HxW")
    gen.add_argument("--shape-size", type=int, default=8)
    gen.add_argument("--crosses", type=int, default=None,
                     help="exact crosses per positive image")
    gen.add_argument("--positive-fraction", type=float, default=0.5)
    gen.add_argument("--min-shapes", type=int, default=1)
    gen.add_argument("--max-shapes", type=int, default=10)
    gen.add_argument("--seed", type=int, default=0)

    base = sub.add_parser("baseline", help="per-feature mean over a dataset")
    base.add_argument("--dataset", required=True)
    base.add_argument("--out", required=True)

    exp = sub.add_parser("explain", help="compute saliency maps")
    src = exp.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="one PPM image")
    src.add_argument("--dataset", help="dataset directory with manifest.jsonl")
    exp.add_argument("--mask", help="ground-truth PGM for --input")
    exp.add_argument("--model", default="oracle",
                     help="'oracle' or 'bridge:COMMAND LINE'")
    exp.add_argument("--gamma", type=int, choices=(2, 4), default=4)
    exp.add_argument("--s", type=int, default=1, help="minimal feature area")
    exp.add_argument("--s-side", type=int, default=None,
                     help="minimal feature side length (squared into an area)")
    exp.add_argument("--tau", type=_parse_tau, default=("abs", 0.0),
                     metavar="abs:FLOAT|rel:PCT")
    exp.add_argument("--order", choices=(DEPTH_FIRST, BREADTH_FIRST),
                     default=DEPTH_FIRST)
    exp.add_argument("--breadth-inclusive", action="store_true",
                     help="use >= instead of > in breadth-first thresholding")
    exp.add_argument("--baseline", default="zero",
                     help="'zero' or a baseline file path")
    exp.add_argument("--head", type=int, default=0)
    exp.add_argument("--timeout", type=float, default=30.0)
    exp.add_argument("--max-batch", type=int, default=64)
    exp.add_argument("--jobs", type=int, default=1)
    exp.add_argument("--limit", type=int, default=None,
                     help="explain only the first N dataset images")
    exp.add_argument("--positives-only", action="store_true",
                     help="skip dataset images with label 0")
    exp.add_argument("--out", required=True)

    abl = sub.add_parser("ablate", help="top-k removal curve")
    abl.add_argument("--input", required=True)
    abl.add_argument("--map", required=True, help="saliency JSON from explain")
    abl.add_argument("--model", default="oracle")
    abl.add_argument("--mask", help="ground-truth PGM (oracle model)")
    abl.add_argument("--baseline", default="zero")
    abl.add_argument("--ks", type=_parse_int_list, required=True)
    abl.add_argument("--head", type=int, default=0)
    abl.add_argument("--timeout", type=float, default=30.0)
    abl.add_argument("--max-batch", type=int, default=64)
    abl.add_argument("--out", required=True, help="CSV output path")

    thr = sub.add_parser("theory", help="visited-node formula vs simulation")
    thr.add_argument("--n", type=int, default=64)
    thr.add_argument("--gamma", type=int, choices=(2, 4), default=2)
    thr.add_argument("--rho-grid", type=_parse_float_list,
                     default=[0.0, 0.01, 0.02, 0.05, 0.1, 0.25, 0.5, 1.0])
    thr.add_argument("--trials", type=int, default=1000)
    thr.add_argument("--seed", type=int, default=0)
    thr.add_argument("--jobs", type=int, default=1)
    thr.add_argument("--out", required=True, help="CSV output path")

    rep = sub.add_parser("replay", help="re-run a recorded manifest")
    rep.add_argument("manifest")
    rep.add_argument("--out", required=True)

    return parser


def _load_baseline_arg(text: str) -> Baseline | None:
    if text == "zero":
        return None
    return load_baseline(text)


def _make_oracle(model: str, args, image: np.ndarray, mask_path):
    """Build the scoring backend for one image."""
    if model == "oracle":
        if mask_path is None:
            raise HshapError("--model oracle needs a ground-truth mask")
        mask = read_pgm(mask_path) > 0
        if mask.shape != image.shape[1:]:
            raise HshapError(
                f"mask {mask.shape} does not match image {image.shape[1:]}"
            )
        return PixelMilOracle(mask)
    if model.startswith("bridge:"):
        config = BridgeConfig(
            command=model.split(":", 1)[1],
            shape=image.shape,
            score_head=args.head,
            timeout=args.timeout,
            max_batch=args.max_batch,
        )
        return BridgeOracle(config)
    raise HshapError(f"unknown model spec {model!r}")


def _render_map_pgm(saliency: SaliencyMap) -> np.ndarray:
    grid = saliency.phi_grid
    peak = float(grid.max())
    if peak <= 0:
        return np.zeros(saliency.shape, dtype=np.uint8)
    return np.round(grid / peak * 255.0).astype(np.uint8)


def _render_nodes_pgm(shape: tuple[int, int], nodes: list[NodeScore]) -> np.ndarray:
    """Paint raw node coefficients, gray 128 = zero, in visit order."""
    canvas = np.zeros(shape)
    peak = max(
        (float(np.max(np.abs(ns.coefficients))) for ns in nodes), default=0.0
    )
    for ns in nodes:
        for child, value in zip(ns.children, ns.coefficients):
            canvas[child.row_slice, child.col_slice] = value
    if peak <= 0:
        return np.full(shape, 128, dtype=np.uint8)
    scaled = 128.0 + 127.0 * canvas / peak
    return np.round(np.clip(scaled, 0, 255)).astype(np.uint8)


def _saliency_json(saliency: SaliencyMap) -> dict:
    return {
        "shape": list(saliency.shape),
        "phi": saliency.phi.tolist(),
        "leaves": [leaf.to_list() for leaf in saliency.relevant_leaves],
        "evals": saliency.evaluations_used,
        "visited": saliency.visited_nodes,
        "wall_ms": saliency.wall_time * 1000.0,
    }


def _explainer_config(args) -> ExplainerConfig:
    kind, value = args.tau
    if kind == "rel" and args.order == DEPTH_FIRST:
        raise HshapError("depth-first traversal requires an absolute tolerance")
    tolerance = (
        Tolerance.absolute(value) if kind == "abs" else Tolerance.percentile(value)
    )
    s = args.s_side**2 if args.s_side is not None else args.s
    return ExplainerConfig(
        gamma=args.gamma,
        min_feature_size=s,
        tolerance=tolerance,
        traversal=args.order,
        score_head=args.head,
        breadth_inclusive=args.breadth_inclusive,
    )


def _explain_one(job) -> dict:
    args, cfg, out_dir, image_id, image_path, mask_path = job
    image = read_ppm(image_path)
    baseline = _load_baseline_arg(args.baseline)
    oracle = _make_oracle(args.model, args, image, mask_path)
    try:
        saliency, nodes = explain(image, oracle, cfg, baseline)
    finally:
        if hasattr(oracle, "close"):
            oracle.close()

    stem = Path(image_path).stem
    phi_path = out_dir / f"{stem}.phi.json"
    map_path = out_dir / f"{stem}.map.pgm"
    nodes_path = out_dir / f"{stem}.nodes.pgm"
    with open(phi_path, "w") as fh:
        json.dump(_saliency_json(saliency), fh)
    write_pgm(map_path, _render_map_pgm(saliency))
    write_pgm(nodes_path, _render_nodes_pgm(saliency.shape, nodes))

    row = {
        "id": image_id,
        "image": str(image_path),
        "f1": None,
        "precision": None,
        "recall": None,
        "evals": saliency.evaluations_used,
        "visited": saliency.visited_nodes,
        "wall_ms": saliency.wall_time * 1000.0,
        "phi": phi_path.name,
        "map": map_path.name,
        "nodes": nodes_path.name,
    }
    if mask_path is not None:
        truth = read_pgm(mask_path) > 0
        report = f1_score(saliency.phi, truth.reshape(-1))
        row.update(f1=report.f1, precision=report.precision, recall=report.recall)
    return row


def run_explain(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = _explainer_config(args)

    jobs = []
    if args.input:
        mask = Path(args.mask) if args.mask else None
        jobs.append((args, cfg, out_dir, 0, Path(args.input), mask))
    else:
        dataset = Path(args.dataset)
        rows = read_manifest(dataset / "manifest.jsonl")
        if args.positives_only:
            rows = [r for r in rows if r["label"] == 1]
        if args.limit is not None:
            rows = rows[: args.limit]
        for row in rows:
            jobs.append(
                (
                    args,
                    cfg,
                    out_dir,
                    row["id"],
                    dataset / row["image_path"],
                    dataset / row["mask_path"],
                )
            )

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows_out = list(pool.map(_explain_one, jobs))
    else:
        rows_out = [_explain_one(job) for job in jobs]

    kind, value = args.tau
    method = f"hshap-{args.order}-{kind}{value:g}-s{cfg.min_feature_size}"
    write_report_csv(
        out_dir / "report.csv",
        [
            {
                "method": method,
                "f1": "" if row["f1"] is None else repr(row["f1"]),
                "evals": row["evals"],
                "wall_time": repr(row["wall_ms"] / 1000.0),
            }
            for row in rows_out
        ],
    )
    _write_run_manifest(
        out_dir, "explain", _options(args), {"images": rows_out}
    )
    return 0


def run_generate(args) -> int:
    height, width = args.size
    spec = SyntheticSpec(
        height=height,
        width=width,
        shape_size=args.shape_size,
        n_shapes=(args.min_shapes, args.max_shapes),
        n_crosses=args.crosses,
        seed=args.seed,
    )
    instances = generate(spec, args.count, args.positive_fraction)
    out_dir = Path(args.out)
    manifest = write_dataset(instances, out_dir)
    _write_run_manifest(
        out_dir, "generate", _options(args), {"dataset_manifest": manifest.name}
    )
    return 0


def run_baseline(args) -> int:
    dataset = Path(args.dataset)
    rows = read_manifest(dataset / "manifest.jsonl")
    samples = (read_ppm(dataset / row["image_path"]) for row in rows)
    baseline = compute_baseline(samples)
    save_baseline(args.out, baseline)
    _write_run_manifest(
        Path(args.out).parent, "baseline", _options(args), {"baseline": args.out}
    )
    return 0


def run_ablate(args) -> int:
    image = read_ppm(args.input)
    with open(args.map) as fh:
        saliency = json.load(fh)
    phi = np.asarray(saliency["phi"], dtype=np.float64)
    baseline = _load_baseline_arg(args.baseline)
    oracle = _make_oracle(args.model, args, image, args.mask)
    try:
        curve = ablate_topk(image, phi, oracle, baseline, args.ks, args.head)
    finally:
        if hasattr(oracle, "close"):
            oracle.close()
    write_curve_csv(args.out, curve)
    _write_run_manifest(
        Path(args.out).parent, "ablate", _options(args), {"curve": args.out}
    )
    return 0


def run_theory(args) -> int:
    params_grid = [
        MilParams(n=args.n, gamma=args.gamma, rho=rho) for rho in args.rho_grid
    ]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho", "expected", "simulated", "stderr"])
        for params in params_grid:
            formula = expected_visited_nodes(params)
            sim = simulate_visited_nodes(params, args.trials, args.seed, args.jobs)
            writer.writerow(
                [params.rho, repr(formula), repr(sim.mean), repr(sim.stderr)]
            )
    _write_run_manifest(
        Path(args.out).parent, "theory", _options(args), {"csv": args.out}
    )
    return 0


def run_replay(args) -> int:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    command = manifest["command"]
    if command not in _HANDLERS or command == "replay":
        raise HshapError(f"cannot replay command {command!r}")
    options = dict(manifest["options"])
    options["out"] = args.out
    replay_ns = argparse.Namespace(**options)
    return _HANDLERS[command](replay_ns)


def _options(args) -> dict:
    options = {k: v for k, v in vars(args).items() if k != "command"}
    return options


_HANDLERS = {
    "generate": run_generate,
    "baseline": run_baseline,
    "explain": run_explain,
    "ablate": run_ablate,
    "theory": run_theory,
    "replay": run_replay,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except BridgeError as exc:
        print(f"bridge error: {exc}", file=sys.stderr)
        return BRIDGE_EXIT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return BRIDGE_EXIT
    except HshapError as exc:
        parser.exit(USAGE_EXIT, f"error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
