"""Command-line interface.

Subcommands: synth, detect, propose, select, pipeline, eval, ablate. Every
configuration field is a ``--section.name`` flag; ``--config`` reads a flat
``key=value`` file that flags override. Exit codes: 0 success, 2 input error,
3 pipeline error. Outputs are only written once a command has fully succeeded.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .detection import detect_corners, threshold_points
from .metrics import curve_recovery, evaluate
from .pipeline import PipelineConfig, PipelineError, propose, run_pipeline, score_cloud
from .selection import select
from .synthdata import FIXTURE_SPECS, CurveBudget, SceneSpec, add_noise, generate, scene_name, subsample

EXIT_OK, EXIT_INPUT, EXIT_PIPELINE = 0, 2, 3


class InputError(Exception):
    pass


# --------------------------------------------------------------------------- #
# Configuration
# --------------------------------------------------------------------------- #


def read_config_file(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    for k, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{k}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def format_config(cfg: PipelineConfig) -> str:
    return "".join(f"{k}={'none' if v is None else v}\n" for k, v in sorted(cfg.flat().items()))


def resolve_config(args) -> PipelineConfig:
    overrides = read_config_file(args.config) if args.config else {}
    for key in PipelineConfig().flat():
        value = getattr(args, _dest(key), None)
        if value is not None:
            overrides[key] = value
    if args.seed is not None:
        overrides["proposals.seed"] = str(args.seed)
    try:
        return PipelineConfig().with_overrides(overrides)
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad configuration: {exc}") from exc


def _dest(key: str) -> str:
    return "cfg__" + key.replace(".", "__")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration (defaults in parentheses)")
    g.add_argument("--config", help="flat key=value file; flags override it")
    g.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")
    g.add_argument("--seed", type=int, help="seed for every random choice")
    for key, value in PipelineConfig().flat().items():
        g.add_argument(f"--{key}", dest=_dest(key), metavar="V", help=f"({value})")


# --------------------------------------------------------------------------- #
# Helpers
# --------------------------------------------------------------------------- #


def _need(path, what: str) -> Path:
    if path is None:
        raise InputError(f"missing {what}")
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{what} not found: {path}")
    return p


def _load_inputs(args, cfg: PipelineConfig):
    """Cloud, labels, ground-truth curves and score override from --in/--gt/--scores."""
    ply = _need(args.inp, "input cloud (--in)")
    try:
        cloud = io.load_cloud(ply)
        gt = curves = None
        if getattr(args, "gt", None):
            gt, curves, _ = io.load_ground_truth(ply, _need(args.gt, "ground truth (--gt)"))
        scores = None
        if getattr(args, "scores", None):
            scores = io.read_scores(_need(args.scores, "scores (--scores)"), len(cloud))
    except (io.FormatError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(str(exc)) from exc
    if cfg.scorer == "oracle" and gt is None and scores is None:
        raise InputError("the oracle scorer needs --gt")
    return cloud, gt, curves, scores


def _curves_payload(curveset, edge_idx, mode: str) -> dict:
    return io.curveset_dict(curveset, {"mode": mode, "edge_points": np.asarray(edge_idx).tolist()})


def _report_dict(result) -> dict:
    out = {"mode": result.mode_used, "open_curves": len(result.curves.open),
           "closed_curves": len(result.curves.closed), "corners": len(result.corners),
           "edge_points": int(len(result.detections.edge_idx))}
    if result.segmentation_precision is not None:
        out["segmentation_precision"] = float(result.segmentation_precision)
    if result.report is not None:
        out.update({k: v for k, v in result.report.row().items() if k != "scene"})
    return out


def _finish(outputs: dict) -> None:
    for path, data in outputs.items():
        io.atomic_write(path, data)


def _scene_pairs(suite: Path) -> list[tuple[str, Path, Path]]:
    if not suite.is_dir():
        raise InputError(f"suite directory not found: {suite}")
    pairs = []
    for ply in sorted(suite.glob("*.ply")):
        js = ply.with_suffix(".json")
        if js.is_file():
            pairs.append((ply.stem, ply, js))
    if not pairs:
        raise InputError(f"no scenes (*.ply with a matching .json) in {suite}")
    return pairs


# --------------------------------------------------------------------------- #
# Subcommands
# --------------------------------------------------------------------------- #


def cmd_synth(args, cfg) -> dict:
    out = Path(args.out)
    if args.suite:
        specs = list(FIXTURE_SPECS)
    else:
        budget = CurveBudget(lines=args.lines, arcs=args.arcs, circles=args.circles, bsplines=args.bsplines)
        specs = [SceneSpec(seed=args.seed if args.seed is not None else 0, n_points=args.n_points,
                           curve_budget=budget, solid_kind=args.kind)]
    scenes = _map(_synth_one, [(s, args.noise, args.points) for s in specs], args.workers)
    outputs = {}
    for spec, scene in zip(specs, scenes):
        stem = out / scene_name(spec)
        ply, js, side = io.scene_files(stem)
        blobs = io.scene_blobs(scene, stem)
        outputs.update({ply: blobs[0], js: blobs[1], side: blobs[2]})
    return outputs


def _synth_one(job):
    spec, noise, points = job
    scene = generate(spec)
    if noise:
        scene = add_noise(scene, noise)
    if points and points < len(scene.cloud):
        scene = subsample(scene, points, seed=spec.seed)
    return scene


def cmd_detect(args, cfg) -> dict:
    cloud, gt, _, scores = _load_inputs(args, cfg)
    try:
        scores = score_cloud(cloud, cfg, gt, scores)
        det = threshold_points(cloud, scores, cfg.detection)
        corners = detect_corners(cloud, det, cfg.detection)
    except (ValueError, io.FormatError) as exc:
        raise PipelineError("detection", exc) from exc
    payload = {
        "edge_points": det.edge_idx.tolist(),
        "corners": [{"index": c.index, "position": np.asarray(c.position).tolist(), "prob": c.prob}
                    for c in corners],
    }
    outputs = {Path(args.out): io.dumps_json(payload)}
    if args.scores_out:
        outputs[Path(args.scores_out)] = io.scores_bytes(scores)
    return outputs


def cmd_propose(args, cfg) -> dict:
    cloud, gt, _, scores = _load_inputs(args, cfg)
    try:
        scores = score_cloud(cloud, cfg, gt, scores)
    except (ValueError, io.FormatError) as exc:
        raise PipelineError("scoring", exc) from exc
    det, corners, open_props, closed_props, mode = propose(cloud, scores, cfg, gt)
    meta = json.dumps({"type": "meta", "mode": mode, "edge_points": det.edge_idx.tolist()}, sort_keys=True)
    return {Path(args.out): meta + "\n" + io.proposals_jsonl(open_props, closed_props)}


def cmd_select(args, cfg) -> dict:
    path = _need(args.proposals, "proposals (--proposals)")
    try:
        opens, closeds = io.read_proposals(path)
        meta = io.read_proposals_meta(path)
    except (io.FormatError, json.JSONDecodeError) as exc:
        raise InputError(str(exc)) from exc
    try:
        curves = select(opens, closeds, cfg.selection)
    except Exception as exc:  # noqa: BLE001
        raise PipelineError("selection", exc) from exc
    outputs = {Path(args.out): io.dumps_json(_curves_payload(curves, meta.get("edge_points", []),
                                                             meta.get("mode", cfg.mode)))}
    if args.export_obj:
        outputs[Path(args.export_obj)] = io.obj_text(curves.curves)
    return outputs


def cmd_pipeline(args, cfg) -> dict:
    cloud, gt, gt_curves, scores = _load_inputs(args, cfg)
    result = run_pipeline(cloud, gt, cfg, gt_curves, scores, scene=Path(args.inp).stem)
    outputs = {Path(args.out): io.dumps_json(_curves_payload(result.curves, result.detections.edge_idx,
                                                             result.mode_used))}
    if args.report:
        outputs[Path(args.report)] = io.dumps_json(_report_dict(result))
    if args.export_obj:
        outputs[Path(args.export_obj)] = io.obj_text(result.curves.curves)
    if args.dump_dir:
        stem = Path(args.dump_dir) / Path(args.inp).stem
        outputs[stem.with_suffix(".scores.bin")] = io.scores_bytes(result.scores)
        meta = json.dumps({"type": "meta", "mode": result.mode_used,
                           "edge_points": result.detections.edge_idx.tolist()}, sort_keys=True)
        outputs[stem.with_suffix(".proposals.jsonl")] = meta + "\n" + io.proposals_jsonl(
            result.open_proposals, result.closed_proposals)
    return outputs


def cmd_eval(args, cfg) -> dict:
    pred_path = _need(args.pred, "predicted curves (--pred)")
    gt_path = _need(args.gt, "ground truth (--gt)")
    try:
        pred_data = io.read_json(pred_path)
        pred = io.read_curves(pred_path)
        gt_meta = io.read_json(gt_path)
        truth = io.read_curves(gt_path)
    except (io.FormatError, KeyError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    scale = gt_meta.get("bbox_diagonal")
    pred_edges = (pred_data.get("meta") or {}).get("edge_points", [])
    gt_edges = np.flatnonzero(np.asarray(gt_meta.get("point_curve_ids", []), dtype=int) >= 0)
    report = evaluate(pred, truth, pred_edges, gt_edges, scale=scale, scene=gt_path.stem)
    out = {k: v for k, v in report.row().items() if k != "scene"}
    if scale:
        out["curve_recovery"] = curve_recovery(pred, truth, scale)
    payload = io.dumps_json(out)
    if args.report:
        return {Path(args.report): payload}
    sys.stdout.write(payload)
    return {}


def _ablate_job(job):
    name, ply, js, cfg, knob, value = job
    try:
        cloud = io.load_cloud(ply)
        gt, curves, _ = io.load_ground_truth(ply, js)
    except (io.FormatError, ValueError, KeyError) as exc:
        raise InputError(f"{ply}: {exc}") from exc
    result = run_pipeline(cloud, gt, cfg, curves, scene=name)
    row = result.report.row()
    return [name, knob, value, row["ecd"], row["iou"], row["precision"], row["recall"],
            result.segmentation_precision]


def cmd_ablate(args, cfg) -> dict:
    matches = [k for k in cfg.flat() if k == args.knob or k.endswith("." + args.knob)]
    if len(matches) != 1:
        raise InputError(f"knob {args.knob!r} matches {len(matches)} configuration keys")
    knob = matches[0]
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise InputError("--values is empty")
    try:
        cfgs = [cfg.with_overrides({knob: v}) for v in values]
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad value for {knob}: {exc}") from exc
    scenes = _scene_pairs(Path(args.suite))
    jobs = [(name, ply, js, c, knob, v) for v, c in zip(values, cfgs) for name, ply, js in scenes]
    rows = _map(_ablate_job, jobs, args.workers)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scene", "knob", "value", "ecd", "iou", "precision", "recall", "segmentation_precision"])
    for r in rows:
        w.writerow(r[:3] + [repr(float(x)) for x in r[3:]])
    if args.out:
        return {Path(args.out): buf.getvalue()}
    sys.stdout.write(buf.getvalue())
    return {}


def _map(fn, jobs: Sequence, workers: int) -> list:
    """Order-preserving map, optionally over a process pool."""
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


# --------------------------------------------------------------------------- #
# Parser
# --------------------------------------------------------------------------- #

COMMANDS = {
    "synth": cmd_synth, "detect": cmd_detect, "propose": cmd_propose, "select": cmd_select,
    "pipeline": cmd_pipeline, "eval": cmd_eval, "ablate": cmd_ablate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgecurves", description="Parametric feature-curve inference on point clouds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic scenes")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--suite", action="store_true", help="write the 20-scene fixture suite")
    p.add_argument("--kind", default="box_union", help="solid kind for a single scene")
    p.add_argument("--n-points", type=int, default=8096)
    p.add_argument("--lines", type=int, default=12)
    p.add_argument("--arcs", type=int, default=0)
    p.add_argument("--circles", type=int, default=0)
    p.add_argument("--bsplines", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0, help="normal-direction noise level X")
    p.add_argument("--points", type=int, help="subsample to this many points")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("detect", help="score points, threshold and run corner NMS")
    _io_flags(p, gt=True, scores=True)
    p.add_argument("--out", required=True, help="detections JSON")
    p.add_argument("--scores-out", help="write the per-point scores sidecar")

    p = sub.add_parser("propose", help="open and closed curve proposals as JSON lines")
    _io_flags(p, gt=True, scores=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("select", help="select curves from a proposals file")
    p.add_argument("--proposals", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--export-obj")

    p = sub.add_parser("pipeline", help="run every stage end to end")
    _io_flags(p, gt=True, scores=True)
    p.add_argument("--out", required=True, help="curves JSON")
    p.add_argument("--report", help="metrics JSON (needs --gt)")
    p.add_argument("--export-obj", help="OBJ polylines, 64 samples per curve")
    p.add_argument("--dump-dir", help="also write the scores sidecar and proposals here")

    p = sub.add_parser("eval", help="metrics for a curves file against a scene")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--report")

    p = sub.add_parser("ablate", help="sweep one knob over a scene directory")
    p.add_argument("--knob", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--suite", required=True, help="directory of scene .ply/.json pairs")
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.add_argument("--workers", type=int, default=1)

    for name, p in sub.choices.items():
        _add_config_flags(p)
    return parser


def _io_flags(p, gt: bool, scores: bool) -> None:
    p.add_argument("--in", dest="inp", required=True, help="input PLY")
    if gt:
        p.add_argument("--gt", help="scene JSON with labels and curves")
    if scores:
        p.add_argument("--scores", help="score sidecar to use instead of a scorer")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.print_config:
            sys.stdout.write(format_config(cfg))
            return EXIT_OK
        outputs = COMMANDS[args.command](args, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PipelineError as exc:
        print(f"pipeline error in {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    _finish(outputs)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
