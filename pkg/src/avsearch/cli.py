"""Command line interface.

Verbs mirror the HTTP API: ingest, train, detect, index, search-images,
search-video, eval, cache gc, serve.  Every runtime config key can come
from a key=value config file (--config) and each key has a flag override.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

from .config import RuntimeConfig, load_config
from .detection import detect_multiview, nms
from .evaluation import average_precision, match_detections
from .imaging import load_image
from .manifest import (
    ground_truth,
    load_detections,
    load_manifest,
    training_sets,
    write_detections,
)
from .models import load_model, save_model
from .service import PyramidGauge, SearchService
from .training import TrainStats, train_detector
from .viewpoint import sample_view_grid

__all__ = ["main"]

log = logging.getLogger(__name__)


def _parse_size(text: str) -> int:
    """Byte count with optional K/M/G suffix (binary units)."""
    text = text.strip()
    factor = 1
    if text and text[-1].upper() in "KMG":
        factor = 1024 ** (1 + "KMG".index(text[-1].upper()))
        text = text[:-1]
    value = int(text)
    if value < 0:
        raise ValueError("size must be >= 0")
    return value * factor


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("runtime config")
    group.add_argument("--config", type=Path, default=None,
                       help="key=value config file")
    for f in dataclasses.fields(RuntimeConfig):
        kind = float if f.type == "float" else int
        group.add_argument(
            f"--{f.name.replace('_', '-')}",
            dest=f"cfg_{f.name}",
            type=kind,
            default=None,
            help=f"override {f.name} (default {f.default})",
        )


def _resolve_config(args) -> RuntimeConfig:
    cfg = load_config(args.config) if args.config else RuntimeConfig()
    overrides = {}
    for f in dataclasses.fields(RuntimeConfig):
        value = getattr(args, f"cfg_{f.name}", None)
        if value is not None:
            overrides[f.name] = value
    return cfg.replace(**overrides) if overrides else cfg


def _grid(cfg: RuntimeConfig):
    return sample_view_grid(cfg.t_max, math.radians(cfg.rotation_base_deg))


# ---------------------------------------------------------------------------
# verbs


def _cmd_ingest(args) -> int:
    cfg = _resolve_config(args)
    service = SearchService(cfg, args.data)
    records, diagnostics = service.ingest_path(args.repository)
    for rec in records:
        extra = f" fps={rec.fps:g}" if rec.kind == "video" else ""
        print(f"{rec.media_id}\t{rec.kind}\t{rec.frame_count} frame(s){extra}")
    for diag in diagnostics:
        print(f"warning: {diag}", file=sys.stderr)
    return 0


def _cmd_train(args) -> int:
    cfg = _resolve_config(args)
    rows = load_manifest(args.manifest)
    root = Path(args.manifest).parent
    positives, negative_paths = training_sets(rows, args.class_name)
    if not positives:
        print(f"error: no positive boxes for class {args.class_name!r}", file=sys.stderr)
        return 2
    pos = [(load_image(root / p), boxes) for p, boxes in positives]
    neg = [load_image(root / p) for p in negative_paths]
    stats = TrainStats()
    model = train_detector(
        pos, neg, args.class_name,
        cell_size=cfg.cell_size,
        levels_per_octave=cfg.levels_per_octave,
        min_cells=cfg.min_cells,
        c=cfg.svm_c,
        epochs=cfg.epochs,
        rounds=cfg.mining_rounds,
        negative_floor=cfg.negative_floor,
        max_negative_cache=cfg.max_negative_cache,
        seed=cfg.seed,
        stats=stats,
    )
    save_model(model, args.out)
    print(f"root {stats.root_w}x{stats.root_h} cells, "
          f"{stats.n_positives} positives, "
          f"{stats.n_initial_negatives} seed negatives, "
          f"mined {stats.mined_counts}")
    print(f"threshold {model.threshold:.6g}")
    print(f"saved {args.out}")
    return 0


def _cmd_detect(args) -> int:
    cfg = _resolve_config(args)
    model = load_model(args.model)
    image = load_image(args.image)
    grid = (sample_view_grid(1.0, math.radians(cfg.rotation_base_deg))
            if args.single_view else _grid(cfg))
    detections = detect_multiview(
        image, model, grid,
        threshold=args.threshold,
        min_cells=cfg.min_cells,
        antialias=cfg.antialias,
    )
    kept = nms(detections, cfg.nms_iou)
    for d in kept:
        x0, y0, x1, y1 = d.box
        print(f"{d.score:.6f}\t{x0:.1f},{y0:.1f},{x1:.1f},{y1:.1f}\tview={d.view_index}")
    if args.detections_out:
        from .evaluation import EvalDetection

        image_id = args.image_id or Path(args.image).name
        write_detections(
            args.detections_out,
            [EvalDetection(image_id, d.score, d.box) for d in kept],
        )
    print(f"{len(kept)} detection(s)", file=sys.stderr)
    return 0


def _cmd_index(args) -> int:
    cfg = _resolve_config(args)
    service = SearchService(cfg, args.data)
    if args.repository:
        service.ingest_path(args.repository)
    model = load_model(args.model)
    gauge = PyramidGauge()
    summary = service.run_job_sync(model, media_id=args.media, floor=args.floor,
                                   gauge=gauge)
    print(f"frames: {summary.frames_total} total, {summary.frames_computed} computed, "
          f"{summary.frames_skipped} skipped, {summary.failures} failed")
    print(f"peak resident pyramids: {gauge.peak}")
    print(f"elapsed: {summary.elapsed_seconds:.1f}s")
    return 0 if summary.failures == 0 else 1


def _cmd_search_images(args) -> int:
    cfg = _resolve_config(args)
    service = SearchService(cfg, args.data)
    hits, total = service.search_images(
        args.class_name, args.min_score, args.limit, args.offset
    )
    if args.json:
        print(json.dumps([
            {"media_id": h.media_id, "frame_no": h.frame_no, "score": h.score,
             "best_box": list(h.best_box), "boxes": [list(b) for b in h.boxes]}
            for h in hits
        ]))
    else:
        for h in hits:
            x0, y0, x1, y1 = h.best_box
            print(f"{h.score:.6f}\t{h.media_id}\tframe {h.frame_no}\t"
                  f"{x0:.1f},{y0:.1f},{x1:.1f},{y1:.1f}")
        print(f"{len(hits)} of {total} match(es)", file=sys.stderr)
    return 0


def _cmd_search_video(args) -> int:
    cfg = _resolve_config(args)
    service = SearchService(cfg, args.data)
    segments = service.search_video(
        args.media, args.class_name, args.min_score,
        args.gap, args.min_len,
    )
    if args.json:
        print(json.dumps([
            {"start_frame": s.start_frame, "end_frame": s.end_frame,
             "start_time": s.start_time, "end_time": s.end_time,
             "peak_score": s.peak_score, "peak_frame": s.peak_frame,
             "peak_box": list(s.peak_box)}
            for s in segments
        ]))
    else:
        for s in segments:
            print(f"[{s.start_frame},{s.end_frame}]\t"
                  f"{s.start_time:.2f}s-{s.end_time:.2f}s\t"
                  f"peak {s.peak_score:.4f} at frame {s.peak_frame}")
        print(f"{len(segments)} segment(s)", file=sys.stderr)
    return 0


def _cmd_eval(args) -> int:
    rows = load_manifest(args.truth)
    truths = ground_truth(rows, args.class_name)
    detections = load_detections(args.detections)
    result = match_detections(detections, truths, args.iou)
    for mode in ("all_points", "eleven_point"):
        print(f"AP[{mode}] = {average_precision(result, mode):.6f}")
    return 0


def _cmd_cache_gc(args) -> int:
    cfg = _resolve_config(args)
    service = SearchService(cfg, args.data)
    budget = _parse_size(args.budget)
    removed = service.cache.evict_to_budget(budget)
    print(f"removed {removed} entr{'y' if removed == 1 else 'ies'}; "
          f"total now {service.cache.total_size()} bytes")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    cfg = _resolve_config(args)
    service = SearchService(cfg, args.data)
    app = create_app(service)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avsearch",
        description="viewpoint-robust object detection and media search",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("ingest", help="register a media repository")
    p.add_argument("repository")
    p.add_argument("--data", required=True, help="service data directory")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("train", help="train a detector from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--class", dest="class_name", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("detect", help="detect in one image, print boxes")
    p.add_argument("image")
    p.add_argument("--model", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--single-view", action="store_true",
                   help="identity view only (no simulated tilts)")
    p.add_argument("--detections-out", default=None,
                   help="also write an eval-format detections file")
    p.add_argument("--image-id", default=None,
                   help="image id for --detections-out (default: file name)")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("index", help="run a detection job over media")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--repository", default=None,
                   help="ingest this directory first")
    p.add_argument("--media", default=None, help="restrict to one media id")
    p.add_argument("--floor", type=float, default=None,
                   help="index floor score (default threshold - floor_offset)")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("search-images", help="ranked image query")
    p.add_argument("--data", required=True)
    p.add_argument("--class", dest="class_name", required=True)
    p.add_argument("--min-score", type=float, default=float("-inf"))
    p.add_argument("--limit", type=int, default=20)
    p.add_argument("--offset", type=int, default=0)
    p.add_argument("--json", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_search_images)

    p = sub.add_parser("search-video", help="temporal segments for a video")
    p.add_argument("--data", required=True)
    p.add_argument("--media", required=True)
    p.add_argument("--class", dest="class_name", required=True)
    p.add_argument("--min-score", type=float, default=float("-inf"))
    p.add_argument("--gap", type=int, default=None,
                   help="merge hits this many frames apart")
    p.add_argument("--min-len", type=int, default=None,
                   help="drop segments shorter than this")
    p.add_argument("--json", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_search_video)

    p = sub.add_parser("eval", help="average precision for a detections file")
    p.add_argument("--truth", required=True, help="ground-truth manifest")
    p.add_argument("--detections", required=True)
    p.add_argument("--class", dest="class_name", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("cache", help="cache maintenance")
    cache_sub = p.add_subparsers(dest="cache_verb", required=True)
    g = cache_sub.add_parser("gc", help="evict to a byte budget")
    g.add_argument("--budget", required=True,
                   help="byte budget, K/M/G suffix allowed")
    g.add_argument("--data", required=True)
    _add_config_flags(g)
    g.set_defaults(func=_cmd_cache_gc)

    p = sub.add_parser("serve", help="run the HTTP JSON API")
    p.add_argument("--data", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    _add_config_flags(p)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
