"""Media ingestion, batch detection jobs, and search over the index.

A repository directory holds still images at the top level; a subdirectory
containing ``frames.manifest`` is one video (manifest line 1: ``fps <float>``,
then ordered frame filenames).  Jobs run detect_multiview per frame at a low
floor threshold, write index records in deterministic frame order, flow
pyramids through the disk cache, and skip (media, frame, model) triples that
are already indexed, which makes a completed job's rerun free.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
import math
import threading
import time
import uuid
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RuntimeConfig
from .detection import detect_multiview, nms
from .features import build_pyramid
from .imaging import load_image
from .models import DetectorModel, load_model, model_to_bytes
from .store import (
    CacheKey,
    DetectionIndex,
    IndexDetection,
    IndexRecord,
    PyramidCache,
)
from .viewpoint import ViewGrid, sample_view_grid

__all__ = [
    "MediaRecord",
    "MediaLibrary",
    "Segment",
    "JobSummary",
    "JobState",
    "PyramidGauge",
    "SearchHit",
    "ingest",
    "run_job",
    "group_segments",
    "search_images",
    "search_video",
    "SearchService",
]

log = logging.getLogger(__name__)

MANIFEST_NAME = "frames.manifest"


@dataclass(frozen=True)
class MediaRecord:
    media_id: str
    kind: str  # "image" | "video"
    frame_paths: tuple[str, ...]
    fps: float = 0.0

    @property
    def frame_count(self) -> int:
        return len(self.frame_paths)

    def frame_time(self, frame_no: int) -> float:
        if self.kind == "video" and self.fps > 0:
            return frame_no / self.fps
        return 0.0


class MediaLibrary:
    """Registered media, keyed by id; ids are repository-relative names."""

    def __init__(self):
        self._records: dict[str, MediaRecord] = {}
        self._lock = threading.Lock()

    def register(self, records) -> None:
        with self._lock:
            for rec in records:
                self._records[rec.media_id] = rec

    def save(self, path) -> None:
        payload = {
            rec.media_id: {
                "kind": rec.kind,
                "frame_paths": list(rec.frame_paths),
                "fps": rec.fps,
            }
            for rec in self.all()
        }
        Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True))

    def load(self, path) -> None:
        payload = json.loads(Path(path).read_text())
        self.register(
            MediaRecord(mid, rec["kind"], tuple(rec["frame_paths"]), rec["fps"])
            for mid, rec in payload.items()
        )

    def get(self, media_id: str) -> MediaRecord:
        try:
            return self._records[media_id]
        except KeyError:
            raise KeyError(f"unknown media id {media_id!r}") from None

    def __contains__(self, media_id: str) -> bool:
        return media_id in self._records

    def ids(self) -> list[str]:
        return sorted(self._records)

    def all(self) -> list[MediaRecord]:
        return [self._records[i] for i in self.ids()]


def _ingest_video(subdir: Path) -> MediaRecord:
    manifest = subdir / MANIFEST_NAME
    lines = [
        ln.strip()
        for ln in manifest.read_text(encoding="utf-8").splitlines()
        if ln.strip()
    ]
    if not lines or not lines[0].startswith("fps "):
        raise ValueError("first manifest line must be 'fps <float>'")
    try:
        fps = float(lines[0][4:])
    except ValueError as exc:
        raise ValueError(f"bad fps value: {lines[0][4:]!r}") from exc
    if not (fps > 0) or not math.isfinite(fps):
        raise ValueError(f"fps must be positive, got {fps}")
    frames = []
    for name in lines[1:]:
        frame = subdir / name
        if not frame.is_file():
            raise ValueError(f"frame {name!r} listed but missing")
        frames.append(str(frame))
    if not frames:
        raise ValueError("manifest lists no frames")
    return MediaRecord(subdir.name, "video", tuple(frames), fps)


def ingest(directory) -> tuple[list[MediaRecord], list[str]]:
    """Register a repository directory.

    Returns (records, diagnostics).  A failure in one entry never aborts the
    rest: the entry is skipped and described in the diagnostics.
    """
    root = Path(directory)
    if not root.is_dir():
        raise NotADirectoryError(f"{directory} is not a directory")
    records: list[MediaRecord] = []
    diagnostics: list[str] = []
    for entry in sorted(root.iterdir()):
        if entry.is_dir():
            if not (entry / MANIFEST_NAME).is_file():
                diagnostics.append(f"{entry.name}: no {MANIFEST_NAME}, skipped")
                continue
            try:
                records.append(_ingest_video(entry))
            except (ValueError, OSError) as exc:
                diagnostics.append(f"{entry.name}: rejected ({exc})")
        elif entry.is_file():
            try:
                load_image(entry)
            except Exception as exc:
                diagnostics.append(f"{entry.name}: unreadable ({exc})")
                continue
            records.append(MediaRecord(entry.name, "image", (str(entry),)))
    return records, diagnostics


# ---------------------------------------------------------------------------
# resident pyramid instrumentation


class PyramidGauge:
    """Counts live pyramid objects and remembers the peak.

    attach() must be called on every pyramid a job materializes; the count
    drops when the object is garbage collected, so the peak measures how
    many pyramids a run ever held in memory at once.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.current = 0
        self.peak = 0

    def attach(self, pyramid) -> None:
        with self._lock:
            self.current += 1
            self.peak = max(self.peak, self.current)
        weakref.finalize(pyramid, self._release)

    def _release(self) -> None:
        with self._lock:
            self.current -= 1


# ---------------------------------------------------------------------------
# jobs


@dataclass
class JobSummary:
    frames_total: int = 0
    frames_computed: int = 0
    frames_skipped: int = 0
    failures: int = 0
    records_written: int = 0
    elapsed_seconds: float = 0.0


@dataclass
class JobState:
    job_id: str
    status: str = "running"  # running | done | failed
    summary: JobSummary = field(default_factory=JobSummary)
    error: str = ""


def model_tag(model: DetectorModel) -> str:
    return hashlib.blake2b(model_to_bytes(model), digest_size=8).hexdigest()


def _frame_record(
    path: str,
    media: MediaRecord,
    frame_no: int,
    model: DetectorModel,
    grid: ViewGrid,
    floor: float,
    cache: PyramidCache | None,
    config: RuntimeConfig,
    gauge: PyramidGauge | None,
    tag: str,
) -> IndexRecord:
    image = load_image(path)
    raw = Path(path).read_bytes()

    def provider(view_index, tilt, phi, simulated):
        key = CacheKey.make(
            raw, config.cell_size, config.levels_per_octave,
            config.min_cells, tilt, phi,
        )
        pyramid = cache.get(key) if cache is not None else None
        if pyramid is None:
            pyramid = build_pyramid(
                simulated, config.cell_size,
                config.levels_per_octave, config.min_cells,
            )
            if cache is not None:
                cache.put(key, pyramid)
        if gauge is not None:
            gauge.attach(pyramid)
        return pyramid

    detections = detect_multiview(
        image, model, grid,
        threshold=floor,
        min_cells=config.min_cells,
        antialias=config.antialias,
        pyramid_provider=provider,
    )
    kept = nms(detections, config.nms_iou)
    return IndexRecord(
        media_id=media.media_id,
        frame_no=frame_no,
        frame_time=media.frame_time(frame_no),
        detections=tuple(
            IndexDetection(model.class_name, d.score, d.box, d.view_index)
            for d in kept
        ),
        model_tag=tag,
    )


def run_job(
    library: MediaLibrary,
    index: DetectionIndex,
    model: DetectorModel,
    grid: ViewGrid,
    config: RuntimeConfig,
    media_ids: list[str] | None = None,
    floor: float | None = None,
    cache: PyramidCache | None = None,
    gauge: PyramidGauge | None = None,
    summary: JobSummary | None = None,
) -> JobSummary:
    """Index every frame of the selected media (all media by default).

    Frames already present in the index for this exact model are skipped.
    Records are appended in deterministic (media_id, frame_no) order, so a
    fixed model and repository always produce identical index bytes.
    """
    if summary is None:
        summary = JobSummary()
    started = time.monotonic()
    if floor is None:
        floor = model.threshold - config.floor_offset
    tag = model_tag(model)
    targets = library.all() if media_ids is None else [library.get(m) for m in media_ids]

    tasks = []
    for media in targets:
        for frame_no, path in enumerate(media.frame_paths):
            summary.frames_total += 1
            if index.has(media.media_id, frame_no, tag):
                summary.frames_skipped += 1
            else:
                tasks.append((media, frame_no, path))

    def work(task):
        media, frame_no, path = task
        try:
            return _frame_record(
                path, media, frame_no, model, grid, floor, cache, config, gauge, tag
            )
        except Exception:
            log.exception("frame %s/%d failed", media.media_id, frame_no)
            return None

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        for record in pool.map(work, tasks):
            if record is None:
                summary.failures += 1
                continue
            index.append([record])
            summary.frames_computed += 1
            summary.records_written += 1
    summary.elapsed_seconds = time.monotonic() - started
    return summary


# ---------------------------------------------------------------------------
# segments and search


@dataclass(frozen=True)
class Segment:
    media_id: str
    class_name: str
    start_frame: int
    end_frame: int
    start_time: float
    end_time: float
    peak_score: float
    peak_frame: int
    peak_box: tuple[float, float, float, float]


def group_segments(
    records,
    class_name: str,
    min_score: float,
    gap_tolerance: int = 5,
    min_length: int = 3,
    fps: float = 0.0,
) -> list[Segment]:
    """Merge per-frame hits into temporal segments.

    A frame is a hit when it has a detection of the class at or above
    min_score; hits whose frame numbers differ by at most gap_tolerance
    belong to one segment; segments spanning fewer than min_length frames
    are dropped.  start_frame is the first hit, the natural seek target.
    """
    hits: dict[int, tuple[float, tuple[float, float, float, float]]] = {}
    media_id = None
    for rec in records:
        media_id = rec.media_id if media_id is None else media_id
        for det in rec.detections:
            if det.class_name == class_name and det.score >= min_score:
                prev = hits.get(rec.frame_no)
                if prev is None or det.score > prev[0]:
                    hits[rec.frame_no] = (det.score, det.box)
    if not hits:
        return []
    frames = sorted(hits)
    groups: list[list[int]] = [[frames[0]]]
    for fr in frames[1:]:
        if fr - groups[-1][-1] <= gap_tolerance:
            groups[-1].append(fr)
        else:
            groups.append([fr])
    segments = []
    for group in groups:
        start, end = group[0], group[-1]
        if end - start + 1 < min_length:
            continue
        peak_frame = max(group, key=lambda fr: (hits[fr][0], -fr))
        score, box = hits[peak_frame]
        segments.append(
            Segment(
                media_id=media_id or "",
                class_name=class_name,
                start_frame=start,
                end_frame=end,
                start_time=start / fps if fps > 0 else 0.0,
                end_time=end / fps if fps > 0 else 0.0,
                peak_score=score,
                peak_frame=peak_frame,
                peak_box=box,
            )
        )
    return segments


@dataclass(frozen=True)
class SearchHit:
    media_id: str
    frame_no: int
    score: float
    best_box: tuple[float, float, float, float]
    boxes: tuple[tuple[float, float, float, float], ...]


def _hit_from_record(score: float, rec: IndexRecord, class_name: str, min_score: float) -> SearchHit:
    matching = [
        d for d in rec.detections
        if d.class_name == class_name and d.score >= min_score
    ]
    best = max(matching, key=lambda d: d.score)
    return SearchHit(
        media_id=rec.media_id,
        frame_no=rec.frame_no,
        score=score,
        best_box=best.box,
        boxes=tuple(d.box for d in matching),
    )


def search_images(
    index: DetectionIndex,
    class_name: str,
    min_score: float = float("-inf"),
    limit: int = 20,
    offset: int = 0,
) -> tuple[list[SearchHit], int]:
    """Ranked page of matching records; returns (page, total matches)."""
    if limit < 0 or offset < 0:
        raise ValueError("limit and offset must be >= 0")
    ranked = index.query(class_name, min_score)
    page = ranked[offset : offset + limit]
    return [_hit_from_record(s, r, class_name, min_score) for s, r in page], len(ranked)


def search_video(
    library: MediaLibrary,
    index: DetectionIndex,
    media_id: str,
    class_name: str,
    min_score: float = float("-inf"),
    gap_tolerance: int = 5,
    min_length: int = 3,
) -> list[Segment]:
    media = library.get(media_id)
    if media.kind != "video":
        raise ValueError(f"media {media_id!r} is not a video")
    records = sorted(
        (rec for rec in index.records if rec.media_id == media_id),
        key=lambda r: r.frame_no,
    )
    return group_segments(
        records, class_name, min_score, gap_tolerance, min_length, media.fps
    )


# ---------------------------------------------------------------------------
# the service facade the HTTP layer and CLI share


class SearchService:
    def __init__(self, config: RuntimeConfig, data_dir):
        self.config = config
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.library = MediaLibrary()
        self._library_path = self.data_dir / "media.json"
        if self._library_path.exists():
            self.library.load(self._library_path)
        self.index = DetectionIndex(self.data_dir / "detections.avix")
        self.cache = PyramidCache(self.data_dir / "cache", budget=config.cache_budget)
        self.grid = sample_view_grid(config.t_max, math.radians(config.rotation_base_deg))
        self._jobs: dict[str, JobState] = {}
        self._lock = threading.Lock()

    # -- media

    def ingest_path(self, path) -> tuple[list[MediaRecord], list[str]]:
        records, diagnostics = ingest(path)
        self.library.register(records)
        self.library.save(self._library_path)
        return records, diagnostics

    def frame_png(self, media_id: str, frame_no: int) -> bytes:
        from PIL import Image

        media = self.library.get(media_id)
        if not (0 <= frame_no < media.frame_count):
            raise IndexError(f"frame {frame_no} out of range for {media_id!r}")
        img = load_image(media.frame_paths[frame_no])
        u8 = np.floor(img * 255.0 + 0.5).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(u8, mode="L").save(buf, format="PNG")
        return buf.getvalue()

    # -- jobs

    def start_job(
        self,
        model_path,
        media_id: str | None = None,
        floor: float | None = None,
    ) -> str:
        model = load_model(model_path)
        media_ids = None if media_id is None else [media_id]
        if media_ids:
            for m in media_ids:
                self.library.get(m)  # raise early on unknown ids
        job_id = uuid.uuid4().hex[:12]
        state = JobState(job_id)
        with self._lock:
            self._jobs[job_id] = state

        def runner():
            try:
                run_job(
                    self.library, self.index, model, self.grid, self.config,
                    media_ids=media_ids, floor=floor, cache=self.cache,
                    summary=state.summary,
                )
                state.status = "done"
            except Exception as exc:
                log.exception("job %s failed", job_id)
                state.status = "failed"
                state.error = str(exc)

        threading.Thread(target=runner, name=f"job-{job_id}", daemon=True).start()
        return job_id

    def run_job_sync(
        self,
        model: DetectorModel,
        media_id: str | None = None,
        floor: float | None = None,
        gauge: PyramidGauge | None = None,
    ) -> JobSummary:
        media_ids = None if media_id is None else [media_id]
        return run_job(
            self.library, self.index, model, self.grid, self.config,
            media_ids=media_ids, floor=floor, cache=self.cache, gauge=gauge,
        )

    def job_status(self, job_id: str) -> JobState:
        with self._lock:
            try:
                return self._jobs[job_id]
            except KeyError:
                raise KeyError(f"unknown job id {job_id!r}") from None

    # -- search

    def search_images(self, class_name, min_score=float("-inf"), limit=20, offset=0):
        return search_images(self.index, class_name, min_score, limit, offset)

    def search_video(self, media_id, class_name, min_score=float("-inf"),
                     gap_tolerance=None, min_length=None):
        return search_video(
            self.library, self.index, media_id, class_name, min_score,
            self.config.gap_tolerance if gap_tolerance is None else gap_tolerance,
            self.config.min_segment_length if min_length is None else min_length,
        )

    def classes(self) -> list[str]:
        return self.index.classes()
