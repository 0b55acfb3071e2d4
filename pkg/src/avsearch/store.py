"""On-disk feature pyramid cache (AVPF files) and the detection index.

Cache entries are content-addressed: the key pairs a hash of the raw image
bytes with a hash of every parameter that changes the pyramid (cell size,
levels per octave, min cells, view tilt and rotation, and a format tag).
Entries are immutable once written; writes go to a temp file and rename in,
so readers never observe partial entries.

The index is a text file: header line ``AVIX 1``, then one JSON record per
line.  It is append-friendly and partially recoverable: corrupt or truncated
lines are skipped and counted, never fatal.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import FeatureLevel, FeaturePyramid, N_CHANNELS

__all__ = [
    "CacheKey",
    "PyramidCache",
    "CacheFormatError",
    "pyramid_to_bytes",
    "pyramid_from_bytes",
    "IndexDetection",
    "IndexRecord",
    "DetectionIndex",
    "IndexFormatError",
]

log = logging.getLogger(__name__)

_MAGIC = b"AVPF"
_VERSION = 1
_FORMAT_TAG = "avpf-1"


class CacheFormatError(ValueError):
    """Raised for malformed AVPF payloads."""


class IndexFormatError(ValueError):
    """Raised when an index file's header is unusable."""


# ---------------------------------------------------------------------------
# cache keys


@dataclass(frozen=True)
class CacheKey:
    content_hash: int
    params_hash: int

    @staticmethod
    def _hash64(payload: bytes) -> int:
        return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")

    @classmethod
    def make(
        cls,
        image_bytes: bytes,
        cell_size: int,
        levels_per_octave: int,
        min_cells: int,
        tilt: float = 1.0,
        phi: float = 0.0,
    ) -> "CacheKey":
        params = repr((
            _FORMAT_TAG,
            int(cell_size),
            int(levels_per_octave),
            int(min_cells),
            float(tilt),
            float(phi),
        )).encode("ascii")
        return cls(cls._hash64(image_bytes), cls._hash64(params))

    @property
    def filename(self) -> str:
        return f"{self.content_hash:016x}-{self.params_hash:016x}.avpf"


# ---------------------------------------------------------------------------
# AVPF codec


def pyramid_to_bytes(pyramid: FeaturePyramid) -> bytes:
    chunks = [
        _MAGIC,
        struct.pack(
            "<HHH",
            _VERSION,
            len(pyramid.levels),
            pyramid.cell_size,
        ),
        struct.pack("<H", pyramid.levels_per_octave),
    ]
    for level in pyramid.levels:
        data = np.ascontiguousarray(level.data, dtype="<f4")
        ch, cw = data.shape[0], data.shape[1]
        chunks.append(struct.pack("<HHf", cw, ch, level.scale))
        chunks.append(data.tobytes())
    return b"".join(chunks)


def pyramid_from_bytes(blob: bytes) -> FeaturePyramid:
    if len(blob) < 12 or blob[:4] != _MAGIC:
        raise CacheFormatError("bad magic")
    version, n_levels, cell_size, lpo = struct.unpack("<HHHH", blob[4:12])
    if version != _VERSION:
        raise CacheFormatError(f"unsupported version {version}")
    pos = 12
    levels = []
    for _ in range(n_levels):
        if pos + 8 > len(blob):
            raise CacheFormatError("truncated level header")
        cw, ch, scale = struct.unpack("<HHf", blob[pos : pos + 8])
        pos += 8
        count = cw * ch * N_CHANNELS
        end = pos + 4 * count
        if end > len(blob):
            raise CacheFormatError("truncated level data")
        data = np.frombuffer(blob[pos:end], dtype="<f4").reshape(ch, cw, N_CHANNELS)
        levels.append(FeatureLevel(data=data.copy(), scale=float(scale), cell_size=cell_size))
        pos = end
    if pos != len(blob):
        raise CacheFormatError(f"{len(blob) - pos} trailing bytes")
    if not levels:
        raise CacheFormatError("pyramid has no levels")
    min_cells = min(min(lv.cells_w, lv.cells_h) for lv in levels)
    return FeaturePyramid(
        levels=levels,
        levels_per_octave=lpo,
        cell_size=cell_size,
        min_cells=min_cells,
    )


def pyramid_byte_size(pyramid: FeaturePyramid) -> int:
    """Exact serialized size; used to budget the cache without serializing."""
    total = 12
    for level in pyramid.levels:
        total += 8 + 4 * level.data.size
    return total


# ---------------------------------------------------------------------------
# cache


class PyramidCache:
    """Budgeted LRU cache of serialized pyramids under one directory.

    Recency is file mtime: get() touches the entry.  put() is write-temp-
    then-rename, so concurrent readers see either the old entry or the new
    one, never a torn write.  A corrupt entry is deleted and reported absent.
    """

    def __init__(self, directory, budget: int | None = None):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.budget = budget
        self._lock = threading.Lock()
        self._counter = 0

    def _path(self, key: CacheKey) -> Path:
        return self.directory / key.filename

    def get(self, key: CacheKey) -> FeaturePyramid | None:
        path = self._path(key)
        try:
            blob = path.read_bytes()
        except FileNotFoundError:
            return None
        try:
            pyramid = pyramid_from_bytes(blob)
        except CacheFormatError as exc:
            log.warning("cache entry %s corrupt (%s); removing", path.name, exc)
            with self._lock:
                path.unlink(missing_ok=True)
            return None
        os.utime(path)
        return pyramid

    def put(self, key: CacheKey, pyramid: FeaturePyramid) -> None:
        blob = pyramid_to_bytes(pyramid)
        path = self._path(key)
        with self._lock:
            self._counter += 1
            tmp = path.with_suffix(f".tmp{self._counter}")
            tmp.write_bytes(blob)
            os.replace(tmp, path)
        if self.budget is not None:
            self.evict_to_budget(self.budget)

    def entries(self) -> list[Path]:
        return sorted(self.directory.glob("*.avpf"))

    def total_size(self) -> int:
        return sum(p.stat().st_size for p in self.entries())

    def evict_to_budget(self, budget: int) -> int:
        """Remove least-recently-used entries until total size <= budget."""
        if budget < 0:
            raise ValueError("budget must be >= 0")
        removed = 0
        with self._lock:
            entries = []
            for p in self.entries():
                try:
                    st = p.stat()
                except FileNotFoundError:
                    continue
                entries.append((st.st_mtime_ns, p.name, p, st.st_size))
            total = sum(e[3] for e in entries)
            entries.sort()  # oldest first; name breaks mtime ties
            for _, _, path, size in entries:
                if total <= budget:
                    break
                path.unlink(missing_ok=True)
                total -= size
                removed += 1
        return removed


# ---------------------------------------------------------------------------
# detection index


@dataclass(frozen=True)
class IndexDetection:
    class_name: str
    score: float
    box: tuple[float, float, float, float]
    view_index: int = 0


@dataclass(frozen=True)
class IndexRecord:
    media_id: str
    frame_no: int
    frame_time: float
    detections: tuple[IndexDetection, ...] = ()
    model_tag: str = ""

    def best_score(self, class_name: str, min_score: float) -> float | None:
        best = None
        for det in self.detections:
            if det.class_name == class_name and det.score >= min_score:
                if best is None or det.score > best:
                    best = det.score
        return best


_HEADER = "AVIX 1"


def _record_to_json(rec: IndexRecord) -> str:
    return json.dumps(
        {
            "media_id": rec.media_id,
            "frame_no": rec.frame_no,
            "frame_time": rec.frame_time,
            "detections": [
                {
                    "class": d.class_name,
                    "score": d.score,
                    "box": list(d.box),
                    "view_index": d.view_index,
                }
                for d in rec.detections
            ],
            "model": rec.model_tag,
        },
        separators=(",", ":"),
        sort_keys=True,
    )


def _record_from_json(line: str) -> IndexRecord:
    obj = json.loads(line)
    dets = tuple(
        IndexDetection(
            class_name=str(d["class"]),
            score=float(d["score"]),
            box=tuple(float(v) for v in d["box"]),
            view_index=int(d.get("view_index", 0)),
        )
        for d in obj["detections"]
    )
    return IndexRecord(
        media_id=str(obj["media_id"]),
        frame_no=int(obj["frame_no"]),
        frame_time=float(obj["frame_time"]),
        detections=dets,
        model_tag=str(obj.get("model", "")),
    )


class DetectionIndex:
    """Append-friendly detection records with an in-memory snapshot.

    Readers query the immutable snapshot list; append() writes lines to disk
    first, then swaps in a fresh snapshot, so a query never sees a record
    that is not durable.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records: tuple[IndexRecord, ...] = ()
        self._keys: frozenset[tuple[str, int, str]] = frozenset()
        self.skipped_lines = 0
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        records = []
        skipped = 0
        with open(self.path, "r", encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header != _HEADER:
                raise IndexFormatError(f"bad index header {header!r}")
            for line_no, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(_record_from_json(line))
                except (ValueError, KeyError, TypeError) as exc:
                    skipped += 1
                    log.warning("index line %d skipped: %s", line_no, exc)
        self.skipped_lines = skipped
        self._install(tuple(records))

    def _install(self, records: tuple[IndexRecord, ...]) -> None:
        self._records = records
        self._keys = frozenset(
            (r.media_id, r.frame_no, r.model_tag) for r in records
        )

    @property
    def records(self) -> tuple[IndexRecord, ...]:
        return self._records

    def has(self, media_id: str, frame_no: int, model_tag: str) -> bool:
        return (media_id, frame_no, model_tag) in self._keys

    def append(self, new_records) -> None:
        new_records = tuple(new_records)
        if not new_records:
            return
        with self._lock:
            fresh = not self.path.exists()
            with open(self.path, "a", encoding="utf-8") as fh:
                if fresh:
                    fh.write(_HEADER + "\n")
                for rec in new_records:
                    fh.write(_record_to_json(rec) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._install(self._records + new_records)

    def classes(self) -> list[str]:
        names = {d.class_name for r in self._records for d in r.detections}
        return sorted(names)

    def query(
        self,
        class_name: str,
        min_score: float = float("-inf"),
        media_id: str | None = None,
    ) -> list[tuple[float, IndexRecord]]:
        """Records with >=1 matching detection, best score first.

        Ties order by (media_id, frame_no) so pagination is stable.
        """
        hits = []
        for rec in self._records:
            if media_id is not None and rec.media_id != media_id:
                continue
            best = rec.best_score(class_name, min_score)
            if best is not None:
                hits.append((best, rec))
        hits.sort(key=lambda br: (-br[0], br[1].media_id, br[1].frame_no))
        return hits
