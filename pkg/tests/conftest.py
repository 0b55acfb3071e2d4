"""Shared fixtures: a trained toy model and indexed media repositories.

Training the planted-pattern model takes ~2 s and the indexing jobs ~20 s,
so they are session-scoped; tests must not mutate them.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import synth  # noqa: E402

from avsearch.config import RuntimeConfig  # noqa: E402
from avsearch.imaging import save_pgm  # noqa: E402
from avsearch.service import PyramidGauge, SearchService  # noqa: E402
from avsearch.training import TrainStats, train_detector  # noqa: E402

N_PLANTED_IMAGES = 6
N_EMPTY_IMAGES = 4
VIDEO_FRAMES = 40
VIDEO_FPS = 10.0
VIDEO_HIT_FRAMES = range(10, 25)  # pattern present in frames 10..24
VIDEO_BOX = (40.0, 30.0, 136.0, 126.0)


@pytest.fixture(scope="session")
def train_stats() -> TrainStats:
    return TrainStats()


@pytest.fixture(scope="session")
def toy_model(train_stats):
    positives, negatives = synth.training_corpus()
    return train_detector(positives, negatives, "ltile", seed=0, stats=train_stats)


def build_media_repo(root: Path, seed: int = synth.MEDIA_SEED,
                     include_video: bool = True) -> dict:
    """Write a media repository: images (some planted), optionally a video.

    Returns the ground truth: planted boxes by image id plus the video's
    hit frames.  The image set is identical with and without the video
    (frame noise is drawn after all images).
    """
    rng = np.random.RandomState(seed)
    planted: dict[str, tuple[float, float, float, float]] = {}
    for i in range(N_PLANTED_IMAGES + N_EMPTY_IMAGES):
        img = synth.make_background(192, 192, rng)
        media_id = f"im{i:02d}.pgm"
        if i < N_PLANTED_IMAGES:
            planted[media_id] = synth.plant(img, rng, int(rng.randint(80, 129)))
        save_pgm(img, root / media_id)

    truth = {"planted": planted, "video_id": None,
             "hit_frames": [], "video_box": VIDEO_BOX}
    if not include_video:
        return truth

    clip = root / "clip"
    clip.mkdir()
    x0, y0, x1, y1 = (int(v) for v in VIDEO_BOX)
    names = []
    for f in range(VIDEO_FRAMES):
        img = synth.make_background(192, 160, rng)
        if f in VIDEO_HIT_FRAMES:
            img[y0:y1, x0:x1] = synth.make_tile(x1 - x0)
        name = f"f{f:03d}.pgm"
        save_pgm(img, clip / name)
        names.append(name)
    manifest = [f"fps {VIDEO_FPS}"] + names
    (clip / "frames.manifest").write_text("\n".join(manifest) + "\n")
    truth["video_id"] = "clip"
    truth["hit_frames"] = list(VIDEO_HIT_FRAMES)
    return truth


def _index_repo(tmp_path_factory, model, repo, label: str) -> dict:
    data = tmp_path_factory.mktemp(label)
    service = SearchService(RuntimeConfig(), data)
    records, diagnostics = service.ingest_path(repo)
    assert diagnostics == []
    gauge = PyramidGauge()
    summary = service.run_job_sync(model, gauge=gauge)
    return {
        "service": service,
        "model": model,
        "records": records,
        "first_summary": summary,
        "first_gauge": gauge,
        "data_dir": data,
    }


@pytest.fixture(scope="session")
def media_repo(tmp_path_factory):
    root = tmp_path_factory.mktemp("repo")
    truth = build_media_repo(root)
    return root, truth


@pytest.fixture(scope="session")
def images_repo(tmp_path_factory):
    root = tmp_path_factory.mktemp("repo-images")
    truth = build_media_repo(root, include_video=False)
    return root, truth


@pytest.fixture(scope="session")
def indexed_service(tmp_path_factory, toy_model, media_repo):
    """Service over the image+video repository, index fully built."""
    repo, truth = media_repo
    out = _index_repo(tmp_path_factory, toy_model, repo, "data")
    out["truth"] = truth
    return out


@pytest.fixture(scope="session")
def indexed_images_service(tmp_path_factory, toy_model, images_repo):
    """Service over the images-only repository, index fully built."""
    repo, truth = images_repo
    out = _index_repo(tmp_path_factory, toy_model, repo, "data-images")
    out["truth"] = truth
    return out
