"""JSON HTTP API over the search service.

Endpoints:
  POST /media {"path": dir}                    register a repository
  GET  /media                                  registered media
  POST /jobs {"model_path": p, "media_id"?, "floor"?}   start an indexing job
  GET  /jobs/{job_id}                          job progress
  GET  /search/images?class=&min_score=&limit=&offset=
  GET  /media/{media_id}/segments?class=&min_score=&gap=&min_len=
  GET  /media/{media_id}/frame/{frame_no}      frame as PNG
  GET  /classes                                classes present in the index
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .service import JobState, MediaRecord, SearchHit, SearchService, Segment

__all__ = ["create_app"]


class IngestRequest(BaseModel):
    path: str


class JobRequest(BaseModel):
    model_path: str
    media_id: str | None = None
    floor: float | None = None


def _media_json(rec: MediaRecord) -> dict:
    return {
        "media_id": rec.media_id,
        "kind": rec.kind,
        "frame_count": rec.frame_count,
        "fps": rec.fps,
    }


def _job_json(state: JobState) -> dict:
    s = state.summary
    return {
        "job_id": state.job_id,
        "status": state.status,
        "error": state.error,
        "frames_total": s.frames_total,
        "frames_computed": s.frames_computed,
        "frames_skipped": s.frames_skipped,
        "failures": s.failures,
    }


def _hit_json(hit: SearchHit) -> dict:
    return {
        "media_id": hit.media_id,
        "frame_no": hit.frame_no,
        "score": hit.score,
        "best_box": list(hit.best_box),
        "boxes": [list(b) for b in hit.boxes],
    }


def _segment_json(seg: Segment) -> dict:
    return {
        "media_id": seg.media_id,
        "class": seg.class_name,
        "start_frame": seg.start_frame,
        "end_frame": seg.end_frame,
        "start_time": seg.start_time,
        "end_time": seg.end_time,
        "peak_score": seg.peak_score,
        "peak_frame": seg.peak_frame,
        "peak_box": list(seg.peak_box),
    }


def create_app(service: SearchService) -> FastAPI:
    app = FastAPI(title="avsearch", version="1")
    # The browser console may be served from a different origin than the API.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/media")
    def register_media(req: IngestRequest):
        try:
            records, diagnostics = service.ingest_path(req.path)
        except NotADirectoryError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "media": [_media_json(r) for r in records],
            "diagnostics": diagnostics,
        }

    @app.get("/media")
    def list_media():
        return {"media": [_media_json(r) for r in service.library.all()]}

    @app.post("/jobs")
    def start_job(req: JobRequest):
        try:
            job_id = service.start_job(req.model_path, req.media_id, req.floor)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except (OSError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"job_id": job_id}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        try:
            return _job_json(service.job_status(job_id))
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/search/images")
    def search_images(
        class_name: str = Query(alias="class"),
        min_score: float = float("-inf"),
        limit: int = Query(default=20, ge=0),
        offset: int = Query(default=0, ge=0),
    ):
        hits, total = service.search_images(class_name, min_score, limit, offset)
        return {"results": [_hit_json(h) for h in hits], "total": total}

    @app.get("/media/{media_id}/segments")
    def media_segments(
        media_id: str,
        class_name: str = Query(alias="class"),
        min_score: float = float("-inf"),
        gap: int | None = Query(default=None, ge=0),
        min_len: int | None = Query(default=None, ge=1),
    ):
        try:
            segments = service.search_video(
                media_id, class_name, min_score, gap, min_len
            )
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"segments": [_segment_json(s) for s in segments]}

    @app.get("/media/{media_id}/frame/{frame_no}")
    def media_frame(media_id: str, frame_no: int):
        try:
            payload = service.frame_png(media_id, frame_no)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except IndexError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return Response(content=payload, media_type="image/png")

    @app.get("/classes")
    def classes():
        return {"classes": service.classes()}

    return app
