"""Background Monte-Carlo sweeps and CSV result storage/download."""

import logging
import os
import threading
import time
import uuid
from datetime import datetime, timedelta

from fastapi import APIRouter, HTTPException, Request
from fastapi.responses import StreamingResponse

from codes import CodeFileError
from config import DEFAULT_WORKERS, MAX_WORKERS, RESULT_EXPIRY_HOURS, STORAGE_DIR
from harness import ExperimentConfig, load_code, run_experiment, write_results_csv
from ratelimit import SWEEP_LIMIT, limiter

logger = logging.getLogger(__name__)

router = APIRouter(tags=["sweeps"])

STORAGE_URL = "/files"

os.makedirs(STORAGE_DIR, exist_ok=True)

# In-memory job and file metadata
sweep_jobs: dict[str, dict] = {}
file_metadata: dict[str, dict] = {}
_lock = threading.Lock()


def _cleanup_expired_files():
    current_time = datetime.now()
    with _lock:
        expired_ids = [fid for fid, meta in file_metadata.items() if current_time > meta["expires_at"]]
        expired_jobs = [sid for sid, job in sweep_jobs.items()
                        if job.get("expires_at") and current_time > job["expires_at"]]
        for sweep_id in expired_jobs:
            sweep_jobs.pop(sweep_id, None)
    for file_id in expired_ids:
        meta = file_metadata.get(file_id)
        if meta is None:
            continue
        try:
            if os.path.exists(meta["storage_path"]):
                os.remove(meta["storage_path"])
            with _lock:
                file_metadata.pop(file_id, None)
        except Exception:
            logger.exception("error cleaning up result file %s", file_id)


def start_cleanup_scheduler():
    def run():
        while True:
            _cleanup_expired_files()
            time.sleep(3600)
    threading.Thread(target=run, daemon=True).start()


def _run_sweep(sweep_id: str, config: ExperimentConfig, workers: int):
    job = sweep_jobs[sweep_id]

    def progress(update: dict):
        job["progress"] = update

    job["status"] = "running"
    try:
        stats = run_experiment(config, workers=workers, progress=progress)
        storage_path = os.path.join(STORAGE_DIR, f"{sweep_id}.csv")
        write_results_csv(stats, storage_path)
        with _lock:
            file_metadata[sweep_id] = {
                "filename": f"sweep-{sweep_id}.csv",
                "storage_path": storage_path,
                "created_at": datetime.now(),
                "expires_at": datetime.now() + timedelta(hours=RESULT_EXPIRY_HOURS),
                "size": os.path.getsize(storage_path),
            }
        job["rows"] = [
            {"mode": s.mode.value, "p": s.p, "sigma": s.sigma, "gamma_cutoff": s.gamma_cutoff,
             "trials": s.trials, "logical_errors": s.logical_errors, "ler": s.ler,
             "ler_stderr": s.ler_stderr, "avg_iterations": s.avg_iterations}
            for s in stats
        ]
        job["status"] = "done"
    except Exception as e:
        logger.exception("sweep %s failed", sweep_id)
        job["status"] = "failed"
        job["error"] = str(e)
    job["expires_at"] = datetime.now() + timedelta(hours=RESULT_EXPIRY_HOURS)


@router.post("/api/sweeps")
@limiter.limit(SWEEP_LIMIT)
async def start_sweep(request: Request, config: ExperimentConfig, workers: int = DEFAULT_WORKERS):
    if workers < 1:
        raise HTTPException(400, "workers must be >= 1")
    workers = min(workers, MAX_WORKERS)
    if config.code.builtin is None and not config.code.tanner:
        raise HTTPException(400, "Sweeps over HTTP accept built-in codes only (code.builtin or code.tanner).")
    try:
        load_code(config.code)  # reject unbuildable codes before any trial runs
    except CodeFileError as e:
        raise HTTPException(400, str(e))
    sweep_id = str(uuid.uuid4())
    sweep_jobs[sweep_id] = {"status": "pending", "created_at": datetime.now().isoformat()}
    threading.Thread(target=_run_sweep, args=(sweep_id, config, workers), daemon=True).start()
    return {"sweep_id": sweep_id, "status_url": f"/api/sweeps/{sweep_id}",
            "download_url": f"{STORAGE_URL}/{sweep_id}"}


@router.get("/api/sweeps/{sweep_id}")
async def sweep_status(sweep_id: str):
    job = sweep_jobs.get(sweep_id)
    if job is None:
        raise HTTPException(404, "Sweep not found")
    return {"sweep_id": sweep_id, **job}


@router.get(f"{STORAGE_URL}/{{file_id}}")
async def download_file(file_id: str):
    meta = file_metadata.get(file_id)
    if meta is None:
        raise HTTPException(404, "File not found or expired")

    if datetime.now() > meta["expires_at"]:
        with _lock:
            file_metadata.pop(file_id, None)
        try:
            if os.path.exists(meta["storage_path"]):
                os.remove(meta["storage_path"])
        except OSError:
            logger.exception("error removing expired result file %s", file_id)
        raise HTTPException(410, "File has expired and been removed")

    if not os.path.exists(meta["storage_path"]):
        with _lock:
            file_metadata.pop(file_id, None)
        raise HTTPException(404, "File not found on disk")

    return StreamingResponse(
        open(meta["storage_path"], "rb"),
        media_type="text/csv",
        headers={
            "Content-Disposition": f'attachment; filename="{meta["filename"]}"',
            "Content-Length": str(meta["size"]),
            "X-Content-Type-Options": "nosniff",
        },
    )
