"""qsynd API: application entry point."""

import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from slowapi.errors import RateLimitExceeded

from config import LOG_LEVEL
from ratelimit import limiter
from routes import codes, decode, sweeps

logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

# ─── App setup ───

app = FastAPI(title="qsynd API")
app.state.limiter = limiter

@app.exception_handler(RateLimitExceeded)
async def rate_limit_handler(request: Request, exc: RateLimitExceeded):
    return JSONResponse(status_code=429, content={"error": "Rate limit exceeded. Try again later."})

# ─── Register routers ───

app.include_router(codes.router)
app.include_router(decode.router)
app.include_router(sweeps.router)

# ─── Start background tasks ───

sweeps.start_cleanup_scheduler()

# ─── Core routes ───

@app.get("/health")
async def health_check():
    return {"status": "healthy", "service": "qsynd"}


@app.get("/api")
async def api_info():
    return {"service": "qsynd API", "version": "1.0.0"}
