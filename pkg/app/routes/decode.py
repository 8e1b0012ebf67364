"""Single-instance decoding endpoint."""

import numpy as np
from fastapi import APIRouter, HTTPException, Request
from pydantic import BaseModel, Field

from codes import BUILTIN_CODES, builtin_code
from config import resolve_seed
from decoder import DecoderConfig, DecoderMode, build_graph, channel_prior, decode
from gf2 import DimensionError
from harness import classify
from noise import PauliErrorVector, ideal_syndrome, observe_syndrome, sample_depolarizing
from ratelimit import DECODE_LIMIT, limiter

router = APIRouter(prefix="/api", tags=["decode"])


class DecodeBody(BaseModel):
    code: str = "hgp_rep3"
    x_support: list[int] | None = None
    z_support: list[int] | None = None
    p: float = Field(0.05, ge=0.0, le=1.0)
    sigma: float = Field(0.0, ge=0.0)
    seed: int = 0
    decoder: DecoderConfig = DecoderConfig()


@router.post("/decode")
@limiter.limit(DECODE_LIMIT)
def decode_one(request: Request, body: DecodeBody):
    if body.code not in BUILTIN_CODES:
        raise HTTPException(400, f"code must be one of {', '.join(BUILTIN_CODES)}")
    code = builtin_code(body.code)
    config = body.decoder
    rng = np.random.default_rng(resolve_seed(body.seed))
    if body.x_support is None and body.z_support is None:
        e = sample_depolarizing(code.n, body.p, rng)
    else:
        supports = (body.x_support or []) + (body.z_support or [])
        if any(not 0 <= j < code.n for j in supports):
            raise HTTPException(400, f"qubit indices must lie in [0, {code.n})")
        e = PauliErrorVector.from_supports(code.n, body.x_support or [], body.z_support or [])

    sigma = 0.0 if config.mode == DecoderMode.PERFECT else body.sigma
    prior = channel_prior(body.p, config.prior_mode, config.llr_sat)
    sides = {}
    estimates = {}
    try:
        for side, H, errors in (("x", code.h_z, e.e_x), ("z", code.h_x, e.e_z)):
            obs = observe_syndrome(ideal_syndrome(H, errors), sigma, config.llr_sat, rng)
            result = decode(build_graph(H), H, prior, obs, config)
            estimates[side] = result.x_hat
            sides[side] = {
                "x_hat": np.flatnonzero(result.x_hat).tolist(),
                "converged": result.converged,
                "iterations": result.iterations,
                "syndrome_flips": int(np.count_nonzero(result.revised_syndrome != obs.hard_bits)),
            }
        classification = classify(code, e, estimates["x"], estimates["z"])
    except DimensionError as exc:
        raise HTTPException(400, str(exc))

    return {
        "code": code.name,
        "error": {"x": np.flatnonzero(e.e_x).tolist(), "z": np.flatnonzero(e.e_z).tolist()},
        "sides": sides,
        "classification": classification.value,
    }
