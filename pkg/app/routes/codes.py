"""Code construction endpoints: build from uploaded base matrices, inspect built-in codes."""

from fastapi import APIRouter, File, Form, HTTPException, Request, UploadFile

from codes import (
    BUILTIN_CODES, CodeFileError, builtin_code, css_validate, lifted_product,
    lifted_product_qubits, parse_base_matrix, tanner_base,
)
from config import MAX_UPLOAD_BYTES, MAX_UPLOAD_QUBITS
from ratelimit import BUILD_LIMIT, limiter

router = APIRouter(prefix="/api/codes", tags=["codes"])


async def _read_base(upload: UploadFile, field: str):
    content = await upload.read(MAX_UPLOAD_BYTES + 1)
    if len(content) > MAX_UPLOAD_BYTES:
        raise HTTPException(400, f"{field} exceeds {MAX_UPLOAD_BYTES} bytes")
    return parse_base_matrix(content, source=upload.filename or field)


@router.post("/build")
@limiter.limit(BUILD_LIMIT)
async def build(
    request: Request,
    base_a: UploadFile | None = File(None),
    base_b: UploadFile | None = File(None),
    tanner: bool = Form(False),
    name: str | None = Form(None),
):
    if tanner:
        a = b = tanner_base()
        name = name or "lp_tanner"
    else:
        if base_a is None:
            raise HTTPException(400, "Upload base_a (and optionally base_b) or set tanner=true.")
        try:
            a = await _read_base(base_a, "base_a")
            b = await _read_base(base_b, "base_b") if base_b else a
        except CodeFileError as e:
            raise HTTPException(400, str(e))
        if a.L == b.L and lifted_product_qubits(a, b) > MAX_UPLOAD_QUBITS:
            raise HTTPException(400, f"Code would have {lifted_product_qubits(a, b)} qubits; "
                                     f"the limit is {MAX_UPLOAD_QUBITS}.")
        name = name or "lp"
    try:
        code = lifted_product(a, b, name=name)
    except CodeFileError as e:
        raise HTTPException(400, str(e))
    report = css_validate(code)
    return {
        "name": code.name,
        "n": code.n,
        "k": code.k,
        "css": "ok" if report.ok else "fail",
        "h_x_rows": [code.h_x.row_support(i).tolist() for i in range(code.h_x.rows)],
        "h_z_rows": [code.h_z.row_support(i).tolist() for i in range(code.h_z.rows)],
        "report": report.to_dict(),
    }


@router.get("/{builtin}")
async def describe(builtin: str):
    if builtin not in BUILTIN_CODES:
        raise HTTPException(404, f"Unknown code '{builtin}'")
    return css_validate(builtin_code(builtin)).to_dict()
