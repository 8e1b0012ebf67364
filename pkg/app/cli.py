"""Command-line front end: build-code, validate, decode-one, sweep.

Run from inside app/, e.g. ``python cli.py build-code --tanner --out codes/``.
Exit status: 0 done, 1 CSS validation failed, 2 bad input.
"""

import argparse
import csv
import logging
import pathlib
import sys

import numpy as np

from codes import (
    CodeFileError, css_validate, lifted_product, load_base_matrix,
    tanner_base, write_code_alist,
)
from config import DEFAULT_WORKERS, LOG_LEVEL, resolve_seed
from decoder import DecoderConfig, DecoderMode, PriorMode, TRACE_HEADER, build_graph, channel_prior, decode
from gf2 import DimensionError, MatrixFormatError, read_dense, write_dense
from harness import (
    CodeSource, ConfigError, classify, load_code, load_experiment_config,
    run_experiment, write_results_csv,
)
from noise import PauliErrorVector, ideal_syndrome, observe_syndrome, sample_depolarizing, write_observations_csv

logger = logging.getLogger("qsynd")

EXIT_OK, EXIT_CSS_FAIL, EXIT_BAD_INPUT = 0, 1, 2


# ─── Shared option groups ───

def _add_code_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("code")
    group.add_argument("--builtin", help="built-in code: lp_tanner, hgp_rep3, hgp_trivial")
    group.add_argument("--tanner", action="store_true", help="LP code of the [155,64,20] Tanner base with itself")
    group.add_argument("--base-a", help="QcBaseMatrix JSON file")
    group.add_argument("--base-b", help="second QcBaseMatrix JSON file (defaults to --base-a)")
    group.add_argument("--hx", help="H_X alist file")
    group.add_argument("--hz", help="H_Z alist file")
    group.add_argument("--name", help="code label used in outputs")


def _code_source(args) -> CodeSource:
    return CodeSource(
        builtin=args.builtin, tanner=args.tanner, base_a=args.base_a, base_b=args.base_b,
        hx_alist=args.hx, hz_alist=args.hz, name=args.name,
    )


def _add_decoder_options(parser: argparse.ArgumentParser) -> None:
    defaults = DecoderConfig()
    group = parser.add_argument_group("decoder")
    group.add_argument("--mode", choices=[m.value for m in DecoderMode], default=DecoderMode.SOFT.value)
    group.add_argument("--beta", type=float, default=defaults.beta)
    group.add_argument("--gamma-cutoff", type=float, default=defaults.gamma_cutoff)
    group.add_argument("--l-max", type=int, default=defaults.l_max)
    group.add_argument("--llr-sat", type=float, default=defaults.llr_sat)
    group.add_argument("--prior-mode", choices=[m.value for m in PriorMode], default=defaults.prior_mode.value)
    group.add_argument("--evolving-check-inputs", action="store_true",
                       help="check updates read the evolving beliefs instead of the measured (s, |gamma|)")


def _decoder_config(args) -> DecoderConfig:
    return DecoderConfig(
        mode=DecoderMode(args.mode), beta=args.beta, gamma_cutoff=args.gamma_cutoff, l_max=args.l_max,
        llr_sat=args.llr_sat, prior_mode=PriorMode(args.prior_mode),
        evolving_check_inputs=args.evolving_check_inputs,
    )


# ─── Commands ───

def cmd_build_code(args) -> int:
    if args.tanner:
        a = b = tanner_base()
        name = args.name or "lp_tanner"
    else:
        if not args.base_a:
            raise CodeFileError("give --tanner or --base-a [--base-b]")
        a = load_base_matrix(args.base_a)
        b = load_base_matrix(args.base_b) if args.base_b else a
        name = args.name or pathlib.Path(args.base_a).stem
    code = lifted_product(a, b, name=name)
    report = css_validate(code)
    if args.out:
        hx_path, hz_path = write_code_alist(code, args.out)
        logger.info("wrote %s and %s", hx_path, hz_path)
        if args.dense:
            write_dense(pathlib.Path(args.out) / f"{name}_hx.txt", code.h_x.to_bitmatrix())
            write_dense(pathlib.Path(args.out) / f"{name}_hz.txt", code.h_z.to_bitmatrix())
    print(report.summary())
    return EXIT_OK if report.ok else EXIT_CSS_FAIL


def cmd_validate(args) -> int:
    code = load_code(_code_source(args))
    report = css_validate(code)
    print(report.summary())
    print(f"rank_x={report.rank_x} rank_z={report.rank_z}")
    print(f"row_degrees_x={report.row_degrees_x} col_degrees_x={report.col_degrees_x}")
    print(f"row_degrees_z={report.row_degrees_z} col_degrees_z={report.col_degrees_z}")
    if report.offending_pairs:
        shown = ", ".join(f"({i},{j})" for i, j in report.offending_pairs[:20])
        print(f"offending_pairs={shown}{' ...' if len(report.offending_pairs) > 20 else ''}")
    return EXIT_OK if report.ok else EXIT_CSS_FAIL


def _error_from_file(path, n: int) -> PauliErrorVector:
    """Two-row dense 0/1 file: first row e_X, second row e_Z."""
    grid = read_dense(path)
    if grid.rows != 2 or grid.cols != n:
        raise DimensionError(f"error file {path} is {grid.rows}x{grid.cols}, expected 2x{n}")
    dense = grid.to_dense()
    return PauliErrorVector(dense[0].copy(), dense[1].copy())


def _error_of_weight(n: int, weight: int, rng: np.random.Generator) -> PauliErrorVector:
    qubits = rng.choice(n, size=weight, replace=False)
    paulis = rng.integers(1, 4, size=weight)  # 1 X, 2 Z, 3 Y
    e = PauliErrorVector.from_supports(n)
    e.e_x[qubits[paulis % 2 == 1]] = 1
    e.e_z[qubits[paulis >= 2]] = 1
    return e


def _support(bits) -> str:
    return "[" + ",".join(str(j) for j in np.flatnonzero(bits)) + "]"


def cmd_decode_one(args) -> int:
    code = load_code(_code_source(args))
    config = _decoder_config(args)
    rng = np.random.default_rng(resolve_seed(args.seed))
    if args.error:
        e = _error_from_file(args.error, code.n)
    elif args.weight is not None:
        e = _error_of_weight(code.n, args.weight, rng)
    else:
        e = sample_depolarizing(code.n, args.p, rng)
    sigma = 0.0 if config.mode == DecoderMode.PERFECT else args.sigma
    prior = channel_prior(args.p, config.prior_mode, config.llr_sat)
    observations, trace_rows, results = [], [], {}
    for side, H, errors in (("X", code.h_z, e.e_x), ("Z", code.h_x, e.e_z)):
        obs = observe_syndrome(ideal_syndrome(H, errors), sigma, config.llr_sat, rng)
        observations.append((side, obs))
        side_trace = [] if args.trace else None
        result = decode(build_graph(H), H, prior, obs, config, trace=side_trace)
        if side_trace is not None:
            trace_rows.extend([side] + row for row in side_trace)
        results[side] = result
        print(f"side={side} converged={result.converged} iterations={result.iterations} "
              f"x_hat={_support(result.x_hat)}")
    print(f"error={e.pauli_string() if code.n <= 64 else _support(e.e_x) + _support(e.e_z)}")
    print(f"classification={classify(code, e, results['X'].x_hat, results['Z'].x_hat).value}")
    if args.trace:
        with open(args.trace, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["side"] + TRACE_HEADER)
            writer.writerows(trace_rows)
    if args.dump_noise:
        write_observations_csv(args.dump_noise, observations)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = load_experiment_config(args.config)
    stats = run_experiment(config, workers=args.workers)
    write_results_csv(stats, args.out)
    for s in stats:
        print(f"{s.code} mode={s.mode.value} p={s.p} sigma={s.sigma} gamma={s.gamma_cutoff} "
              f"trials={s.trials} ler={s.ler:.4e} avg_iterations={s.avg_iterations:.2f}")
    logger.info("wrote %d rows to %s", len(stats), args.out)
    return EXIT_OK


# ─── Entry point ───

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsynd", description="Soft-syndrome min-sum decoding for QLDPC codes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-code", help="lifted-product code from base matrices")
    p.add_argument("--tanner", action="store_true", help="use the built-in Tanner base for both factors")
    p.add_argument("--base-a")
    p.add_argument("--base-b")
    p.add_argument("--name")
    p.add_argument("--out", help="directory for <name>_hx.alist and <name>_hz.alist")
    p.add_argument("--dense", action="store_true", help="also write dense 0/1 grids")
    p.set_defaults(func=cmd_build_code)

    p = sub.add_parser("validate", help="check H_X H_Z^T = 0 and report n, k, degrees")
    _add_code_options(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("decode-one", help="decode a single error instance on both sides")
    _add_code_options(p)
    _add_decoder_options(p)
    p.add_argument("--error", help="two-row dense file: e_X then e_Z")
    p.add_argument("--weight", type=int, help="sample a random Pauli error of exactly this weight")
    p.add_argument("--p", type=float, default=0.05, help="depolarizing probability (prior and sampling)")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="CSV file for per-iteration messages")
    p.add_argument("--dump-noise", help="CSV file for the raw/LLR syndrome readout")
    p.set_defaults(func=cmd_decode_one)

    p = sub.add_parser("sweep", help="Monte-Carlo sweep from an ExperimentConfig JSON")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=DEFAULT_WORKERS)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CodeFileError, MatrixFormatError, DimensionError, ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
