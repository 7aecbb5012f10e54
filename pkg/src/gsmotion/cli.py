"""Command-line interface.

Subcommands:

* ``synth``    -- render a synthetic frame pair plus ground-truth record
* ``fit``      -- run the kernel-based motion pipeline over one or more cases
* ``baseline`` -- run a classical optical-flow estimator for comparison

Outputs (CSV, SVG, PGM) are deterministic for a fixed config and seed; run
metadata that cannot be deterministic (wall time) goes to a separate
provenance file. Exit codes: 0 success, 2 configuration error, 3 I/O error,
4 convergence failure. Set the GSMOTION_LOG environment variable (DEBUG,
INFO, ...) to control log verbosity.
"""

import argparse
import csv
import hashlib
import logging
import math
import os
import sys
import time

import numpy as np

from .baselines import GaborFilter, horn_schunck, lucas_kanade, phase_flow
from .exceptions import ConfigError, InitializationError
from .fitting import OptimConfig, fit_pair, fit_single_frame, init_kernels
from .image import read_pgm, write_pgm
from .kernels import COL_X, COL_Y
from .metrics import REPORT_COLUMNS, error_stats, stats_csv_row, summary_rows
from .quiver import flow_quiver_svg, write_quiver_svg
from .synthetic import make_pair, read_scene_config, write_scene_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_CONVERGENCE = 4

log = logging.getLogger(__name__)


def _parse_truth(text: str) -> tuple[float, float]:
    try:
        u, v = (float(part) for part in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"--truth expects 'u,v' (pixels), got {text!r}") from exc
    return u, v


def _write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(header)
        writer.writerows(rows)


def _cmd_synth(args) -> int:
    spec = read_scene_config(args.config)
    frame1, frame2, motion = make_pair(spec)
    os.makedirs(args.out, exist_ok=True)
    write_pgm(os.path.join(args.out, "frame1.pgm"), frame1)
    write_pgm(os.path.join(args.out, "frame2.pgm"), frame2)
    write_scene_config(
        os.path.join(args.out, "truth.cfg"),
        spec,
        header="ground-truth scene (pixel units); motion applied to frame2",
    )
    log.info("wrote %dx%d frame pair with applied motion (%g, %g)",
             spec.width, spec.height, motion[0], motion[1])
    return EXIT_OK


def _cmd_fit(args) -> int:
    cfg = OptimConfig.from_config(args.config) if args.config else OptimConfig()
    if args.truth is not None:
        truth = _parse_truth(args.truth)
    elif args.truth_config is not None:
        truth = read_scene_config(args.truth_config).motion
    else:
        raise ConfigError("fit requires ground truth: pass --truth U,V or --truth-config PATH")
    if args.cases < 1:
        raise ConfigError(f"--cases must be >= 1, got {args.cases}")

    frame1 = read_pgm(args.frame1)
    frame2 = read_pgm(args.frame2)
    os.makedirs(args.out, exist_ok=True)

    case_rows = []
    all_stats = []
    provenance = []
    failures = 0
    started = time.perf_counter()

    for index in range(args.cases):
        case_id = f"case{index + 1}"
        case_cfg = cfg.with_seed(cfg.seed + index)
        try:
            initial = init_kernels(case_cfg, frame1)
        except InitializationError as exc:
            failures += 1
            provenance.append(f"{case_id}: seed={case_cfg.seed} initialization failed: {exc}")
            print(f"{case_id}: initialization failed: {exc}", file=sys.stderr)
            continue

        fitted, single_report = fit_single_frame(initial, frame1, case_cfg)
        result = fit_pair(fitted, frame1, frame2, case_cfg)
        if not single_report.converged or not result.report.converged:
            failures += 1

        stats = error_stats(result.displacements, truth)
        all_stats.append(stats)
        case_rows.append(stats_csv_row(case_id, stats))

        centers = result.kernels.params[:, (COL_X, COL_Y)]
        write_quiver_svg(
            os.path.join(args.out, f"motion_{case_id}.svg"),
            centers,
            result.displacements,
            frame1.shape[1],
            frame1.shape[0],
            arrow_scale=args.arrow_scale,
        )
        _write_csv(
            os.path.join(args.out, f"trace_{case_id}.csv"),
            ("iteration", "l1_frame1", "l1_frame2", "l_diff", "l_smooth", "total"),
            (
                (it, f"{b.l1_frame1:.12e}", f"{b.l1_frame2:.12e}",
                 f"{b.l_diff:.12e}", f"{b.l_smooth:.12e}", f"{b.total:.12e}")
                for it, b in enumerate(result.report.trace)
            ),
        )
        provenance.append(
            f"{case_id}: seed={case_cfg.seed} kernels={len(result.kernels)} "
            f"single[{single_report.status} iters={single_report.iterations} "
            f"l1={single_report.best_loss:.6e}] "
            f"joint[{result.report.status} iters={result.report.iterations} "
            f"total={result.report.best_loss:.6e}]"
        )

    _write_csv(
        os.path.join(args.out, "report.csv"),
        REPORT_COLUMNS,
        case_rows + summary_rows(all_stats),
    )

    config_hash = "none"
    if args.config:
        with open(args.config, "rb") as fh:
            config_hash = hashlib.sha256(fh.read()).hexdigest()
    elapsed = time.perf_counter() - started
    with open(os.path.join(args.out, "provenance.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"config_sha256: {config_hash}\n")
        fh.write(f"base_seed: {cfg.seed}\ncases: {args.cases}\n")
        fh.write(f"wall_time_s: {elapsed:.3f}\n")
        fh.write("\n".join(provenance) + "\n")

    if failures:
        print(f"{failures} of {args.cases} case(s) failed to converge; see report", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def _cmd_baseline(args) -> int:
    frame1 = read_pgm(args.frame1)
    frame2 = read_pgm(args.frame2)

    if args.method == "lucas-kanade":
        flow = lucas_kanade(frame1, frame2, window=args.window)
    elif args.method == "horn-schunck":
        flow = horn_schunck(
            frame1, frame2, smoothness=args.smoothness, iterations=args.iterations
        )
    else:
        orientations = [math.radians(float(a)) for a in args.orientations.split(",")]
        filters = [
            GaborFilter(orientation=a, frequency=args.frequency,
                        sigma_x=args.sigma, sigma_y=args.sigma)
            for a in orientations
        ]
        flow = phase_flow(frame1, frame2, filters)

    os.makedirs(args.out, exist_ok=True)
    height, width = flow.shape
    rows = (
        (x, y, f"{flow.u[y, x]:.9e}", f"{flow.v[y, x]:.9e}", int(flow.valid[y, x]))
        for y in range(height)
        for x in range(width)
    )
    _write_csv(os.path.join(args.out, "flow.csv"), ("x", "y", "u", "v", "valid"), rows)
    with open(os.path.join(args.out, "flow.svg"), "w", encoding="utf-8") as fh:
        fh.write(flow_quiver_svg(flow, arrow_scale=args.arrow_scale, stride=args.stride))

    median = flow.median_valid()
    mean = flow.mean_valid()
    summary_header = ["method", "n_valid", "median_u", "median_v", "mean_u", "mean_v"]
    summary_row = [
        args.method,
        int(flow.valid.sum()),
        f"{median[0]:.9e}",
        f"{median[1]:.9e}",
        f"{mean[0]:.9e}",
        f"{mean[1]:.9e}",
    ]
    if args.truth is not None:
        truth = _parse_truth(args.truth)
        summary_header += ["truth_u", "truth_v", "median_error_u", "median_error_v"]
        summary_row += [
            f"{truth[0]:.9e}",
            f"{truth[1]:.9e}",
            f"{abs(median[0] - truth[0]):.9e}",
            f"{abs(median[1] - truth[1]):.9e}",
        ]
    _write_csv(os.path.join(args.out, "summary.csv"), summary_header, [summary_row])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsmotion",
        description="Sub-pixel motion measurement via Gaussian-kernel image "
                    "representations, plus classical optical-flow baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="render a synthetic frame pair from a scene config")
    p_synth.add_argument("--config", required=True, help="scene config file")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.set_defaults(func=_cmd_synth)

    p_fit = sub.add_parser("fit", help="run the kernel-based motion pipeline")
    p_fit.add_argument("--config", help="optimizer config file (defaults apply if omitted)")
    p_fit.add_argument("--frame1", required=True)
    p_fit.add_argument("--frame2", required=True)
    p_fit.add_argument("--cases", type=int, default=1,
                       help="number of runs with derived seeds (base_seed + case index)")
    p_fit.add_argument("--truth", help="applied motion 'u,v' in pixels")
    p_fit.add_argument("--truth-config", help="scene config carrying the applied motion")
    p_fit.add_argument("--arrow-scale", type=float, default=500.0,
                       help="motion arrow magnification in the SVG plots")
    p_fit.add_argument("--out", required=True)
    p_fit.set_defaults(func=_cmd_fit)

    p_base = sub.add_parser("baseline", help="run a classical optical-flow estimator")
    p_base.add_argument("--method", required=True,
                        choices=("lucas-kanade", "horn-schunck", "phase"))
    p_base.add_argument("--frame1", required=True)
    p_base.add_argument("--frame2", required=True)
    p_base.add_argument("--truth", help="applied motion 'u,v' in pixels (optional)")
    p_base.add_argument("--window", type=int, default=9, help="lucas-kanade window (odd)")
    p_base.add_argument("--smoothness", type=float, default=1e-3,
                        help="horn-schunck smoothness weight")
    p_base.add_argument("--iterations", type=int, default=1500,
                        help="horn-schunck sweep count")
    p_base.add_argument("--orientations", default="0,90",
                        help="phase filter orientations in degrees, comma-separated")
    p_base.add_argument("--frequency", type=float, default=0.08,
                        help="phase filter central frequency (cycles/pixel)")
    p_base.add_argument("--sigma", type=float, default=4.0,
                        help="phase filter envelope standard deviation (pixels)")
    p_base.add_argument("--arrow-scale", type=float, default=20.0)
    p_base.add_argument("--stride", type=int, default=8,
                        help="flow arrow subsampling stride in the SVG")
    p_base.add_argument("--out", required=True)
    p_base.set_defaults(func=_cmd_baseline)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("GSMOTION_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
