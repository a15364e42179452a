"""Command-line front end.

Subcommands: ``sweep`` (pump-power efficiency curve), ``g2`` (heralded
intensity correlation), ``tomo`` (two-qubit tomography of the converted
state), and ``analyze`` (re-analysis of saved event streams or count
records).  Exit status is 0 on success, 2 on configuration errors, and 3
on numerical failures.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, parse_scalar
from .counting import (CoincidenceWindow, InsufficientEventsError,
                       count_summary, delay_histogram, g2_zero_from_counts)
from .experiments import (run_efficiency_sweep, run_g2_experiment,
                          run_mzi_histogram, run_tomography_experiment,
                          write_g2, write_sweep, write_tomography)
from .metrics import chsh_assessment, concurrence, entanglement_of_formation, fidelity
from .qubits import PHI_PLUS
from .sources import EventStream
from .tomography import (density_matrix_to_json, load_records, mle_reconstruct,
                         save_report, subtract_background)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qfcsim",
        description="Simulate and analyze a frequency-conversion quantum interface.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_seed=True):
        p.add_argument("--config", required=True, help="key=value config file")
        p.add_argument("--out", default="out", help="output directory")
        if needs_seed:
            p.add_argument("--seed", type=int, default=None,
                           help="override the config seed")

    p_sweep = sub.add_parser("sweep", help="pump-power efficiency sweep and fit")
    add_common(p_sweep, needs_seed=False)

    p_g2 = sub.add_parser("g2", help="heralded g2 measurement")
    add_common(p_g2)
    p_g2.add_argument("--save-stream", action="store_true",
                      help="also write the raw event stream")

    p_tomo = sub.add_parser("tomo", help="two-qubit tomography of the converted state")
    add_common(p_tomo)
    p_tomo.add_argument("--subtract-bg", action="store_true",
                        help="subtract the configured flat background before MLE")
    p_tomo.add_argument("--timebin-histogram", action="store_true",
                        help="also simulate and write the arrival-time histogram")

    p_an = sub.add_parser("analyze", help="re-analyze saved streams or count records")
    p_an.add_argument("--stream", help="event stream file to analyze")
    p_an.add_argument("--counts", help="count-record file to reconstruct from")
    p_an.add_argument("--out", default="out", help="output directory")
    p_an.add_argument("--bin-width", default="50ps",
                      help="histogram bin width (e.g. 50ps)")
    p_an.add_argument("--window", default="1ns",
                      help="coincidence window width (e.g. 1ns)")
    p_an.add_argument("--start-channel", type=int, default=2)
    p_an.add_argument("--stop-channel", type=int, default=3)
    p_an.add_argument("--subtract-bg", action="store_true",
                      help="subtract a flat background from count records")
    p_an.add_argument("--bg-rate", default="0.2Hz",
                      help="background rate for --subtract-bg")
    return parser


def _load_config(args) -> ExperimentConfig:
    config = ExperimentConfig.from_file(args.config)
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
        config.validate()
    return config


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    result = run_efficiency_sweep(config)
    paths = write_sweep(result, args.out, coeff_unit=config.eff_coeff_unit)
    for p in paths:
        print(p)
    return 0


def _cmd_g2(args) -> int:
    config = _load_config(args)
    result = run_g2_experiment(config, keep_stream=args.save_stream)
    paths = write_g2(result, args.out)
    if args.save_stream and result.stream is not None:
        stream_path = Path(args.out) / "events.csv"
        result.stream.save(stream_path)
        paths.append(stream_path)
    for p in paths:
        print(p)
    return 0


def _cmd_tomo(args) -> int:
    config = _load_config(args)
    result = run_tomography_experiment(config, subtract_bg=args.subtract_bg)
    paths = write_tomography(result, args.out)
    if args.timebin_histogram:
        hist, _ = run_mzi_histogram(config)
        hist_path = Path(args.out) / "timebin_histogram.csv"
        hist.save(hist_path)
        paths.append(hist_path)
    for p in paths:
        print(p)
    return 0


def _cmd_analyze(args) -> int:
    if bool(args.stream) == bool(args.counts):
        raise ConfigError("analyze needs exactly one of --stream or --counts")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    if args.stream:
        try:
            stream = EventStream.load(args.stream)
        except OSError as exc:
            raise ConfigError(f"cannot read stream file: {exc}") from exc
        bin_width = parse_scalar(args.bin_width)
        window = CoincidenceWindow(parse_scalar(args.window))
        hist = delay_histogram(stream, args.start_channel, args.stop_channel,
                               bin_width=bin_width)
        hist_path = outdir / "histogram.csv"
        hist.save(hist_path)
        summary, _ = count_summary(stream, window, start_channel=args.start_channel,
                                   stop_channel=args.stop_channel)
        summary_path = outdir / "count_summary.txt"
        with open(summary_path, "w", encoding="utf-8") as fh:
            fh.write(summary.to_text())
            try:
                value, err = g2_zero_from_counts(summary)
            except InsufficientEventsError:
                value, err = math.nan, math.nan
            fh.write(f"g2_zero={float(value)!r}\nstd_error={float(err)!r}\n")
        print(hist_path)
        print(summary_path)
        return 0

    try:
        records = load_records(args.counts)
    except OSError as exc:
        raise ConfigError(f"cannot read count records: {exc}") from exc
    if args.subtract_bg:
        records = subtract_background(records, parse_scalar(args.bg_rate))
    mle = mle_reconstruct(records)
    chsh = chsh_assessment(mle.rho)
    report = {
        "density_matrix": density_matrix_to_json(mle.rho),
        "fidelity": fidelity(mle.rho, PHI_PLUS),
        "concurrence": concurrence(mle.rho),
        "entanglement_of_formation": entanglement_of_formation(mle.rho),
        "chsh_s_max": chsh.s_max,
        "witness_fidelity": chsh.witness_fidelity,
        "witness_violated": chsh.witness_violated,
        "background_subtracted": bool(args.subtract_bg),
        "mle_iterations": mle.iterations,
        "mle_converged": mle.converged,
        "log_likelihood": mle.log_likelihood,
    }
    report_path = outdir / "tomography.json"
    save_report(report, report_path)
    print(report_path)
    return 0


_COMMANDS = {
    "sweep": _cmd_sweep,
    "g2": _cmd_g2,
    "tomo": _cmd_tomo,
    "analyze": _cmd_analyze,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
