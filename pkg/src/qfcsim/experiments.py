"""End-to-end experiment drivers and their report writers.

Each driver takes an ExperimentConfig, runs the simulation and analysis,
and returns a result object; the matching writer lays the result down as
deterministic text artifacts (same config and seed, same bytes).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .config import ExperimentConfig
from .conversion import EfficiencyFit, conversion_efficiency, fit_efficiency_curve
from .counting import (CoincidenceWindow, CountSummary, DelayHistogram,
                       InsufficientEventsError, count_summary, delay_histogram,
                       g2_at_offset, g2_zero_from_counts, select_window)
from .metrics import (ChshResult, chsh_assessment, concurrence,
                      entanglement_of_formation, fidelity)
from .qubits import PHI_PLUS, end_to_end_state
from .sources import (EventStream, START_CHANNEL, TRIGGER_CHANNEL,
                      generate_hbt_stream, generate_mzi_stream)
from .tomography import (CountRecord, MleResult, density_matrix_to_json,
                         mle_reconstruct, save_records, save_report,
                         simulate_counts, standard_settings, subtract_background)


# ---------------------------------------------------------------------------
# Pump-power sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    powers_w: np.ndarray
    efficiencies: np.ndarray
    fit: Optional[EfficiencyFit]
    fit_error: str = ""

    @property
    def peak_power_w(self) -> float:
        return float(self.powers_w[int(np.argmax(self.efficiencies))])

    @property
    def peak_efficiency(self) -> float:
        return float(np.max(self.efficiencies))


def run_efficiency_sweep(config: ExperimentConfig,
                         powers_w=None) -> SweepResult:
    """Tabulate conversion efficiency against pump power and refit the law.

    The default grid spans zero to the configured pump power in 2 mW steps.
    A fit failure (too few distinct powers, say) is recorded rather than
    raised so the table is still produced.
    """
    if powers_w is None:
        top = max(config.pump_power, 1e-3)
        powers_w = np.linspace(0.0, top, max(int(round(top / 2e-3)) + 1, 2))
    powers_w = np.asarray(powers_w, dtype=float)
    if powers_w.size == 0:
        raise ValueError("need at least one power")
    model = config.efficiency_model()
    effs = np.array([conversion_efficiency(p, model) for p in powers_w])
    try:
        fit = fit_efficiency_curve(np.column_stack([powers_w, effs]))
        return SweepResult(powers_w, effs, fit)
    except (ValueError, RuntimeError) as exc:
        return SweepResult(powers_w, effs, None, fit_error=str(exc))


def write_sweep(result: SweepResult, outdir, coeff_unit: str = "per_W") -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    table = outdir / "sweep.csv"
    with open(table, "w", encoding="utf-8") as fh:
        fh.write("power_w,efficiency\n")
        for p, e in zip(result.powers_w, result.efficiencies):
            fh.write(f"{float(p)!r},{float(e)!r}\n")
    summary = outdir / "sweep_fit.txt"
    with open(summary, "w", encoding="utf-8") as fh:
        if result.fit is None:
            fh.write(f"fit_error={result.fit_error}\n")
        else:
            fit = result.fit
            fh.write(f"peak={float(fit.peak)!r}\n")
            fh.write(f"coeff={float(fit.coeff)!r}\n")
            fh.write(f"coeff_unit={coeff_unit}\n")
            fh.write(f"residual={float(fit.residual)!r}\n")
            fh.write(f"coeff_identifiable={fit.coeff_identifiable}\n")
            if fit.coeff_identifiable:
                fh.write(f"peak_power_w={float(fit.model(coeff_unit).peak_power_w)!r}\n")
        fh.write(f"table_peak_power_w={float(result.peak_power_w)!r}\n")
        fh.write(f"table_peak_efficiency={float(result.peak_efficiency)!r}\n")
    return [table, summary]


# ---------------------------------------------------------------------------
# Heralded intensity correlation
# ---------------------------------------------------------------------------

@dataclass
class G2Result:
    value: float
    std_error: float
    summary: CountSummary
    histogram: DelayHistogram
    sidebands: dict[int, float] = field(default_factory=dict)
    insufficient: bool = False
    stream: Optional[EventStream] = None


def run_g2_experiment(config: ExperimentConfig, keep_stream: bool = False,
                      sideband_offsets=range(1, 6)) -> G2Result:
    """Generate a heralded correlation stream and estimate g2.

    Sideband estimates at nonzero pulse offsets (both signs) probe the
    accidental level; for uncorrelated pulses they sit at 1.  When the run
    is too short for a meaningful estimate the result carries NaN values
    and the ``insufficient`` flag instead of raising.
    """
    stream = generate_hbt_stream(config)
    window = CoincidenceWindow(config.coincidence_window)
    summary, opportunities = count_summary(stream, window)
    insufficient = (opportunities < 100 or summary.n_start == 0
                    or summary.n_stop == 0)
    if insufficient:
        value, err = math.nan, math.nan
    else:
        value, err = g2_zero_from_counts(summary)
    sidebands: dict[int, float] = {}
    for n in sideband_offsets:
        for offset in (n, -n):
            try:
                sidebands[offset] = g2_at_offset(stream, offset, window)
            except InsufficientEventsError:
                continue
    histogram = delay_histogram(stream, bin_width=50e-12)
    return G2Result(value, err, summary, histogram, sidebands, insufficient,
                    stream if keep_stream else None)


def write_g2(result: G2Result, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    summary_path = outdir / "g2_summary.txt"
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(result.summary.to_text())
        fh.write(f"g2_zero={float(result.value)!r}\n")
        fh.write(f"std_error={float(result.std_error)!r}\n")
        fh.write(f"insufficient={result.insufficient}\n")
        for offset in sorted(result.sidebands):
            fh.write(f"g2_offset_{offset}={float(result.sidebands[offset])!r}\n")
    hist_path = outdir / "g2_histogram.csv"
    result.histogram.save(hist_path)
    return [summary_path, hist_path]


# ---------------------------------------------------------------------------
# Time-bin arrival histogram
# ---------------------------------------------------------------------------

def run_mzi_histogram(config: ExperimentConfig, bin_width: float = 50e-12,
                      postselect: bool = False) -> tuple[DelayHistogram, EventStream]:
    """Arrival-time histogram behind the decoding interferometer.

    Delays are measured from the herald click, so the three path
    combinations pile up at -delay, 0, +delay with weights 1:2:1.  With
    ``postselect`` the configured window keeps only the central slot.
    """
    stream = generate_mzi_stream(config)
    if postselect:
        window = CoincidenceWindow(config.postselect_window)
        stream = select_window(stream, window, start_channel=TRIGGER_CHANNEL,
                               stop_channel=START_CHANNEL)
    hist = delay_histogram(stream, start_channel=TRIGGER_CHANNEL,
                           stop_channel=START_CHANNEL, bin_width=bin_width)
    return hist, stream


# ---------------------------------------------------------------------------
# Tomography of the converted entangled state
# ---------------------------------------------------------------------------

@dataclass
class TomographyResult:
    rho: np.ndarray
    fidelity: float
    concurrence: float
    eof: float
    chsh: ChshResult
    errors: dict[str, float]
    records: list[CountRecord]
    mle: MleResult
    subtracted: bool
    mean_rate_hz: float


def _reconstruct(records: list[CountRecord], subtract: bool,
                 bg_rate: float) -> tuple[MleResult, list[CountRecord]]:
    used = subtract_background(records, bg_rate) if subtract else records
    return mle_reconstruct(used), used


def _metrics_of(rho: np.ndarray) -> tuple[float, float, float, ChshResult]:
    return (fidelity(rho, PHI_PLUS), concurrence(rho),
            entanglement_of_formation(rho), chsh_assessment(rho))


def run_tomography_experiment(config: ExperimentConfig,
                              subtract_bg: bool = False) -> TomographyResult:
    """Simulate the 16-setting schedule on the end-to-end state and reconstruct.

    Pump-induced noise photons enter the simulated state itself (an
    unpolarized admixture), which is what makes them look like a flat
    accidental floor across settings; ``subtract_bg`` removes that floor at
    the configured rate before reconstruction.  Errors on the reported
    metrics come from a parametric bootstrap of the counts.
    """
    seed = config.require_seed()
    rho_true = end_to_end_state(config)
    settings = standard_settings()
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, 0, 1))))
    records = simulate_counts(rho_true, settings, config.n_per_setting,
                              bg_rate=0.0, duration_s=config.duration_per_setting,
                              rng=rng)
    mle, used = _reconstruct(records, subtract_bg, config.bg_rate)
    fid, conc, eof, chsh = _metrics_of(mle.rho)

    errors: dict[str, float] = {}
    if config.n_bootstrap > 0:
        samples = {"fidelity": [], "concurrence": [], "eof": [], "s_max": []}
        for b in range(config.n_bootstrap):
            brng = np.random.Generator(np.random.Philox(
                np.random.SeedSequence((seed, 0, 2, b))))
            resampled = [
                CountRecord(r.setting, int(brng.poisson(r.count)), r.duration_s)
                for r in records
            ]
            bmle, _ = _reconstruct(resampled, subtract_bg, config.bg_rate)
            bf, bc, be, bs = _metrics_of(bmle.rho)
            samples["fidelity"].append(bf)
            samples["concurrence"].append(bc)
            samples["eof"].append(be)
            samples["s_max"].append(bs.s_max)
        errors = {key: float(np.std(vals)) for key, vals in samples.items()}

    total = sum(r.count for r in records)
    mean_rate = total / (len(records) * config.duration_per_setting)
    return TomographyResult(
        rho=mle.rho, fidelity=fid, concurrence=conc, eof=eof, chsh=chsh,
        errors=errors, records=records, mle=mle, subtracted=subtract_bg,
        mean_rate_hz=mean_rate,
    )


def tomography_report(result: TomographyResult) -> dict:
    report = {
        "density_matrix": density_matrix_to_json(result.rho),
        "fidelity": result.fidelity,
        "concurrence": result.concurrence,
        "entanglement_of_formation": result.eof,
        "chsh_s_max": result.chsh.s_max,
        "witness_fidelity": result.chsh.witness_fidelity,
        "witness_violated": result.chsh.witness_violated,
        "background_subtracted": result.subtracted,
        "mean_count_rate_hz": result.mean_rate_hz,
        "mle_iterations": result.mle.iterations,
        "mle_converged": result.mle.converged,
        "log_likelihood": result.mle.log_likelihood,
    }
    for key, val in result.errors.items():
        report[f"{key}_error"] = val
    return report


def write_tomography(result: TomographyResult, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    report_path = outdir / "tomography.json"
    save_report(tomography_report(result), report_path)
    counts_path = outdir / "tomo_counts.csv"
    save_records(result.records, counts_path)
    return [report_path, counts_path]
