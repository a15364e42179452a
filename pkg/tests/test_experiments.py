"""End-to-end experiment drivers: sweep, correlation run, arrival
histogram, and tomography, including their output files."""

import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qfcsim.config import (
    ExperimentConfig,
    calibrated_g2_config,
    calibrated_tomo_config,
    source_only_tomo_config,
)
from qfcsim.experiments import (
    run_efficiency_sweep,
    run_g2_experiment,
    run_mzi_histogram,
    run_tomography_experiment,
    tomography_report,
    write_g2,
    write_sweep,
    write_tomography,
)
from qfcsim.tomography import load_records, mle_reconstruct
from qfcsim.counting import CountSummary


def test_sweep_default_grid_and_fit():
    cfg = ExperimentConfig()
    res = run_efficiency_sweep(cfg)
    assert res.powers_w[0] == 0.0
    assert res.powers_w[-1] == pytest.approx(cfg.pump_power)
    assert len(res.powers_w) == 351  # 2 mW steps over 0..0.7 W
    assert res.fit is not None
    assert abs(res.fit.peak - 0.62) < 1e-9
    assert abs(res.fit.coeff - 3.6) < 1e-9
    # the sampled maximum sits below the true peak power on this grid
    assert abs(res.peak_power_w - res.fit.model().peak_power_w) < 2e-3


def test_sweep_custom_powers_and_degenerate_grid():
    cfg = ExperimentConfig()
    res = run_efficiency_sweep(cfg, powers_w=[0.0, 0.2, 0.4, 0.6])
    assert len(res.efficiencies) == 4
    assert res.fit is not None
    short = run_efficiency_sweep(cfg, powers_w=[0.1])
    assert short.fit is None
    assert "three distinct powers" in short.fit_error


def test_write_sweep_files(tmp_path):
    cfg = ExperimentConfig()
    res = run_efficiency_sweep(cfg)
    paths = write_sweep(res, tmp_path, coeff_unit=cfg.eff_coeff_unit)
    table = (tmp_path / "sweep.csv").read_text().splitlines()
    assert table[0] == "power_w,efficiency"
    assert len(table) == 352
    first_power = float(table[1].split(",")[0])
    assert first_power == 0.0
    fit_lines = dict(line.split("=", 1)
                     for line in (tmp_path / "sweep_fit.txt").read_text().splitlines())
    assert float(fit_lines["peak"]) == pytest.approx(0.62, abs=1e-9)
    assert float(fit_lines["coeff"]) == pytest.approx(3.6, abs=1e-9)
    assert fit_lines["coeff_unit"] == "per_W"
    assert float(fit_lines["peak_power_w"]) == pytest.approx(0.6853891945200943)
    assert all(p.exists() for p in paths)


def test_g2_experiment_is_deterministic():
    cfg = calibrated_g2_config(seed=121)
    cfg.n_pulses = 300_000
    a = run_g2_experiment(cfg)
    b = run_g2_experiment(cfg)
    assert a.value == b.value
    assert a.summary == b.summary
    assert a.sidebands == b.sidebands
    assert not a.insufficient
    assert set(a.sidebands) <= {n for k in range(1, 6) for n in (k, -k)}


def test_g2_insufficient_run_yields_nan():
    cfg = calibrated_g2_config(seed=3)
    cfg.n_pulses = 2000  # ~70 triggers, below the opportunity floor
    res = run_g2_experiment(cfg)
    assert res.insufficient
    assert math.isnan(res.value)
    assert math.isnan(res.std_error)


def test_write_g2_files(tmp_path):
    cfg = calibrated_g2_config(seed=121)
    cfg.n_pulses = 300_000
    res = run_g2_experiment(cfg)
    write_g2(res, tmp_path)
    text = (tmp_path / "g2_summary.txt").read_text()
    summary = CountSummary.from_text(text)
    assert summary == res.summary
    values = dict(line.split("=", 1) for line in text.splitlines() if "=" in line)
    assert float(values["g2_zero"]) == res.value
    assert values["insufficient"] == "False"
    hist_lines = (tmp_path / "g2_histogram.csv").read_text().splitlines()
    assert hist_lines[0] == "delay_ps,count"
    mass = sum(int(line.split(",")[1]) for line in hist_lines[1:])
    assert mass == res.histogram.mass


def test_mzi_histogram_slot_weights():
    cfg = ExperimentConfig(
        source_kind="single_photon",
        pump_power=(math.pi / 2.0) ** 2 / 3.6,
        eff_peak=1.0, extra_transmittance=1.0,
        noise_coeff=0.0, pump_linewidth=0.0,
        det1_efficiency=1.0, det1_dark=0.0,
        det2_efficiency=1.0, det2_dark=0.0,
        n_pulses=200_000, seed=13,
    )
    hist, stream = run_mzi_histogram(cfg)
    delay_ps = cfg.mzi_delay * 1e12
    areas = {}
    for name, center in (("early", -delay_ps), ("central", 0.0), ("late", delay_ps)):
        sel = np.abs(hist.centers_ps - center) <= 450.0
        areas[name] = int(hist.counts[sel].sum())
    total = sum(areas.values())
    assert total == hist.mass  # nothing lands outside the three slots
    assert abs(areas["early"] / areas["central"] - 0.5) < 0.03
    assert abs(areas["late"] / areas["central"] - 0.5) < 0.03
    # post-selection keeps only the central slot
    kept, _ = run_mzi_histogram(cfg, postselect=True)
    assert np.max(np.abs(kept.centers_ps[kept.counts > 0])) <= 100.0
    assert kept.mass < areas["central"] + 1
    assert kept.mass > 0.5 * areas["central"]


def test_tomography_source_only_fidelity():
    cfg = source_only_tomo_config()
    cfg.n_bootstrap = 6
    res = run_tomography_experiment(cfg)
    assert abs(res.fidelity - 0.95) < 0.02
    assert res.chsh.witness_violated
    assert res.errors["fidelity"] < 0.02
    assert not res.subtracted


def test_tomography_determinism_and_rate():
    cfg = calibrated_tomo_config(seed=400)
    cfg.n_bootstrap = 0
    a = run_tomography_experiment(cfg)
    b = run_tomography_experiment(cfg)
    assert a.fidelity == b.fidelity
    assert_allclose(a.rho, b.rho, atol=0.0)
    assert a.errors == {}
    total = sum(r.count for r in a.records)
    assert a.mean_rate_hz == pytest.approx(total / (16 * cfg.duration_per_setting))


def test_tomography_subtraction_uses_configured_rate():
    cfg = calibrated_tomo_config(seed=401)
    cfg.n_bootstrap = 0
    raw = run_tomography_experiment(cfg)
    sub = run_tomography_experiment(cfg, subtract_bg=True)
    # same simulated counts, reconstruction on the floored difference
    floor = int(round(cfg.bg_rate * cfg.duration_per_setting))
    expected_counts = [max(0, r.count - floor) for r in raw.records]
    redone = mle_reconstruct(settings=[r.setting for r in raw.records],
                             counts=expected_counts)
    assert_allclose(sub.rho, redone.rho, atol=1e-12)
    assert sub.fidelity > raw.fidelity + 0.1


def test_tomography_report_and_files(tmp_path):
    cfg = calibrated_tomo_config(seed=402)
    cfg.n_bootstrap = 4
    res = run_tomography_experiment(cfg)
    report = tomography_report(res)
    for key in ("density_matrix", "fidelity", "concurrence",
                "entanglement_of_formation", "chsh_s_max", "witness_fidelity",
                "witness_violated", "background_subtracted",
                "mean_count_rate_hz", "mle_iterations", "mle_converged",
                "log_likelihood", "fidelity_error", "s_max_error"):
        assert key in report
    paths = write_tomography(res, tmp_path)
    assert all(p.exists() for p in paths)
    loaded = json.loads((tmp_path / "tomography.json").read_text())
    assert loaded["fidelity"] == pytest.approx(res.fidelity)
    # saved counts reconstruct to the same state
    recs = load_records(tmp_path / "tomo_counts.csv")
    again = mle_reconstruct(recs)
    assert_allclose(again.rho, res.mle.rho, atol=1e-9)
