"""Shared fixtures: the synthetic dataset and one fully trained pipeline run."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import pytest

from larvaecast import synth
from larvaecast.pipeline import (
    PipelineConfig,
    cmd_forecast,
    cmd_prepare,
    cmd_project,
    cmd_report,
    cmd_train_abundance,
    cmd_train_climate,
)

PIPELINE_SEED = 4242
DENSE_EPOCHS = 600
LSTM_EPOCHS = 150


@dataclass
class PipelineRun:
    data: dict[str, Path]
    out_dir: Path
    prepare_report: dict
    abundance_report: dict
    climate_report: dict
    forecast_report: dict
    project_report: dict
    report_summary: dict


@pytest.fixture(scope="session")
def synth_data(tmp_path_factory) -> dict[str, Path]:
    return synth.generate_dataset(tmp_path_factory.mktemp("synth"))


def run_pipeline(data: dict[str, Path], out_dir: Path) -> PipelineRun:
    cfg = PipelineConfig(
        out_dir=out_dir,
        observations=data["observations"],
        stations=data["stations"],
        series=data["series"],
        regions=data["regions"],
        seed=PIPELINE_SEED,
        max_epochs=DENSE_EPOCHS,
    )
    prepare_report = cmd_prepare(cfg)
    abundance_report = cmd_train_abundance(cfg)
    climate_report = cmd_train_climate(cfg, lstm_max_epochs=LSTM_EPOCHS)
    forecast_report = cmd_forecast(cfg)
    project_report = cmd_project(cfg, years=[2030, 2050])
    report_summary = cmd_report(cfg, start_year=2030, end_year=2050)
    return PipelineRun(
        data=data,
        out_dir=out_dir,
        prepare_report=prepare_report,
        abundance_report=abundance_report,
        climate_report=climate_report,
        forecast_report=forecast_report,
        project_report=project_report,
        report_summary=report_summary,
    )


@pytest.fixture(scope="session")
def pipeline_run(synth_data, tmp_path_factory) -> PipelineRun:
    return run_pipeline(synth_data, tmp_path_factory.mktemp("pipeline"))
