"""Recursive multi-step climate forecasting.

Each region's last ``lookback`` observations are standardized, predicted
``horizon`` steps ahead, de-standardized, appended, and the rolled
window is re-standardized with fresh statistics before the next round.
The de-standardize / re-standardize sequence is kept literal (not
algebraically collapsed) so intermediate windows can be inspected.

A window whose population sigma falls below ``sigma_floor`` standardizes
as a pure mean shift (sigma treated as 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, ShapeError

DEFAULT_SIGMA_FLOOR = 1e-9


@dataclass(frozen=True)
class ForecastConfig:
    lookback: int = 20
    horizon: int = 10
    rounds: int = 3
    sigma_floor: float = DEFAULT_SIGMA_FLOOR

    def __post_init__(self):
        if min(self.lookback, self.horizon, self.rounds) < 1:
            raise ConfigError("lookback, horizon, and rounds must be positive")
        if self.horizon > self.lookback:
            raise ConfigError("horizon must not exceed lookback")
        if self.sigma_floor <= 0:
            raise ConfigError("sigma_floor must be positive")


@dataclass
class ForecastResult:
    region_id: str
    variable: str
    start_year: int
    values: np.ndarray  # length horizon * rounds

    def years(self) -> list[int]:
        return list(range(self.start_year, self.start_year + self.values.size))


def forecast(predict, windows, cfg: ForecastConfig) -> np.ndarray:
    """Recursive forecast of ``rounds`` blocks for each input window.

    ``predict`` maps a standardized window of length ``lookback`` to a
    standardized prediction of length ``horizon``. ``windows`` is an
    (m, lookback) array (or a list of length-lookback sequences) in
    original units; the result is (m, horizon * rounds), also in
    original units. Regions are independent and processed in order.
    """
    windows = np.asarray(windows, dtype=float)
    if windows.ndim == 1:
        windows = windows[None, :]
    if windows.ndim != 2 or windows.shape[1] != cfg.lookback:
        raise ShapeError(
            f"windows must be (m, {cfg.lookback}), got shape {windows.shape}"
        )
    l, p = cfg.lookback, cfg.horizon
    outputs = np.empty((windows.shape[0], p * cfg.rounds))
    for i in range(windows.shape[0]):
        x = windows[i].copy()
        mu = float(x.mean())
        sigma = float(x.std())
        if sigma < cfg.sigma_floor:
            sigma = 1.0
        x = (x - mu) / sigma
        collected = []
        for _ in range(cfg.rounds):
            y = np.asarray(predict(x), dtype=float)
            if y.shape != (p,):
                raise ShapeError(
                    f"model must predict {p} values, got shape {y.shape}"
                )
            y = y * sigma + mu
            x = x * sigma + mu
            collected.append(y)
            x = np.concatenate([x[p:], y])
            mu = float(x.mean())
            sigma = float(x.std())
            if sigma < cfg.sigma_floor:
                sigma = 1.0
            x = (x - mu) / sigma
        outputs[i] = np.concatenate(collected)
    return outputs


def forecast_series(
    predict, region_id: str, variable: str, years, values, cfg: ForecastConfig
) -> ForecastResult:
    """Forecast one named annual series from its trailing lookback window."""
    values = np.asarray(values, dtype=float)
    if values.size < cfg.lookback:
        raise DataError(
            f"series {region_id!r}/{variable!r} has {values.size} values; "
            f"forecasting needs at least {cfg.lookback}"
        )
    window = values[-cfg.lookback :]
    projected = forecast(predict, window[None, :], cfg)[0]
    return ForecastResult(
        region_id=region_id,
        variable=variable,
        start_year=int(years[-1]) + 1,
        values=projected,
    )
