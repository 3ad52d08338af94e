"""Pipeline stages behind the CLI: prepare, train, forecast, project, report.

Every stage is deterministic for a fixed seed: rerunning a stage on the
same inputs produces byte-identical output files. Intermediate artifacts
are plain CSV and JSON documents in the configured output directory.
"""

from __future__ import annotations

import csv
import datetime
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ingest, serialize
from .errors import ConfigError, DataError, ParseError
from .forecast import ForecastConfig, ForecastResult, forecast_series
from .ingest import FEATURE_NAMES, FeatureRow
from .lstm import WindowConfig, lstm_forward, make_windows, train_lstm
from .nn import ABUNDANCE_LAYER_DIMS, forward, train_abundance
from .optim import TrainConfig
from .preprocess import LogCountTransform, StandardScaler
from .stats import correlation_report, residual_summary
from .trend import OffsetK, estimate_k, fit_linear, predict_days

FEATURES_CSV = "features.csv"
INGEST_REPORT_JSON = "ingest_report.json"
ABUNDANCE_MODEL_JSON = "abundance_model.json"
ABUNDANCE_SCALERS_JSON = "abundance_scalers.json"
ABUNDANCE_REPORT_JSON = "abundance_report.json"
OFFSETS_JSON = "offsets.json"
DAYS_MODEL_JSON = "precip_days_model.json"
FORECAST_CSV = "forecast.csv"
PROJECTIONS_CSV = "projections.csv"
CHOROPLETH_CSV = "choropleth.csv"
PERCENT_CHANGE_CSV = "percent_change.csv"

FORECAST_VARIABLES = ("summer_tmean", "summer_precip")
DERIVED_DAYS_VARIABLE = "summer_precip_days"


def lstm_document_name(variable: str) -> str:
    return f"lstm_{variable}.json"


def _fmt(value) -> str:
    return repr(float(value))


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


@dataclass
class PipelineConfig:
    out_dir: Path
    observations: Path | None = None
    stations: Path | None = None
    series: Path | None = None
    regions: Path | None = None
    seed: int = 0
    holdout_oldest: int = 35
    target_year: int = 2050
    rounds: int = 3
    max_km: float = ingest.DEFAULT_MAX_STATION_KM
    lookback: int = 20
    horizon: int = 10
    batch_size: int = 8
    learning_rate: float = 1e-3
    max_epochs: int = 5000
    lstm_hidden_size: int = 32
    dropout_rate: float = 0.2
    log_offset: float = 1.0

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        for name in ("observations", "stations", "series", "regions"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def train_config(self, seed_offset: int = 0, max_epochs: int | None = None) -> TrainConfig:
        return TrainConfig(
            seed=self.seed + seed_offset,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            max_epochs=self.max_epochs if max_epochs is None else max_epochs,
        )


# -- prepare -------------------------------------------------------------


def cmd_prepare(cfg: PipelineConfig) -> dict:
    """Clean observations and join station features into features.csv."""
    if cfg.observations is None or cfg.stations is None:
        raise ConfigError("prepare needs --observations and --stations")
    observations = ingest.parse_observations(cfg.observations)
    stations = ingest.parse_stations(cfg.stations)

    kept = ingest.filter_container_sources(observations)
    containers_dropped = len(observations) - len(kept)
    merged = ingest.merge_duplicates(kept)
    duplicates_merged = len(kept) - len(merged)
    rows, proximity_dropped = ingest.join_nearest_station(merged, stations, cfg.max_km)
    if not rows:
        raise DataError(
            "no observations survived cleaning "
            f"(container={containers_dropped}, merged={duplicates_merged}, "
            f"proximity={proximity_dropped})"
        )

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    with cfg.path(FEATURES_CSV).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["location_id", "date", "month", *FEATURE_NAMES, "larvae_count"])
        for row in rows:
            writer.writerow(
                [
                    row.location_id, row.date.isoformat(), row.month,
                    *(_fmt(v) for v in row.features()), int(row.larvae_count),
                ]
            )
    report = {
        "input_rows": len(observations),
        "container": containers_dropped,
        "merged": duplicates_merged,
        "proximity": proximity_dropped,
        "retained": len(rows),
    }
    cfg.path(INGEST_REPORT_JSON).write_text(
        json.dumps(report, indent=1) + "\n", encoding="utf-8"
    )
    return report


def read_features(path) -> list[FeatureRow]:
    required = ("location_id", "date", "month", *FEATURE_NAMES, "larvae_count")
    rows = []
    for line, row in ingest._open_rows(path, required):
        try:
            rows.append(
                FeatureRow(
                    location_id=row["location_id"],
                    date=datetime.date.fromisoformat(row["date"]),
                    month=row["month"],
                    tmean_c=float(row["tmean_c"]),
                    tmax_c=float(row["tmax_c"]),
                    tmin_c=float(row["tmin_c"]),
                    precip_days=float(row["precip_days"]),
                    precip_mm=float(row["precip_mm"]),
                    elevation_m=float(row["elevation_m"]),
                    larvae_count=int(row["larvae_count"]),
                )
            )
        except ValueError as exc:
            raise ParseError(f"{path}: row {line}: {exc}") from None
    return rows


# -- abundance training --------------------------------------------------


def predict_log_abundance(net, scaler: StandardScaler, features: np.ndarray) -> np.ndarray:
    """Eval-mode predictions for raw feature rows; the single projection path."""
    standardized = scaler.transform(features)
    pred, _ = forward(net, standardized.T, mode="eval")
    return pred[0]


def _correlation_entry(pred, truth) -> dict:
    try:
        report = correlation_report(truth, pred, tail="one")
    except DataError as exc:
        return {"error": str(exc)}
    return {
        "r": report.r,
        "n": report.n,
        "t_stat": report.t_stat,
        "p_one_tailed": report.p_value,
    }


def cmd_train_abundance(cfg: PipelineConfig) -> dict:
    """Train the regressor with a chronological oldest-rows holdout."""
    rows = read_features(cfg.path(FEATURES_CSV))
    n = len(rows)
    if cfg.holdout_oldest < 1 or cfg.holdout_oldest >= n:
        raise ConfigError(
            f"holdout_oldest={cfg.holdout_oldest} must lie in [1, {n - 1}] for {n} rows"
        )
    if n - cfg.holdout_oldest < cfg.batch_size:
        raise ConfigError(
            f"training split of {n - cfg.holdout_oldest} rows is below the "
            f"batch size of {cfg.batch_size}"
        )
    ordered = sorted(rows, key=lambda r: (r.date, r.location_id))
    val_rows = ordered[: cfg.holdout_oldest]
    train_rows = ordered[cfg.holdout_oldest :]

    log_transform = LogCountTransform(cfg.log_offset)
    train_x = np.stack([r.features() for r in train_rows])
    train_y = log_transform.transform([r.larvae_count for r in train_rows])
    val_x = np.stack([r.features() for r in val_rows])
    val_y = log_transform.transform([r.larvae_count for r in val_rows])

    scaler = StandardScaler().fit(train_x)
    assert scaler.n_fit_rows_ == len(train_rows)

    net = train_abundance(
        scaler.transform(train_x),
        train_y,
        cfg.train_config(),
        layer_dims=ABUNDANCE_LAYER_DIMS,
        dropout_rate=cfg.dropout_rate,
    )

    train_pred = predict_log_abundance(net, scaler, train_x)
    val_pred = predict_log_abundance(net, scaler, val_x)
    residuals = residual_summary(val_pred, val_y)
    report = {
        "n": n,
        "n_train": len(train_rows),
        "n_val": len(val_rows),
        "train": _correlation_entry(train_pred, train_y),
        "validation": _correlation_entry(val_pred, val_y),
        "validation_residuals": {
            "n_positive": residuals.n_positive,
            "n_negative": residuals.n_negative,
            "n_zero": residuals.n_zero,
            "max_positive": residuals.max_positive,
            "max_negative": residuals.max_negative,
        },
    }
    cfg.path(ABUNDANCE_MODEL_JSON).write_text(
        serialize.serialize_network(net) + "\n", encoding="utf-8"
    )
    serialize.save_document(
        cfg.path(ABUNDANCE_SCALERS_JSON),
        serialize.scalers_to_document(scaler, FEATURE_NAMES, cfg.log_offset),
    )
    cfg.path(ABUNDANCE_REPORT_JSON).write_text(
        json.dumps(report, indent=1) + "\n", encoding="utf-8"
    )
    return report


# -- climate training ----------------------------------------------------


def _series_by_region(series_list, variable: str) -> dict[str, ingest.RegionSeries]:
    return {s.region_id: s for s in series_list if s.variable == variable}


def cmd_train_climate(cfg: PipelineConfig, lstm_max_epochs: int | None = None) -> dict:
    """Train one LSTM per forecast variable plus the derived-series models."""
    if cfg.series is None:
        raise ConfigError("train-climate needs --series")
    series_list = ingest.parse_series(cfg.series)
    if not series_list:
        raise DataError(f"{cfg.series}: no series found")
    window_cfg = WindowConfig(lookback=cfg.lookback, horizon=cfg.horizon)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)

    summary: dict = {"windows": {}, "skipped": []}
    for offset, variable in enumerate(FORECAST_VARIABLES):
        by_region = _series_by_region(series_list, variable)
        pairs = []
        for region_id in sorted(by_region):
            try:
                pairs.extend(make_windows(by_region[region_id], window_cfg))
            except DataError as exc:
                _warn(str(exc))
                summary["skipped"].append(f"{region_id}/{variable}")
        if not pairs:
            raise DataError(f"no trainable windows for variable {variable!r}")
        model = train_lstm(
            pairs,
            cfg.train_config(seed_offset=offset, max_epochs=lstm_max_epochs),
            hidden_size=cfg.lstm_hidden_size,
        )
        doc_path = cfg.path(lstm_document_name(variable))
        doc_path.write_text(serialize.serialize_lstm(model) + "\n", encoding="utf-8")
        summary["windows"][variable] = len(pairs)

    # Per-region temperature offsets from the historical series.
    tmean = _series_by_region(series_list, "summer_tmean")
    tmin = _series_by_region(series_list, "summer_tmin")
    tmax = _series_by_region(series_list, "summer_tmax")
    offsets: dict[str, OffsetK] = {}
    for region_id in sorted(tmean):
        if region_id not in tmin or region_id not in tmax:
            _warn(f"region {region_id!r} lacks min/max series; offsets skipped")
            continue
        mean_values = tmean[region_id].values
        offsets[region_id] = OffsetK(
            k_min=estimate_k(mean_values, tmin[region_id].values, "min"),
            k_max=estimate_k(mean_values, tmax[region_id].values, "max"),
        )
    if not offsets:
        raise DataError("no region has all three temperature series")
    serialize.save_document(cfg.path(OFFSETS_JSON), serialize.offsets_to_document(offsets))

    # Global linear model: days of precipitation from precipitation amount.
    rows = read_features(cfg.path(FEATURES_CSV))
    days_model = fit_linear(
        [r.precip_mm for r in rows], [r.precip_days for r in rows]
    )
    serialize.save_document(
        cfg.path(DAYS_MODEL_JSON), serialize.linear_to_document(days_model)
    )
    summary["offsets_regions"] = len(offsets)
    summary["days_model"] = {"slope": days_model.slope, "intercept": days_model.intercept}
    return summary


# -- climate forecasting -------------------------------------------------


def cmd_forecast(cfg: PipelineConfig) -> dict:
    """Roll the trained LSTMs forward and derive min/max/days series."""
    if cfg.series is None:
        raise ConfigError("forecast needs --series")
    series_list = ingest.parse_series(cfg.series)
    forecast_cfg = ForecastConfig(
        lookback=cfg.lookback, horizon=cfg.horizon, rounds=cfg.rounds
    )
    models = {}
    for variable in FORECAST_VARIABLES:
        doc = serialize.load_document(cfg.path(lstm_document_name(variable)), "lstm")
        models[variable] = serialize.deserialize_lstm(serialize.dumps(doc))
    offsets = serialize.offsets_from_document(
        serialize.load_document(cfg.path(OFFSETS_JSON), "offsets")
    )
    days_model = serialize.linear_from_document(
        serialize.load_document(cfg.path(DAYS_MODEL_JSON), "linear")
    )

    last_year = max(max(s.years) for s in series_list)
    if cfg.target_year <= last_year:
        raise ConfigError(
            f"target_year {cfg.target_year} is not beyond the observed series "
            f"(last year {last_year})"
        )
    coverage = last_year + cfg.horizon * cfg.rounds
    if cfg.target_year > coverage:
        raise ConfigError(
            f"rounds={cfg.rounds} only reaches {coverage}; increase --rounds "
            f"to cover {cfg.target_year}"
        )

    def predictor(model):
        return lambda window: lstm_forward(model, window, mode="eval")[0]

    results = []
    errors = []
    for variable in FORECAST_VARIABLES:
        by_region = _series_by_region(series_list, variable)
        for region_id in sorted(by_region):
            series = by_region[region_id]
            try:
                result = forecast_series(
                    predictor(models[variable]),
                    region_id,
                    variable,
                    series.years,
                    series.values,
                    forecast_cfg,
                )
            except DataError as exc:
                _warn(str(exc))
                errors.append(f"{region_id}/{variable}")
                continue
            results.append(result)
            if variable == "summer_tmean":
                k = offsets.get(region_id)
                if k is None:
                    _warn(f"region {region_id!r} has no fitted offsets")
                    errors.append(f"{region_id}/offsets")
                    continue
                for derived, values in (
                    ("summer_tmin", result.values - k.k_min),
                    ("summer_tmax", result.values + k.k_max),
                ):
                    results.append(
                        ForecastResult(
                            region_id=region_id,
                            variable=derived,
                            start_year=result.start_year,
                            values=values,
                        )
                    )
            elif variable == "summer_precip":
                # An extrapolated amount can dip below zero; days are
                # derived from the physically meaningful part.
                days = np.array(
                    [predict_days(days_model, max(v, 0.0)) for v in result.values]
                )
                results.append(
                    ForecastResult(
                        region_id=region_id,
                        variable=DERIVED_DAYS_VARIABLE,
                        start_year=result.start_year,
                        values=days,
                    )
                )
    if not results:
        raise DataError("no region could be forecast")

    results.sort(key=lambda r: (r.region_id, r.variable))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    with cfg.path(FORECAST_CSV).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["region_id", "variable", "year", "value"])
        for result in results:
            for year, value in zip(result.years(), result.values):
                writer.writerow([result.region_id, result.variable, year, _fmt(value)])
    return {
        "regions": len({r.region_id for r in results}),
        "rows": sum(r.values.size for r in results),
        "errors": errors,
    }


# -- abundance projection ------------------------------------------------


def _read_forecast(path) -> dict[str, dict[str, dict[int, float]]]:
    table: dict[str, dict[str, dict[int, float]]] = {}
    for line, row in ingest._open_rows(path, ("region_id", "variable", "year", "value")):
        table.setdefault(row["region_id"], {}).setdefault(row["variable"], {})[
            int(row["year"])
        ] = float(row["value"])
    return table


def read_region_elevations(path) -> dict[str, float]:
    out = {}
    for line, row in ingest._open_rows(path, ("region_id", "elevation_m")):
        out[row["region_id"]] = float(row["elevation_m"])
    return out


def cmd_project(cfg: PipelineConfig, years: list[int] | None = None) -> dict:
    """Push forecast features through the regressor for the target years."""
    if cfg.regions is None:
        raise ConfigError("project needs --regions (region elevations)")
    years = sorted(set(years or [cfg.target_year]))
    table = _read_forecast(cfg.path(FORECAST_CSV))
    elevations = read_region_elevations(cfg.regions)
    net = serialize.deserialize_network(
        cfg.path(ABUNDANCE_MODEL_JSON).read_text(encoding="utf-8")
    )
    scaler, names, log_offset = serialize.scalers_from_document(
        serialize.load_document(cfg.path(ABUNDANCE_SCALERS_JSON), "scalers")
    )
    if tuple(names) != FEATURE_NAMES:
        raise DataError(f"scaler features {names} do not match {list(FEATURE_NAMES)}")
    log_transform = LogCountTransform(log_offset)

    needed = ("summer_tmean", "summer_tmax", "summer_tmin",
              DERIVED_DAYS_VARIABLE, "summer_precip")
    records = []
    for region_id in sorted(table):
        if region_id not in elevations:
            raise DataError(f"region {region_id!r} missing from {cfg.regions}")
        per_variable = table[region_id]
        for year in years:
            values = []
            for variable in needed:
                if variable not in per_variable or year not in per_variable[variable]:
                    raise DataError(
                        f"forecast value missing for {region_id}/{variable}/{year}"
                    )
                values.append(per_variable[variable][year])
            tmean, tmax, tmin, days, amount = values
            features = np.array([[tmean, tmax, tmin, days, amount, elevations[region_id]]])
            log_abundance = float(predict_log_abundance(net, scaler, features)[0])
            abundance = float(log_transform.inverse(log_abundance))
            records.append(
                (region_id, year, log_abundance, abundance,
                 tmean, tmax, tmin, days, amount, elevations[region_id])
            )

    with cfg.path(PROJECTIONS_CSV).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["region_id", "year", "log10_abundance", "abundance", *FEATURE_NAMES]
        )
        for record in records:
            region_id, year, *numbers = record
            writer.writerow([region_id, year, *(_fmt(v) for v in numbers)])
    return {"rows": len(records), "years": years}


# -- reporting -----------------------------------------------------------


def _read_projections(path) -> dict[tuple[str, int], dict]:
    required = ("region_id", "year", "log10_abundance", "abundance", *FEATURE_NAMES)
    out = {}
    for line, row in ingest._open_rows(path, required):
        out[(row["region_id"], int(row["year"]))] = {
            "log10_abundance": float(row["log10_abundance"]),
            "abundance": float(row["abundance"]),
        }
    return out


def cmd_report(
    cfg: PipelineConfig,
    start_year: int,
    end_year: int,
    geometry: Path | None = None,
    geometry_out: Path | None = None,
    region_key: str = "region_id",
) -> dict:
    """Percent-change table and choropleth data for the comparison years."""
    projections = _read_projections(cfg.path(PROJECTIONS_CSV))
    regions = sorted({region for region, _ in projections})
    table = []
    for region in regions:
        start = projections.get((region, start_year))
        end = projections.get((region, end_year))
        if start is None or end is None:
            raise DataError(
                f"projections for region {region!r} must cover both "
                f"{start_year} and {end_year}"
            )
        v0, v1 = start["abundance"], end["abundance"]
        change = 100.0 * (v1 - v0) / v0 if v0 != 0 else None
        table.append((region, v0, v1, change))

    with cfg.path(PERCENT_CHANGE_CSV).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["region_id", f"abundance_{start_year}", f"abundance_{end_year}", "percent_change"]
        )
        for region, v0, v1, change in table:
            writer.writerow(
                [region, _fmt(v0), _fmt(v1), "undefined" if change is None else _fmt(change)]
            )

    with cfg.path(CHOROPLETH_CSV).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["region_id", "log10_abundance", "abundance"])
        for region in regions:
            entry = projections[(region, end_year)]
            writer.writerow(
                [region, _fmt(entry["log10_abundance"]), _fmt(entry["abundance"])]
            )

    summary = {"regions": len(regions), "start_year": start_year, "end_year": end_year}
    if geometry is not None:
        changes = {region: change for region, _, _, change in table}
        merged, unmatched = merge_geometry(
            json.loads(Path(geometry).read_text(encoding="utf-8")),
            {
                region: {
                    "log10_abundance": projections[(region, end_year)]["log10_abundance"],
                    "abundance": projections[(region, end_year)]["abundance"],
                    "percent_change": changes[region],
                }
                for region in regions
            },
            region_key,
        )
        if unmatched:
            _warn(f"regions missing from geometry: {', '.join(unmatched)}")
            summary["unmatched_regions"] = unmatched
        out_path = geometry_out or cfg.path("choropleth.geojson")
        Path(out_path).write_text(
            json.dumps(merged, indent=1) + "\n", encoding="utf-8"
        )
    return summary


def merge_geometry(
    geometry: dict, properties_by_region: dict[str, dict], region_key: str = "region_id"
) -> tuple[dict, list[str]]:
    """Attach per-region values to matching features; geometry untouched.

    Returns the merged document and the regions that had values but no
    matching feature.
    """
    features = geometry.get("features")
    if not isinstance(features, list):
        raise DataError("geometry document has no 'features' list")
    matched = set()
    for feature in features:
        props = feature.setdefault("properties", {})
        region = props.get(region_key)
        if region in properties_by_region:
            props.update(properties_by_region[region])
            matched.add(region)
    unmatched = sorted(set(properties_by_region) - matched)
    return geometry, unmatched
