"""Portable text documents for trained models and fitted transforms.

All documents are UTF-8 JSON with a ``schema_version`` and a ``kind``
tag ("dense", "lstm", "scalers", "trend", "linear", "offsets").
Parameter arrays are stored row-major at full decimal precision, so a
serialize/deserialize round trip is bit-exact.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParseError
from .lstm import GATES, LstmModel
from .nn import DenseNetwork
from .preprocess import StandardScaler
from .trend import LinearModel, OffsetK, TrendParams

SCHEMA_VERSION = 1


def _require(doc: dict, field: str, kind: str):
    if field not in doc:
        raise ParseError(f"{kind} document is missing field '{field}'")
    return doc[field]


def _check_length(name: str, values, expected: int):
    if len(values) != expected:
        raise ParseError(
            f"field '{name}' has {len(values)} values, expected {expected}"
        )


def _matrix(name: str, flat, rows: int, cols: int) -> np.ndarray:
    _check_length(name, flat, rows * cols)
    return np.array(flat, dtype=float).reshape(rows, cols)


def _vector(name: str, flat, length: int) -> np.ndarray:
    _check_length(name, flat, length)
    return np.array(flat, dtype=float)


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1)


def loads(text: str, expected_kind: str | None = None) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"malformed document at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise ParseError("document root must be an object")
    version = _require(doc, "schema_version", "model")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version: {version}")
    kind = _require(doc, "kind", "model")
    if expected_kind is not None and kind != expected_kind:
        raise ParseError(f"expected a {expected_kind!r} document, found {kind!r}")
    return doc


def save_document(path, doc: dict) -> None:
    Path(path).write_text(dumps(doc) + "\n", encoding="utf-8")


def load_document(path, expected_kind: str | None = None) -> dict:
    return loads(Path(path).read_text(encoding="utf-8"), expected_kind)


# -- dense network ------------------------------------------------------


def serialize_network(net: DenseNetwork) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "dense",
        "layer_dims": list(net.layer_dims),
        "activations": list(net.activations),
        "dropout_rate": net.dropout_rate,
        "weights": [w.ravel().tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }
    return dumps(doc)


def deserialize_network(text: str) -> DenseNetwork:
    doc = loads(text, "dense")
    dims = tuple(int(d) for d in _require(doc, "layer_dims", "dense"))
    if len(dims) < 2:
        raise ParseError("layer_dims needs at least two entries")
    activations = tuple(_require(doc, "activations", "dense"))
    _check_length("activations", activations, len(dims) - 1)
    raw_w = _require(doc, "weights", "dense")
    raw_b = _require(doc, "biases", "dense")
    _check_length("weights", raw_w, len(dims) - 1)
    _check_length("biases", raw_b, len(dims) - 1)
    weights, biases = [], []
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        weights.append(_matrix(f"weights[{i}]", raw_w[i], fan_out, fan_in))
        biases.append(_vector(f"biases[{i}]", raw_b[i], fan_out))
    return DenseNetwork(
        layer_dims=dims,
        weights=weights,
        biases=biases,
        activations=activations,
        dropout_rate=float(_require(doc, "dropout_rate", "dense")),
    )


# -- lstm ---------------------------------------------------------------


def serialize_lstm(model: LstmModel) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "lstm",
        "hidden_size": model.hidden_size,
        "input_size": model.input_size,
        "output_len": model.output_len,
        "input_dropout_rate": model.input_dropout_rate,
    }
    for gate in GATES:
        doc[f"w_{gate}"] = model.w[gate].ravel().tolist()
        doc[f"u_{gate}"] = model.u[gate].ravel().tolist()
        doc[f"b_{gate}"] = model.b[gate].tolist()
    doc["head_w"] = model.head_w.ravel().tolist()
    doc["head_b"] = model.head_b.tolist()
    return dumps(doc)


def deserialize_lstm(text: str) -> LstmModel:
    doc = loads(text, "lstm")
    hidden = int(_require(doc, "hidden_size", "lstm"))
    inp = int(_require(doc, "input_size", "lstm"))
    out = int(_require(doc, "output_len", "lstm"))
    w, u, b = {}, {}, {}
    for gate in GATES:
        w[gate] = _matrix(f"w_{gate}", _require(doc, f"w_{gate}", "lstm"), hidden, inp)
        u[gate] = _matrix(f"u_{gate}", _require(doc, f"u_{gate}", "lstm"), hidden, hidden)
        b[gate] = _vector(f"b_{gate}", _require(doc, f"b_{gate}", "lstm"), hidden)
    return LstmModel(
        hidden_size=hidden,
        input_size=inp,
        output_len=out,
        input_dropout_rate=float(_require(doc, "input_dropout_rate", "lstm")),
        w=w,
        u=u,
        b=b,
        head_w=_matrix("head_w", _require(doc, "head_w", "lstm"), out, hidden),
        head_b=_vector("head_b", _require(doc, "head_b", "lstm"), out),
    )


# -- fitted transforms and small models ---------------------------------


def scalers_to_document(
    scaler: StandardScaler, feature_names, log_offset: float
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "scalers",
        "feature_names": list(feature_names),
        "mean": np.asarray(scaler.mean_).tolist(),
        "std": np.asarray(scaler.std_).tolist(),
        "n_fit_rows": scaler.n_fit_rows_,
        "log_offset": log_offset,
    }


def scalers_from_document(doc: dict) -> tuple[StandardScaler, list[str], float]:
    names = list(_require(doc, "feature_names", "scalers"))
    scaler = StandardScaler()
    scaler.mean_ = _vector("mean", _require(doc, "mean", "scalers"), len(names))
    scaler.std_ = _vector("std", _require(doc, "std", "scalers"), len(names))
    scaler.n_fit_rows_ = int(_require(doc, "n_fit_rows", "scalers"))
    return scaler, names, float(_require(doc, "log_offset", "scalers"))


def trend_to_document(params: TrendParams, sse: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "trend",
        "lambda": params.lam,
        "alpha": params.alpha,
        "theta": params.theta,
        "gamma": params.gamma,
        "beta": params.beta,
        "phi": params.phi,
        "sse": sse,
    }


def trend_from_document(doc: dict) -> tuple[TrendParams, float]:
    params = TrendParams(
        lam=float(_require(doc, "lambda", "trend")),
        alpha=float(_require(doc, "alpha", "trend")),
        theta=float(_require(doc, "theta", "trend")),
        gamma=float(_require(doc, "gamma", "trend")),
        beta=float(_require(doc, "beta", "trend")),
        phi=float(_require(doc, "phi", "trend")),
    )
    return params, float(_require(doc, "sse", "trend"))


def linear_to_document(model: LinearModel) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "linear",
        "slope": model.slope,
        "intercept": model.intercept,
    }


def linear_from_document(doc: dict) -> LinearModel:
    return LinearModel(
        slope=float(_require(doc, "slope", "linear")),
        intercept=float(_require(doc, "intercept", "linear")),
    )


def offsets_to_document(offsets: dict[str, OffsetK]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "offsets",
        "regions": {
            region: {"k_min": k.k_min, "k_max": k.k_max}
            for region, k in sorted(offsets.items())
        },
    }


def offsets_from_document(doc: dict) -> dict[str, OffsetK]:
    regions = _require(doc, "regions", "offsets")
    out = {}
    for region, entry in regions.items():
        out[region] = OffsetK(
            k_min=float(_require(entry, "k_min", "offsets")),
            k_max=float(_require(entry, "k_max", "offsets")),
        )
    return out
