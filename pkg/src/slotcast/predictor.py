"""End-to-end orchestration: log1p target transform, complexity-routed
dual-model training, inference with back-transform, and versioned bundle
serialization.

Bundle file layout: magic, format version, length-prefixed JSON header
describing config and named arrays, raw little-endian array payloads, and a
trailing SHA-256 over everything preceding it.
"""
from __future__ import annotations

import hashlib
import json
import struct
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import gbrt
from .errors import (
    BundleVersionMismatch,
    CorruptBundle,
    NegativeTarget,
    TooFewSamples,
)
from .featurizer import Featurizer, FeaturizerConfig
from .gbrt import Forest, GBRTConfig
from .records import QueryRecord
from .sql_analyzer import clean_query, complexity_score

FORMAT_VERSION = 1
_MAGIC = b"SLTB"

ROUTE_SIMPLE = "simple"
ROUTE_COMPLEX = "complex"
ROUTE_UNIFIED = "unified"


# ---------------------------------------------------------------------------
# Target transform
# ---------------------------------------------------------------------------

def transform_target(slot_min):
    """ln(1 + slot_min); rejects negative slot-time."""
    arr = np.asarray(slot_min, dtype=np.float64)
    if np.any(arr < 0):
        raise NegativeTarget("slot-time targets must be >= 0")
    out = np.log1p(arr)
    return float(out) if np.isscalar(slot_min) else out


def inverse_target(z):
    """expm1(z), clamped below at 0 slot-minutes."""
    arr = np.asarray(z, dtype=np.float64)
    out = np.maximum(np.expm1(arr), 0.0)
    return float(out) if np.isscalar(z) else out


# ---------------------------------------------------------------------------
# Routing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Router:
    threshold: int = 26
    min_subset: int = 50

    def route(self, score: int) -> str:
        return ROUTE_SIMPLE if score < self.threshold else ROUTE_COMPLEX


@dataclass
class TrainConfig:
    featurizer: FeaturizerConfig = field(default_factory=FeaturizerConfig)
    gbrt: GBRTConfig = field(default_factory=GBRTConfig)
    router: Router = field(default_factory=Router)

    def to_dict(self) -> dict:
        return {"featurizer": self.featurizer.to_dict(),
                "gbrt": self.gbrt.to_dict(),
                "router": {"threshold": self.router.threshold,
                           "min_subset": self.router.min_subset}}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(featurizer=FeaturizerConfig.from_dict(d["featurizer"]),
                   gbrt=GBRTConfig.from_dict(d["gbrt"]),
                   router=Router(**d["router"]))


@dataclass
class PredictionResult:
    slot_min: float
    route: str
    complexity_score: int
    log_space_value: float


@dataclass
class ModelBundle:
    format_version: int
    featurizer: Featurizer
    router: Router
    forests: Dict[str, Forest]
    metadata: dict


# ---------------------------------------------------------------------------
# Training / inference
# ---------------------------------------------------------------------------

def train(records: Sequence[QueryRecord],
          config: Optional[TrainConfig] = None) -> ModelBundle:
    """Fit the shared featurizer and the complexity-routed forests.

    Routes with fewer than ``router.min_subset`` records fall back to a
    unified forest trained on all records; the fallback is recorded in
    bundle metadata.
    """
    config = config or TrainConfig()
    n = len(records)
    if n < 2 * config.gbrt.min_samples_leaf:
        raise TooFewSamples(
            f"need >= {2 * config.gbrt.min_samples_leaf} training records")
    cleaned = [clean_query(r.query_text) for r in records]
    reports = [complexity_score(q) for q in cleaned]
    y = transform_target(np.array([r.slot_min for r in records]))

    featurizer = Featurizer(config.featurizer)
    matrix = featurizer.fit_transform(records, reports, cleaned)

    scores = np.array([rep.score for rep in reports])
    routes = {
        ROUTE_SIMPLE: np.where(scores < config.router.threshold)[0],
        ROUTE_COMPLEX: np.where(scores >= config.router.threshold)[0],
    }
    forests: Dict[str, Forest] = {}
    fallbacks: List[str] = []
    for route, idx in routes.items():
        if idx.size >= max(config.router.min_subset,
                           2 * config.gbrt.min_samples_leaf):
            forests[route] = gbrt.fit(matrix.rows[idx], y[idx], config.gbrt)
        else:
            fallbacks.append(route)
    if fallbacks:
        forests[ROUTE_UNIFIED] = gbrt.fit(matrix.rows, y, config.gbrt)

    actual_slot = np.expm1(y)
    metadata = {
        "config": config.to_dict(),
        "seed": config.gbrt.seed,
        "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "n_records": n,
        "route_counts": {r: int(i.size) for r, i in routes.items()},
        "fallback_routes": fallbacks,
        "train_target_mean": float(actual_slot.mean()),
        "train_target_median": float(np.median(actual_slot)),
    }
    return ModelBundle(format_version=FORMAT_VERSION, featurizer=featurizer,
                       router=config.router, forests=forests,
                       metadata=metadata)


def _forest_for_route(bundle: ModelBundle, route: str) -> Forest:
    forest = bundle.forests.get(route)
    if forest is None:
        forest = bundle.forests[ROUTE_UNIFIED]
    return forest


def predict(bundle: ModelBundle, record: QueryRecord) -> PredictionResult:
    """Score, route, featurize and predict one record."""
    cleaned = clean_query(record.query_text)
    report = complexity_score(cleaned)
    route = bundle.router.route(report.score)
    matrix = bundle.featurizer.transform([record], [report], [cleaned])
    z = float(_forest_for_route(bundle, route).predict(matrix.rows)[0])
    return PredictionResult(slot_min=inverse_target(z), route=route,
                            complexity_score=report.score,
                            log_space_value=z)


def predict_many(bundle: ModelBundle,
                 records: Sequence[QueryRecord]) -> List[PredictionResult]:
    if not records:
        return []
    cleaned = [clean_query(r.query_text) for r in records]
    reports = [complexity_score(q) for q in cleaned]
    matrix = bundle.featurizer.transform(records, reports, cleaned)
    results: List[PredictionResult] = []
    route_names = [bundle.router.route(rep.score) for rep in reports]
    zs = np.empty(len(records))
    for route in set(route_names):
        idx = [i for i, r in enumerate(route_names) if r == route]
        zs[idx] = _forest_for_route(bundle, route).predict(matrix.rows[idx])
    for i, rep in enumerate(reports):
        results.append(PredictionResult(
            slot_min=inverse_target(float(zs[i])), route=route_names[i],
            complexity_score=rep.score, log_space_value=float(zs[i])))
    return results


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def serialize_bundle(bundle: ModelBundle) -> bytes:
    fz_meta, fz_arrays = bundle.featurizer.get_state()
    arrays: Dict[str, np.ndarray] = {f"fz.{k}": v for k, v in fz_arrays.items()}
    forest_meta = {}
    for route, forest in sorted(bundle.forests.items()):
        meta, f_arrays = forest.get_state()
        forest_meta[route] = meta
        arrays.update({f"forest.{route}.{k}": v for k, v in f_arrays.items()})

    ordered = sorted(arrays)
    header = {
        "format_version": bundle.format_version,
        "router": {"threshold": bundle.router.threshold,
                   "min_subset": bundle.router.min_subset},
        "metadata": bundle.metadata,
        "featurizer": fz_meta,
        "forests": forest_meta,
        "arrays": [{"name": k,
                    "dtype": arrays[k].dtype.str,
                    "shape": list(arrays[k].shape)} for k in ordered],
    }
    header_bytes = json.dumps(header, sort_keys=True,
                              separators=(",", ":")).encode("utf-8")
    parts = [_MAGIC, struct.pack("<I", bundle.format_version),
             struct.pack("<Q", len(header_bytes)), header_bytes]
    for k in ordered:
        a = np.ascontiguousarray(arrays[k])
        if a.dtype.byteorder == ">":
            a = a.astype(a.dtype.newbyteorder("<"))
        parts.append(a.tobytes())
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest()


def deserialize_bundle(data: bytes) -> ModelBundle:
    if len(data) < 4 + 4 + 8 + 32 or data[:4] != _MAGIC:
        raise CorruptBundle("not a slotcast bundle")
    version = struct.unpack("<I", data[4:8])[0]
    if version > FORMAT_VERSION:
        raise BundleVersionMismatch(
            f"bundle format {version} is newer than supported {FORMAT_VERSION}")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptBundle("checksum mismatch")
    header_len = struct.unpack("<Q", data[8:16])[0]
    try:
        header = json.loads(data[16:16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptBundle("unreadable header") from exc
    offset = 16 + header_len
    arrays: Dict[str, np.ndarray] = {}
    for spec in header["arrays"]:
        dtype = np.dtype(spec["dtype"])
        count = int(np.prod(spec["shape"])) if spec["shape"] else 1
        nbytes = dtype.itemsize * count
        chunk = body[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise CorruptBundle("truncated array payload")
        arrays[spec["name"]] = np.frombuffer(
            chunk, dtype=dtype).reshape(spec["shape"]).copy()
        offset += nbytes

    featurizer = Featurizer.from_state(
        header["featurizer"],
        {k[len("fz."):]: v for k, v in arrays.items() if k.startswith("fz.")})
    forests = {}
    for route, meta in header["forests"].items():
        prefix = f"forest.{route}."
        forests[route] = Forest.from_state(
            meta, {k[len(prefix):]: v for k, v in arrays.items()
                   if k.startswith(prefix)})
    return ModelBundle(format_version=version, featurizer=featurizer,
                       router=Router(**header["router"]), forests=forests,
                       metadata=header["metadata"])


def save_bundle(bundle: ModelBundle, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_bundle(bundle))


def load_bundle(path) -> ModelBundle:
    with open(path, "rb") as fh:
        return deserialize_bundle(fh.read())
