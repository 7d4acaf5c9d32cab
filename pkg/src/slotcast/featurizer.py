"""Feature fusion: TF-IDF text block reduced via randomized SVD, standardized
numerics, log-scaled volumetrics, and one-hot categoricals.

Fit statistics are computed only on training records; transform never mutates
fitted state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import (
    DegenerateInput,
    DimensionMismatch,
    EmptyCorpus,
    LengthMismatch,
    StateNotFitted,
)
from .records import QueryRecord
from .sql_analyzer import CleanedQuery, ComplexityReport


# ---------------------------------------------------------------------------
# TF-IDF
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TextVectorizerState:
    vocabulary: Dict[str, int]          # term -> column index
    doc_freq: np.ndarray                # int64, per column
    idf: np.ndarray                     # float64, per column
    n_docs: int

    @property
    def size(self) -> int:
        return len(self.vocabulary)


def _terms(q: CleanedQuery) -> List[str]:
    vals = list(q.values)
    terms = list(vals)
    terms.extend(f"{a} {b}" for a, b in zip(vals, vals[1:]))
    return terms


def fit_text(corpus: Sequence[CleanedQuery], min_df: int = 2,
             max_vocab: int = 50_000) -> TextVectorizerState:
    """Build a unigram+bigram vocabulary with smoothed idf weights."""
    if len(corpus) == 0:
        raise EmptyCorpus("fit_text requires a non-empty corpus")
    df: Dict[str, int] = {}
    for q in corpus:
        for term in set(_terms(q)):
            df[term] = df.get(term, 0) + 1
    kept = [t for t, c in df.items() if c >= min_df]
    # cap by descending document frequency, ties lexicographic
    kept.sort(key=lambda t: (-df[t], t))
    kept = kept[:max_vocab]
    kept.sort()  # column order is lexicographic
    vocabulary = {t: i for i, t in enumerate(kept)}
    n = len(corpus)
    doc_freq = np.array([df[t] for t in kept], dtype=np.int64)
    idf = np.log((1.0 + n) / (1.0 + doc_freq)) + 1.0
    return TextVectorizerState(vocabulary=vocabulary, doc_freq=doc_freq,
                               idf=idf, n_docs=n)


def transform_text(state: TextVectorizerState, q: CleanedQuery) -> sp.csr_matrix:
    """Raw-count tf x idf, L2-normalized. Out-of-vocabulary terms ignored."""
    counts: Dict[int, float] = {}
    for term in _terms(q):
        col = state.vocabulary.get(term)
        if col is not None:
            counts[col] = counts.get(col, 0.0) + 1.0
    if not counts:
        return sp.csr_matrix((1, state.size))
    cols = np.array(sorted(counts), dtype=np.int64)
    data = np.array([counts[c] for c in cols]) * state.idf[cols]
    norm = float(np.sqrt(np.sum(data * data)))
    if norm > 0:
        data = data / norm
    return sp.csr_matrix((data, (np.zeros_like(cols), cols)),
                         shape=(1, state.size))


def transform_text_corpus(state: TextVectorizerState,
                          corpus: Iterable[CleanedQuery]) -> sp.csr_matrix:
    rows = [transform_text(state, q) for q in corpus]
    if not rows:
        return sp.csr_matrix((0, state.size))
    return sp.vstack(rows, format="csr")


# ---------------------------------------------------------------------------
# Randomized truncated SVD
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SvdBasis:
    components: np.ndarray        # (k, V), orthonormal rows
    singular_values: np.ndarray   # (k,), non-increasing, positive

    @property
    def k(self) -> int:
        return self.components.shape[0]


def fit_svd(tfidf_rows: sp.spmatrix, k: int, seed: int = 0,
            oversample: int = 10, power_iters: int = 4) -> SvdBasis:
    """Seeded randomized truncated SVD of a sparse matrix.

    Components with numerically zero singular values are dropped, so the
    returned rank never exceeds the input's effective rank.
    """
    a = sp.csr_matrix(tfidf_rows, dtype=np.float64)
    n, v = a.shape
    if n < 2:
        raise DegenerateInput("SVD needs at least 2 rows")
    k_eff = max(1, min(k, n, v))
    p = min(k_eff + oversample, min(n, v))
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((v, p))
    y = a @ omega
    for _ in range(power_iters):
        y, _ = np.linalg.qr(a @ (a.T @ y))
    q, _ = np.linalg.qr(y)
    b = np.asarray(q.T @ a)
    _, s, vt = np.linalg.svd(b, full_matrices=False)
    k_eff = min(k_eff, s.shape[0])
    s = s[:k_eff]
    vt = vt[:k_eff]
    # drop numerically-zero directions (keeps singular values positive)
    tol = (s[0] if s.size else 0.0) * 1e-10
    keep = s > tol
    s, vt = s[keep], vt[keep]
    # deterministic sign: largest-magnitude entry of each component positive
    for i in range(vt.shape[0]):
        j = int(np.argmax(np.abs(vt[i])))
        if vt[i, j] < 0:
            vt[i] = -vt[i]
    return SvdBasis(components=np.ascontiguousarray(vt),
                    singular_values=np.ascontiguousarray(s))


def project_text(basis: SvdBasis, v: sp.spmatrix | np.ndarray) -> np.ndarray:
    """Project a term-weight vector onto the SVD basis (components @ v)."""
    if sp.issparse(v):
        vec = np.asarray(v.todense()).ravel()
    else:
        vec = np.asarray(v, dtype=np.float64).ravel()
    if vec.shape[0] != basis.components.shape[1]:
        raise DimensionMismatch(
            f"vector length {vec.shape[0]} != basis columns {basis.components.shape[1]}")
    return basis.components @ vec


# ---------------------------------------------------------------------------
# Fused featurizer
# ---------------------------------------------------------------------------

# optional numeric count fields, in layout order
_COUNT_FIELDS = ("account_count", "resource_count", "accounts_aws",
                 "accounts_gcp", "accounts_azure")
# optional byte fields (log1p volumetrics)
_BYTE_FIELDS = ("total_bytes_processed", "total_bytes_billed")
_OPTIONAL_FIELDS = _BYTE_FIELDS + _COUNT_FIELDS
_CATEGORICAL_FIELDS = ("asset_type", "region")

OTHER_CATEGORY = "__OTHER__"


@dataclass
class FeaturizerConfig:
    min_df: int = 2
    max_vocab: int = 50_000
    svd_components: int = 512
    svd_seed: int = 0
    svd_oversample: int = 10
    svd_power_iters: int = 4
    top_n_categories: int = 20
    top_n_asset_type_counts: int = 20

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict) -> "FeaturizerConfig":
        return cls(**d)


@dataclass
class FeatureMatrix:
    rows: np.ndarray
    column_names: List[str]


def _top_categories(values: Iterable[str], top_n: int) -> List[str]:
    freq: Dict[str, int] = {}
    for v in values:
        v = v or ""
        freq[v] = freq.get(v, 0) + 1
    ordered = sorted(freq, key=lambda c: (-freq[c], c))
    return ordered[:top_n]


class Featurizer:
    """Fit/transform pipeline producing a single dense feature matrix.

    Column layout: text_svd_* | num_* (standardized) | vol_* (log1p) |
    miss_* (missing indicators) | cat_* (one-hot).
    """

    def __init__(self, config: Optional[FeaturizerConfig] = None):
        self.config = config or FeaturizerConfig()
        self._fitted = False
        self.text_state: Optional[TextVectorizerState] = None
        self.svd_basis: Optional[SvdBasis] = None
        self.asset_count_keys: List[str] = []
        self.category_maps: Dict[str, List[str]] = {}
        self.impute_medians: Dict[str, float] = {}
        self.num_mean: Optional[np.ndarray] = None
        self.num_std: Optional[np.ndarray] = None
        self.column_names: List[str] = []

    # -- raw (pre-scaling) blocks ------------------------------------------

    def _numeric_names(self) -> List[str]:
        names = ["num_complexity_score"]
        names += [f"num_{f}" for f in _COUNT_FIELDS]
        names += [f"num_asset_count_{k}" for k in self.asset_count_keys]
        return names

    def _raw_numeric_row(self, rec: QueryRecord, rep: ComplexityReport) -> List[float]:
        row = [float(rep.score)]
        for f in _COUNT_FIELDS:
            v = getattr(rec, f)
            row.append(self.impute_medians[f] if v is None else float(v))
        for k in self.asset_count_keys:
            row.append(float(rec.asset_type_counts.get(k, 0)))
        return row

    def _vol_row(self, rec: QueryRecord) -> List[float]:
        bp = rec.total_bytes_processed
        bb = rec.total_bytes_billed
        bp = self.impute_medians["total_bytes_processed"] if bp is None else float(bp)
        bb = self.impute_medians["total_bytes_billed"] if bb is None else float(bb)
        acct = rec.account_count
        res = rec.resource_count
        acct = self.impute_medians["account_count"] if acct is None else float(acct)
        res = self.impute_medians["resource_count"] if res is None else float(res)
        per_acct = bp / acct if acct > 0 else 0.0
        per_res = bp / res if res > 0 else 0.0
        return [np.log1p(bp), np.log1p(bb), np.log1p(per_acct), np.log1p(per_res)]

    def _miss_row(self, rec: QueryRecord) -> List[float]:
        return [1.0 if getattr(rec, f) is None else 0.0 for f in _OPTIONAL_FIELDS]

    def _cat_row(self, rec: QueryRecord) -> List[float]:
        row: List[float] = []
        for f in _CATEGORICAL_FIELDS:
            cats = self.category_maps[f]
            value = getattr(rec, f) or ""
            hot = [0.0] * (len(cats) + 1)
            if value in cats:
                hot[cats.index(value)] = 1.0
            else:
                hot[-1] = 1.0
            row.extend(hot)
        for f in ("accounts_aws", "accounts_gcp", "accounts_azure"):
            v = getattr(rec, f)
            row.append(1.0 if (v is not None and v > 0) else 0.0)
        row.append(1.0 if rec.cache_hit else 0.0)
        return row

    def _cat_names(self) -> List[str]:
        names: List[str] = []
        for f in _CATEGORICAL_FIELDS:
            for c in self.category_maps[f]:
                names.append(f"cat_{f}_{c or '<empty>'}")
            names.append(f"cat_{f}_{OTHER_CATEGORY}")
        names += ["cat_provider_aws", "cat_provider_gcp", "cat_provider_azure",
                  "cat_cache_hit"]
        return names

    # -- fit / transform ----------------------------------------------------

    def fit_transform(self, records: Sequence[QueryRecord],
                      reports: Sequence[ComplexityReport],
                      cleaned: Optional[Sequence[CleanedQuery]] = None
                      ) -> FeatureMatrix:
        if len(records) == 0:
            raise EmptyCorpus("fit_transform requires at least one record")
        if len(records) != len(reports):
            raise LengthMismatch("one ComplexityReport per record required")
        cfg = self.config
        if cleaned is None:
            from .sql_analyzer import clean_query
            cleaned = [clean_query(r.query_text) for r in records]

        # text pipeline
        self.text_state = fit_text(cleaned, min_df=cfg.min_df,
                                   max_vocab=cfg.max_vocab)
        tfidf = transform_text_corpus(self.text_state, cleaned)
        if len(records) >= 2 and self.text_state.size >= 1:
            self.svd_basis = fit_svd(tfidf, cfg.svd_components,
                                     seed=cfg.svd_seed,
                                     oversample=cfg.svd_oversample,
                                     power_iters=cfg.svd_power_iters)
        else:
            # degenerate corpus: no usable text subspace
            self.svd_basis = SvdBasis(
                components=np.zeros((0, self.text_state.size)),
                singular_values=np.zeros(0))

        # impute medians from observed training values
        self.impute_medians = {}
        for f in _OPTIONAL_FIELDS:
            obs = [float(getattr(r, f)) for r in records if getattr(r, f) is not None]
            self.impute_medians[f] = float(np.median(obs)) if obs else 0.0

        # asset-type count keys: top-N by training frequency, ties lexicographic
        key_freq: Dict[str, int] = {}
        for r in records:
            for k in r.asset_type_counts:
                key_freq[k] = key_freq.get(k, 0) + 1
        self.asset_count_keys = sorted(
            key_freq, key=lambda k: (-key_freq[k], k))[:cfg.top_n_asset_type_counts]

        # category maps
        self.category_maps = {
            f: _top_categories((getattr(r, f) for r in records),
                               cfg.top_n_categories)
            for f in _CATEGORICAL_FIELDS
        }

        num = np.array([self._raw_numeric_row(r, rep)
                        for r, rep in zip(records, reports)], dtype=np.float64)
        self.num_mean = num.mean(axis=0)
        std = num.std(axis=0)
        std[std <= 0] = 1.0
        self.num_std = std

        self.column_names = (
            [f"text_svd_{i}" for i in range(self.svd_basis.k)]
            + self._numeric_names()
            + ["vol_log1p_bytes_processed", "vol_log1p_bytes_billed",
               "vol_log1p_bytes_per_account", "vol_log1p_bytes_per_resource"]
            + [f"miss_{f}" for f in _OPTIONAL_FIELDS]
            + self._cat_names()
        )
        self._fitted = True
        return self.transform(records, reports, cleaned)

    def transform(self, records: Sequence[QueryRecord],
                  reports: Sequence[ComplexityReport],
                  cleaned: Optional[Sequence[CleanedQuery]] = None
                  ) -> FeatureMatrix:
        if not self._fitted:
            raise StateNotFitted("featurizer must be fit before transform")
        if cleaned is None:
            from .sql_analyzer import clean_query
            cleaned = [clean_query(r.query_text) for r in records]
        n = len(records)
        k = self.svd_basis.k
        text_block = np.zeros((n, k))
        for i, q in enumerate(cleaned):
            if k:
                text_block[i] = project_text(self.svd_basis,
                                             transform_text(self.text_state, q))
        num = np.array([self._raw_numeric_row(r, rep)
                        for r, rep in zip(records, reports)], dtype=np.float64)
        if n == 0:
            num = num.reshape(0, len(self._numeric_names()))
        num = (num - self.num_mean) / self.num_std
        vol = np.array([self._vol_row(r) for r in records], dtype=np.float64)
        miss = np.array([self._miss_row(r) for r in records], dtype=np.float64)
        cat = np.array([self._cat_row(r) for r in records], dtype=np.float64)
        rows = np.hstack([text_block, num,
                          vol.reshape(n, 4),
                          miss.reshape(n, len(_OPTIONAL_FIELDS)),
                          cat.reshape(n, len(self._cat_names()))])
        if not np.all(np.isfinite(rows)):
            raise ValueError("non-finite entries in feature matrix")
        return FeatureMatrix(rows=rows, column_names=list(self.column_names))

    # -- serialization ------------------------------------------------------

    def get_state(self) -> Tuple[dict, Dict[str, np.ndarray]]:
        """(json-able meta, named arrays) for the bundle writer."""
        if not self._fitted:
            raise StateNotFitted("cannot serialize an unfitted featurizer")
        meta = {
            "config": self.config.to_dict(),
            "vocabulary": sorted(self.text_state.vocabulary,
                                 key=self.text_state.vocabulary.get),
            "n_docs": self.text_state.n_docs,
            "asset_count_keys": self.asset_count_keys,
            "category_maps": self.category_maps,
            "impute_medians": self.impute_medians,
            "column_names": self.column_names,
        }
        arrays = {
            "doc_freq": self.text_state.doc_freq,
            "idf": self.text_state.idf,
            "svd_components": self.svd_basis.components,
            "svd_singular_values": self.svd_basis.singular_values,
            "num_mean": self.num_mean,
            "num_std": self.num_std,
        }
        return meta, arrays

    @classmethod
    def from_state(cls, meta: dict, arrays: Dict[str, np.ndarray]) -> "Featurizer":
        fz = cls(FeaturizerConfig.from_dict(meta["config"]))
        vocab = {t: i for i, t in enumerate(meta["vocabulary"])}
        fz.text_state = TextVectorizerState(
            vocabulary=vocab,
            doc_freq=arrays["doc_freq"],
            idf=arrays["idf"],
            n_docs=int(meta["n_docs"]),
        )
        fz.svd_basis = SvdBasis(components=arrays["svd_components"],
                                singular_values=arrays["svd_singular_values"])
        fz.asset_count_keys = list(meta["asset_count_keys"])
        fz.category_maps = {k: list(v) for k, v in meta["category_maps"].items()}
        fz.impute_medians = {k: float(v) for k, v in meta["impute_medians"].items()}
        fz.num_mean = arrays["num_mean"]
        fz.num_std = arrays["num_std"]
        fz.column_names = list(meta["column_names"])
        fz._fitted = True
        return fz
