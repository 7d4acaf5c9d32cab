"""Ingested query records (the JSONL wire schema) shared across modules."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Dict, Optional


@dataclass
class QueryRecord:
    query_text: str
    project_id: str = ""
    dataset_id: str = ""
    region: str = ""
    asset_type: str = ""
    cache_hit: bool = False
    total_bytes_processed: Optional[int] = None
    total_bytes_billed: Optional[int] = None
    account_count: Optional[int] = None
    resource_count: Optional[int] = None
    accounts_aws: Optional[int] = None
    accounts_gcp: Optional[int] = None
    accounts_azure: Optional[int] = None
    asset_type_counts: Dict[str, int] = field(default_factory=dict)
    creation_time: str = ""
    environment: str = ""
    total_slot_ms: Optional[float] = None
    elapsed_ms: Optional[float] = None
    timed_out: bool = False

    @property
    def slot_min(self) -> float:
        if self.total_slot_ms is None:
            raise ValueError("record has no observed slot time")
        return self.total_slot_ms / 60000.0

    def to_json_dict(self) -> dict:
        d = asdict(self)
        return {k: v for k, v in d.items() if v is not None}

    @classmethod
    def from_json_dict(cls, d: dict) -> "QueryRecord":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {k: v for k, v in d.items() if k in known}
        if "query_text" not in kwargs:
            raise KeyError("query_text")
        rec = cls(**kwargs)
        if rec.asset_type_counts is None:
            rec.asset_type_counts = {}
        return rec
