"""Demo: seeded synthetic workload generation with a ground-truth cost oracle.

Run with: python3 demos/03_synthetic_workload.py
"""
import numpy as np

from slotcast import analyze_sql
from slotcast.synth import WorkloadConfig, generate


def main():
    records = generate(WorkloadConfig(n_queries=2000, seed=0))
    slots = np.array([r.slot_min for r in records])

    print(f"generated {len(records)} queries across "
          f"{len({r.environment for r in records})} environments")
    print(f"cache-hit fraction: {np.mean([r.cache_hit for r in records]):.2f}")
    print("\nslot-minute distribution (heavy-tailed by construction):")
    for q in (0.5, 0.9, 0.95, 0.99, 1.0):
        print(f"  p{int(q * 100):<3} = {np.quantile(slots, q):12.4f} slot-min")
    print(f"  queries >= 20 slot-min (long tail): {(slots >= 20).sum()}")

    scores = np.array([analyze_sql(r.query_text).score for r in records[:500]])
    print(f"\ncomplexity scores on the first 500 queries: "
          f"median {np.median(scores):.0f}, max {scores.max()}, "
          f">= 26 (complex route): {(scores >= 26).sum()}")

    sample = max(records, key=lambda r: r.slot_min)
    print(f"\nmost expensive query ({sample.slot_min:.1f} slot-min, "
          f"{sample.total_bytes_processed / 1e12:.2f} TB, "
          f"env {sample.environment}):")
    print(" ", sample.query_text[:160], "...")


if __name__ == "__main__":
    main()
