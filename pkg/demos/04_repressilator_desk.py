"""Desk-scale repressilator benchmark and efficiency comparison.

Generates (or loads) a benchmark table of paired tau-leap and exact
repressilator runs, tunes the continuation probabilities from it and
compares sampler settings on repeated 200-row subsamples.

Generating 10^4 rows takes a few minutes on one core; pass a smaller
row count as the first argument for a quicker look.

Run: python demos/04_repressilator_desk.py [rows]
"""

import sys
from pathlib import Path

from mfabc.experiments import BenchmarkTable, efficiency_study, generate_benchmark
from mfabc.mf_tuning import optimal_eta
from mfabc.problems import RepressilatorProblem

rows = int(sys.argv[1]) if len(sys.argv) > 1 else 10_000
path = Path(f"repressilator_{rows}.csv")
if path.exists():
    table = BenchmarkTable.from_csv(path)
else:
    table = generate_benchmark(RepressilatorProblem(seed=0), rows, seed=0)
    table.to_csv(path)

est = table.estimates()
print(f"rates: tp {est.p_tp:.4f}, fp {est.p_fp:.4f}, fn {est.p_fn:.4f}")
print(f"mean cost low {table.cost_lo.mean():.4f}s, high {table.cost_hi.mean():.4f}s")
print(f"optimal eta: {optimal_eta(est).pair}")

study = efficiency_study(table, subsample=200, repeats=rows // 200)
for label in study.labels:
    print(f"  {label:22s} median efficiency {study.median(label):.3f}")
