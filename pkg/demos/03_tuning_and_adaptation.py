"""Choosing continuation probabilities, offline and online.

The closed-form optimum is computed from known rates and costs, then an
adaptive campaign estimates the same quantities from its own burn-in
records and converges to the same pair.

Run: python demos/03_tuning_and_adaptation.py
"""

from mfabc.mf_tuning import optimal_eta, phi
from mfabc.problems import BernoulliToy
from mfabc.samplers import AdaptiveEta, CampaignSpec, StopRule, run_adaptive

toy = BernoulliToy(p_tp=0.10, p_fp=0.01, p_fn=0.01, c_lo=1.0, c_p=5.0, c_n=5.0)
est = toy.estimates()
best = optimal_eta(est)
print(f"closed-form optimum: ({best.eta1:.4f}, {best.eta2:.4f}), mode {best.mode}")
for eta in [(1.0, 1.0), (0.5, 0.5), best.pair]:
    print(f"  objective at {tuple(round(e, 3) for e in eta)}: {phi(*eta, est):.4f}")

spec = CampaignSpec(toy, AdaptiveEta(1000, freeze_after=None), StopRule(n=30_000), seed=0)
res = run_adaptive(spec)
trace = res.eta_trace
print(f"adaptive gate passed at index {res.gate_index}")
for k in (0, len(trace) // 4, len(trace) // 2, len(trace) - 1):
    print(f"  eta after {k:6d} adapted records: ({trace[k, 0]:.4f}, {trace[k, 1]:.4f})")
