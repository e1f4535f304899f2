"""Early accept/reject on a two-outcome toy model.

The toy draws a low-fidelity and a high-fidelity accept/reject decision
with fixed joint rates.  Running campaigns with different continuation
probabilities shows how the weight sequence changes while its mean stays
at the true acceptance probability.

Run: python demos/01_toy_weights.py
"""

import numpy as np

from mfabc.problems import BernoulliToy
from mfabc.samplers import CampaignSpec, FixedEta, StopRule, run_multifidelity

toy = BernoulliToy(p_tp=0.10, p_fp=0.02, p_fn=0.03)
print(f"true acceptance probability: {toy.acceptance:.3f}")

for eta in [(1.0, 1.0), (0.5, 0.5), (0.2, 0.1)]:
    spec = CampaignSpec(toy, FixedEta(*eta), StopRule(n=50_000), seed=0)
    s = run_multifidelity(spec).sample
    checked = np.mean(s.w_high >= 0)
    print(f"eta={eta}: mean weight {s.z_hat:.4f}, ESS {s.ess:8.1f}, "
          f"checked {100 * checked:5.1f}%, cost {s.total_cost:9.1f}")
    print("   cases:", s.case_counts())
