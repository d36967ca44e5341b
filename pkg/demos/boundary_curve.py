"""Plot-free tour of the confidence-uncertainty boundary curve.

For a K-class prediction with top-class probability p, the predictive entropy
is squeezed between two analytic bounds: the lower bound is attained when all
residual mass sits on one runner-up class, the upper bound when it is spread
evenly over the other K-1 classes. The ideal profile follows the lower bound
above the confidence threshold gamma (a confident prediction should be sharp)
and the upper bound below it (an unconfident one should be maximally hedged).

Run: python3 demos/boundary_curve.py
"""

import numpy as np

from cubcal import BoundaryConfig, boundary_curve, feasible_span, invert_u_max, u_min

cfg = BoundaryConfig(gamma=0.9, k=3)

print(f"K={cfg.k}, gamma={cfg.gamma}")
print(f"entropy floor at p=0.9:      u_min = {u_min(0.9, cfg.k):.4f} nats")
print(f"confidence where u_max=0.325: p    = {invert_u_max(0.325, cfg.k):.4f}")
print(f"feasible span at p=0.5:             {feasible_span(0.5, cfg.k):.4f} nats")
print()

samples = boundary_curve(cfg, n_points=11)
print(f"{'p_hat':>7} {'u_min':>8} {'u_max':>8} {'u_ideal':>8}")
for s in samples:
    print(f"{s.confidence:7.3f} {s.u_min:8.4f} {s.u_max:8.4f} {s.u_ideal:8.4f}")
print()
print("Note the jump in u_ideal at p_hat = gamma: that discontinuity is what")
print("the band thresholds of the dual-temperature calibrator smooth over.")

# The span collapses at p=1 and the two bounds meet: a fully confident
# prediction has exactly one feasible entropy, zero.
assert np.isclose(samples[-1].u_min, 0.0) and np.isclose(samples[-1].u_max, 0.0)
