"""Train the variational classifier with and without the boundary barrier,
then fit dual temperatures on the validation set and report the effect.

The corpus is three Gaussian blobs plus a block of points drawn from the
class-1 cluster but labeled 0, which gives the model a genuinely ambiguous
region where entropy placement matters. This is a scaled-down version of the
comparison in tests/test_acceptance.py (criterion 7); expect a couple of
minutes on a laptop.

Run: python3 demos/train_calibrate.py
"""

from cubcal import (
    DEFAULT_BOUNDARY,
    avu,
    avu_counts,
    calibrate_run,
    delta_u,
    standard_benchmark,
)
from cubcal.metrics import accuracy


def summarize(tag, records):
    print(f"  {tag:<14} acc={accuracy(records):.3f} "
          f"AvU={avu(avu_counts(records, 0.325)):.3f} "
          f"dU={delta_u(records):.3f}")


runs = {}
for beta in (0.0, 0.1):
    print(f"training with beta={beta} ...")
    runs[beta] = standard_benchmark(beta=beta, seed=42)

print("\ntest-set uncertainty quality (higher AvU / dU is better):")
summarize("cross-entropy", runs[0.0]["test_records"])
summarize("with barrier", runs[0.1]["test_records"])

print("\nfitting dual temperatures on the validation split ...")
cal = calibrate_run(runs[0.1]["val_records"], runs[0.1]["test_records"],
                    DEFAULT_BOUNDARY)
temps = cal["temps"]
print(f"  t_high={temps.t_high:.3f} (sharpen)  t_low={temps.t_low:.3f} (soften)")
print(f"  val BCCE {temps.bcce_before:.4f} -> {temps.bcce_after:.4f}")
before, after = cal["report_before"], cal["report_after"]
print(f"  test BCCE {before.bcce:.4f} -> {after.bcce:.4f} "
      f"(accuracy unchanged: {before.accuracy == after.accuracy})")
