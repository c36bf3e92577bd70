"""Seven classification losses on one sweep of the true-class probability.

All seven losses share one interface: a value, the derivative with respect
to the true-class probability P_y, and the gradient with respect to the
logits. This script sweeps P_y for a fixed two-class problem and prints
the losses side by side, then spot-checks the special-case reductions
that tie the family together.
"""

import numpy as np

from tailfocal import (
    LossSpec,
    class_stats_from_counts,
    loss_on_logits,
    softmax,
    tail_partition,
)

# An imbalanced two-class world: class 1 is the rare one. Evaluating the
# losses on the rare class is where they differ most.
stats = class_stats_from_counts([950, 50])
tail = tail_partition(stats, 0.9)  # class 1 is tail (position 1.0 > 0.9)
print("tail flags:", tail.is_tail.tolist())

specs = {
    "ce": LossSpec(kind="ce"),
    "wce": LossSpec(kind="wce", stats=stats),
    "fl": LossSpec(kind="fl", gamma=2.0),
    "cb": LossSpec(kind="cb", lam=0.999, stats=stats),
    "bs": LossSpec(kind="bs", stats=stats),
    "ldam": LossSpec(kind="ldam", margin_c=0.5, stats=stats),
    "tfl": LossSpec(kind="tfl", gamma=2.0, beta=2.0, stats=stats, tail=tail),
}

# Logits that put probability p on the rare class 1.
def logits_for(p):
    return np.array([0.0, np.log(p / (1.0 - p))])

print()
print("loss on the rare class as the model grows confident (y = 1):")
header = "P_y   " + "".join(f"{k:>9}" for k in specs)
print(header)
for p in (0.1, 0.3, 0.5, 0.7, 0.9, 0.99):
    z = logits_for(p)
    row = "".join(f"{loss_on_logits(s, z, 1).value:9.4f}" for s in specs.values())
    print(f"{p:4.2f} {row}")

# Down-weighting vs boosting, in one sentence each: fl shrinks the loss on
# easy samples; wce/cb scale by inverse frequency; bs/ldam shift logits by
# count-derived offsets; tfl adds beta extra units of cross entropy, but
# only on tail classes.

print()
print("special cases collapse to simpler losses:")
z = logits_for(0.35)
checks = [
    ("fl(gamma=0) == ce",
     LossSpec(kind="fl", gamma=0.0), LossSpec(kind="ce")),
    ("tfl(beta=0) == fl",
     LossSpec(kind="tfl", gamma=2.0, beta=0.0, stats=stats, tail=tail),
     LossSpec(kind="fl", gamma=2.0)),
    ("tfl(t_s=1) == fl (no tail left)",
     LossSpec(kind="tfl", gamma=2.0, beta=2.0, stats=stats,
              tail=tail_partition(stats, 1.0)),
     LossSpec(kind="fl", gamma=2.0)),
    ("bs(uniform counts) == ce",
     LossSpec(kind="bs", stats=class_stats_from_counts([50, 50])),
     LossSpec(kind="ce")),
]
for label, a, b in checks:
    va = loss_on_logits(a, z, 1).value
    vb = loss_on_logits(b, z, 1).value
    print(f"  {label}: |diff| = {abs(va - vb):.2e}")

# Gradients come along for free and always sum to zero over the logits.
print()
ev = loss_on_logits(specs["tfl"], logits_for(0.35), 1)
print(f"tfl at P_y=0.35: value {ev.value:.4f}, dL/dP_y {ev.grad_p:.4f}, "
      f"grad_z {np.round(ev.grad_z, 4).tolist()} (sum {ev.grad_z.sum():+.1e})")
