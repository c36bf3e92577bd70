"""Where does the tail start? Splitting classes by cumulative frequency.

A long-tailed label distribution has no obvious cut between "head" and
"tail". The convention here: sort classes by count, walk down the sorted
list accumulating counts, and call a class tail once the running fraction
of all samples passes a threshold t_s. With t_s = 0.9 the head classes
are the ones that together cover the first 90% of the data.
"""

import numpy as np

from tailfocal import class_stats_from_counts, tail_partition

# A toy label histogram: two dominant classes, a middle, and a long tail.
counts = [9400, 3100, 820, 260, 95, 40, 12, 5, 2, 1]
stats = class_stats_from_counts(counts)

print(f"{stats.n_classes} classes, {stats.total} samples, "
      f"imbalance ratio {stats.cir:.0f}")
print()

for t_s in (0.5, 0.9, 0.99):
    part = tail_partition(stats, t_s)
    tail_ids = np.flatnonzero(part.is_tail)
    print(f"t_s = {t_s:4}: {part.n_tail} tail classes -> {tail_ids.tolist()}")
print()

# The per-class positions make the cut transparent. Class 0 alone covers
# 68% of the data, so it is head for every threshold below 0.68; the
# singleton class sits at position 1.0 and is tail for every t_s < 1.
part = tail_partition(stats, 0.9)
print("class  count  position  tail?")
for c in np.argsort(-stats.counts):
    print(f"{c:5d} {stats.counts[c]:6d}  {part.normalized_position[c]:8.4f}  "
          f"{'tail' if part.is_tail[c] else 'head'}")
print()

# Positions depend only on count proportions: scaling every count by the
# same factor moves nothing.
doubled = tail_partition(class_stats_from_counts(np.array(counts) * 2), 0.9)
print("doubling all counts changes the partition:",
      not np.array_equal(doubled.is_tail, part.is_tail))
