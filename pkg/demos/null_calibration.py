"""How well does chi-squared describe the UC statistic when X has no influence?

Repeats the UC test at k=1 on many independent benchmark runs and compares the
statistic's empirical law to chi2(6). Raise REPS to 10000 for a finer picture.
"""

import numpy as np

from ccdi import AlphabetSpec, TestConfig, benchmark_process, validate_null

REPS, LENGTH = 2000, 30_000

rep = validate_null(benchmark_process(), TestConfig(1, AlphabetSpec(2, 2), mode="uc"), LENGTH, REPS, seed=31)
print(f"KS distance to chi2({rep.dof}): {rep.ks_distance:.4f}  (1% critical value {rep.ks_threshold:.4f})")
print(f"mean {rep.mean:.3f} (expect {rep.dof}), variance {rep.variance:.3f} (expect {2 * rep.dof})")

# text histogram with the chi-squared density overlaid as '|'
edges = np.array(rep.bin_edges)
width = edges[1] - edges[0]
scale = 60 / max(rep.masses)
for lo, mass, dens in list(zip(edges[:-1], rep.masses, rep.density))[:25]:
    bar = "#" * int(mass * scale)
    mark = int(dens * width * scale)
    line = bar.ljust(max(mark + 1, len(bar)))
    line = line[:mark] + "|" + line[mark + 1:]
    print(f"{lo:6.1f} {line}")
