"""Two convergence regimes of the plug-in estimate.

With zero influence the error shrinks like 1/n. With positive influence it
shrinks like 1/sqrt(n), but only once n is large against the number of
free parameters. The copy channel (dof 1) gets there quickly. The benchmark CC
test at k=3 (dof 1920) is still dominated by the O(dof/n) bias on this grid.
"""

import numpy as np

from ccdi import AlphabetSpec, StructuralModel, TestConfig, benchmark_process, rate_dichotomy_study

grid = [2**e for e in range(10, 16)]
copy = StructuralModel(np.array([[0.5, 0.5]]), np.array([1.0]), (("x", 0),), 0.1)

cases = [
    ("benchmark, UC k=1 (no influence)", benchmark_process(), TestConfig(1, AlphabetSpec(2, 2), mode="uc")),
    ("copy channel, UC k=0 (dof 1)", copy, TestConfig(0, AlphabetSpec(2, 2), mode="uc")),
    ("benchmark, CC k=3 (dof 1920)", benchmark_process(), TestConfig(3, AlphabetSpec(2, 2, 2))),
]
for label, model, cfg in cases:
    rep = rate_dichotomy_study(model, cfg, grid, 100, seed=5)
    errs = " ".join(f"{e:.1e}" for e in rep.mean_abs_error)
    print(f"{label:<36} slope {rep.slope:+.2f}   errors {errs}")
