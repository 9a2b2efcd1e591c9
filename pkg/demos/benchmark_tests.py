"""UC and CC tests on the binary benchmark process.

X is an order-2 chain, Z is fair coin flips, and Y_n = X_n + Z_{n-3} + W_n
(mod 2) with 1% noise W. Without Z, Y looks like pure noise relative to X,
so the UC test should never reject. Once Z is conditioned on, X explains Y
almost perfectly, but only when the memory k reaches the Z lag of 3.
"""

from ccdi import AlphabetSpec, TestConfig, benchmark_process, exact_ccdi_rate, run_test, simulate

model = benchmark_process()
x, y, z = simulate(model, 200_000, seed=2024)

print("UC test (Z ignored)")
print(f"{'k':>2} {'dof':>7} {'statistic':>12} {'p':>8}  reject")
for k in range(6):
    r = run_test(x, y, None, TestConfig(k, AlphabetSpec(2, 2), mode="uc"))
    print(f"{k:>2} {r.dof:>7} {r.statistic:>12.1f} {r.p_value:>8.2f}  {r.reject}")

print("\nCC test (conditioning on Z)")
print(f"{'k':>2} {'dof':>7} {'statistic':>12} {'p':>8}  reject  exact rate")
for k in range(6):
    r = run_test(x, y, z, TestConfig(k, AlphabetSpec(2, 2, 2)))
    print(f"{k:>2} {r.dof:>7} {r.statistic:>12.1f} {r.p_value:>8.2g}  {str(r.reject):<6}  {exact_ccdi_rate(model, k):.4f}")
