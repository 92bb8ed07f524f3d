"""How fast does additive fit quality collapse as problem size grows?

For each size n, sample random nonconstant truth tables and measure the
training AUC of three fits: the additive projection of the table itself,
AdaBoost restricted to one-modality trees, and unrestricted AdaBoost as the
interactive reference.  The unrestricted fit is always perfect; the two
additive fits decay together as n grows.

A reduced run (the acceptance suite uses 2000 samples per size).
"""

from emap.logic import run_size_sweep

rows = run_size_sweep([1, 2, 3, 4], samples_per_n=200, seed=99)

print(f"{'n':>2s}  {'method':20s} {'mean AUC':>9s} {'std':>7s}")
for row in rows:
    print(f"{row.n:2d}  {row.method:20s} {row.mean_auc:9.4f} {row.std_auc:7.4f}")

print("\nSame data via the command line:")
print("  emap logic sweep --n-range 1..4 --samples 200 --seed 99 --out sweep.csv")
