"""Which boolean multimodal functions can an additive scorer compute?

A truth table over n text bits and n visual bits is additively
representable exactly when no 2x2 submatrix forms an exclusive-or pattern.
At one bit per side that excludes only the two parity functions; by three
bits per side, a uniformly random nonconstant table is almost never
representable.
"""

import numpy as np

from emap.logic import (
    BooleanTable,
    additive_fit_auc,
    is_representable,
    parse_formula,
    representable_oracle,
    sample_table,
    table_from_formula,
)

print("census of all 16 single-bit tables:")
representable = 0
for code in range(16):
    bits = (code >> np.arange(4)) & 1
    table = BooleanTable(1, bits.reshape(2, 2).astype(np.uint8))
    ok = is_representable(table)
    assert ok == representable_oracle(table)
    representable += ok
    if not ok:
        print(f"  not representable: {table.table.tolist()}")
print(f"  {representable}/16 representable")

formula = "(t2 & !v2) | (t1 & t2 & v1) | (!t1 & !v1 & !v2)"
table = table_from_formula(parse_formula(formula), 2)
print(f"\na nontrivial two-bit formula:\n  {formula}")
print(f"  representable: {is_representable(table)} (feasibility oracle agrees: "
      f"{representable_oracle(table)})")
print(f"  projection AUC on its table: {additive_fit_auc(table, 'emap'):.3f}")

xor = table_from_formula(parse_formula("(t1 & !v1) | (!t1 & v1)"), 1)
print(f"\nexclusive-or, the canonical failure:")
print(f"  projection AUC {additive_fit_auc(xor, 'emap'):.2f}, "
      f"unimodal boosting AUC {additive_fit_auc(xor, 'adaboost_unimodal'):.2f}, "
      f"unrestricted boosting AUC {additive_fit_auc(xor, 'adaboost_full'):.2f}")

hits = 0
samples = 3000
for i in range(samples):
    t = sample_table(3, np.random.SeedSequence([13, i]), require_nonconstant=True)
    hits += is_representable(t)
print(f"\nrandom nonconstant tables at n=3: {hits}/{samples} representable "
      f"({hits / samples:.3%})")
print("Almost no logical function of six variables is additively computable.")
