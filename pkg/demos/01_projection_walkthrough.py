"""Walk through the additive projection of a tiny 3x3 score grid.

The grid holds a binary classifier's logit for every cross-pairing of three
text items with three visual items.  Projecting onto the additive family
only needs row means, column means and the grand mean; the diagonal of the
reconstruction is what the projected model predicts for the originally
paired items.
"""

import numpy as np

from emap.grid import ScoreGrid, emap_decompose, emap_predictions, projection_loss

values = np.array(
    [
        [-1.3, 0.3, -0.2],
        [0.8, 3.0, 1.1],
        [1.1, -0.1, 0.7],
    ]
)
grid = ScoreGrid(values=values[:, :, np.newaxis])

print("score grid (rows = texts, columns = visuals):")
print(values)

dec = emap_decompose(grid)
print("\ngrand mean:            ", dec.mu[0])
print("row means (text side):  ", np.round(values.mean(axis=1), 4))
print("column means (visual):  ", np.round(values.mean(axis=0), 4))
print("tau (centered):         ", np.round(dec.tau[:, 0], 4))
print("phi (centered):         ", np.round(dec.phi[:, 0], 4))

preds = emap_predictions(dec)[:, 0]
print("\nprojected paired scores:", preds)
print("original paired scores: ", np.diag(values))
print("squared residual over all 9 cells:", round(projection_loss(grid, dec), 6))

print("\nThe projection keeps each item's average behavior and discards")
print("anything that depends jointly on the specific (text, visual) pair.")
