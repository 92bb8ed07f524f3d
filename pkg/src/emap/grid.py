"""Cross-pairing score grids and their best additive approximation.

A score grid holds the outputs of a two-input-group scorer ``f(t, v)`` over
*every* text x visual cross-pairing of an evaluation set, including pairings
that never occur in the data.  Its least-squares projection onto the family
of additive scorers ``f_T(t) + f_V(v)`` is computed in closed form from row
means, column means and the grand mean.  The projection is the exact, unique
minimizer of the summed squared error over all cells (uniqueness is up to a
constant that can be shifted between the two unimodal parts; see
:mod:`emap.oracle` for an independent check).

All arithmetic is 64-bit.  Means are computed with numpy's pairwise
summation in canonical index order, so identical grid bytes always produce
identical decomposition bytes, regardless of how the grid was built.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import InputError, NumericError

__all__ = [
    "ScoreGrid",
    "AdditiveDecomposition",
    "build_grid",
    "emap_decompose",
    "emap_predictions",
    "projection_loss",
]


@dataclass(frozen=True, eq=False)
class ScoreGrid:
    """Scores of a two-input scorer over all cross-pairings.

    ``values[i, j, c]`` is output channel ``c`` of the scorer applied to
    text item ``i`` and visual item ``j``.  Grids built from paired
    evaluation data are square; rectangular grids are accepted for
    decomposition but not for paired predictions.
    """

    values: np.ndarray
    text_ids: tuple = field(default=())
    visual_ids: tuple = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 2:
            values = values[:, :, np.newaxis]
        if values.ndim != 3:
            raise InputError(f"grid values must be N_t x N_v x d, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1 or values.shape[2] < 1:
            raise InputError(f"grid dimensions must all be >= 1, got {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise NumericError(f"non-finite grid value at (i={bad[0]}, j={bad[1]}, channel={bad[2]})")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "text_ids", tuple(self.text_ids) or tuple(range(values.shape[0])))
        object.__setattr__(self, "visual_ids", tuple(self.visual_ids) or tuple(range(values.shape[1])))
        if len(self.text_ids) != values.shape[0]:
            raise InputError("text_ids length does not match grid rows")
        if len(self.visual_ids) != values.shape[1]:
            raise InputError("visual_ids length does not match grid columns")

    @property
    def n_text(self) -> int:
        return self.values.shape[0]

    @property
    def n_visual(self) -> int:
        return self.values.shape[1]

    @property
    def d(self) -> int:
        return self.values.shape[2]

    @property
    def is_square(self) -> bool:
        return self.n_text == self.n_visual

    @property
    def n(self) -> int:
        """Number of paired items. Defined for square grids only."""
        if not self.is_square:
            raise InputError(f"grid is rectangular ({self.n_text} x {self.n_visual}); n is undefined")
        return self.n_text


@dataclass(frozen=True, eq=False)
class AdditiveDecomposition:
    """Additive fit ``score(i, j) = tau[i] + phi[j] + mu`` in canonical gauge.

    The free constant that can be moved between the per-text and per-visual
    parts is fixed by centering: per channel, ``tau`` and ``phi`` each have
    mean zero and ``mu`` carries all constants.  Summed predictions are
    invariant under this choice.
    """

    tau: np.ndarray
    phi: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        tau = np.atleast_2d(np.asarray(self.tau, dtype=np.float64))
        phi = np.atleast_2d(np.asarray(self.phi, dtype=np.float64))
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        if tau.ndim != 2 or phi.ndim != 2 or mu.ndim != 1:
            raise InputError("tau and phi must be 2-D (items x channels), mu 1-D")
        if tau.shape[1] != mu.shape[0] or phi.shape[1] != mu.shape[0]:
            raise InputError(
                f"channel mismatch: tau {tau.shape}, phi {phi.shape}, mu {mu.shape}"
            )
        for name, arr in (("tau", tau), ("phi", phi), ("mu", mu)):
            if not np.all(np.isfinite(arr)):
                raise NumericError(f"non-finite entries in {name}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "mu", mu)

    @property
    def d(self) -> int:
        return self.mu.shape[0]

    def gauge_residual(self) -> float:
        """Largest |channel mean| of tau or phi; ~0 for a canonical decomposition."""
        return max(
            float(np.max(np.abs(self.tau.mean(axis=0)))),
            float(np.max(np.abs(self.phi.mean(axis=0)))),
        )

    def canonicalized(self) -> "AdditiveDecomposition":
        """Re-center tau and phi to zero mean, folding the constants into mu."""
        t_mean = self.tau.mean(axis=0)
        p_mean = self.phi.mean(axis=0)
        return AdditiveDecomposition(
            tau=self.tau - t_mean,
            phi=self.phi - p_mean,
            mu=self.mu + t_mean + p_mean,
        )

    def reconstruct(self) -> np.ndarray:
        """Full additive grid, shape (n_text, n_visual, d)."""
        return self.tau[:, np.newaxis, :] + self.phi[np.newaxis, :, :] + self.mu


Scorer = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _as_feature_matrix(items: Sequence, name: str) -> np.ndarray:
    try:
        mat = np.asarray(items, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} features are not a uniform numeric array: {exc}") from None
    if mat.ndim == 1:
        mat = mat[:, np.newaxis]
    if mat.ndim != 2:
        raise InputError(f"{name} features must be a list of vectors, got ndim={mat.ndim}")
    return mat


def _score_row(scorer, t_row: np.ndarray, visuals: np.ndarray) -> np.ndarray:
    """Scores of one text item against every visual item, shape (N_v, d)."""
    batched = getattr(scorer, "logits_many", None)
    if batched is not None:
        tiled = np.broadcast_to(t_row, (visuals.shape[0], t_row.shape[0]))
        out = np.asarray(batched(tiled, visuals), dtype=np.float64)
        if out.ndim == 1:
            out = out[:, np.newaxis]
        return out
    rows = []
    for v in visuals:
        out = np.atleast_1d(np.asarray(scorer(t_row, v), dtype=np.float64))
        rows.append(out)
    return np.stack(rows, axis=0)


def build_grid(
    scorer: Scorer,
    texts: Sequence,
    visuals: Sequence,
    threads: int | None = None,
) -> ScoreGrid:
    """Evaluate ``scorer`` on all N^2 text x visual cross-pairings.

    The scorer must be pure (identical inputs give identical outputs), so the
    evaluation order is unobservable; rows may be computed in parallel when
    ``threads`` > 1 without changing a single bit of the result.  Scorers may
    expose a vectorized ``logits_many(T, V)`` method (row-paired batches),
    which is used when present; otherwise the plain callable is invoked once
    per cell.
    """
    t_mat = _as_feature_matrix(texts, "text")
    v_mat = _as_feature_matrix(visuals, "visual")
    if t_mat.shape[0] != v_mat.shape[0]:
        raise InputError(
            f"texts and visuals must have equal length, got {t_mat.shape[0]} and {v_mat.shape[0]}"
        )
    n = t_mat.shape[0]
    if n < 1:
        raise InputError("at least one paired item is required")

    grid_fn = getattr(scorer, "logits_grid", None)
    if grid_fn is not None:
        values = np.asarray(grid_fn(t_mat, v_mat), dtype=np.float64)
        if values.ndim == 2:
            values = values[:, :, np.newaxis]
    else:
        first = _score_row(scorer, t_mat[0], v_mat)
        d = first.shape[1]
        values = np.empty((n, n, d), dtype=np.float64)
        values[0] = first

        def fill(i: int) -> None:
            row = _score_row(scorer, t_mat[i], v_mat)
            if row.shape[1] != d:
                raise InputError(
                    f"scorer output length changed from {d} to {row.shape[1]} at row {i}"
                )
            values[i] = row

        if threads is not None and threads > 1 and n > 2:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(fill, range(1, n)))
        else:
            for i in range(1, n):
                fill(i)

    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        i, j = int(bad[0][0]), int(bad[0][1])
        raise NumericError(f"scorer returned a non-finite value for pair (i={i}, j={j})")
    return ScoreGrid(values=values)


def emap_decompose(grid: ScoreGrid) -> AdditiveDecomposition:
    """Project a grid onto the additive family, in canonical gauge.

    Per channel: ``tau[i]`` is the i-th row mean minus the grand mean,
    ``phi[j]`` the j-th column mean minus the grand mean, and ``mu`` the
    grand mean, so that ``tau[i] + phi[j] + mu`` equals
    ``row_mean[i] + col_mean[j] - grand_mean`` -- the optimal additive fit.
    """
    values = grid.values
    mu = values.mean(axis=(0, 1))
    row_means = values.mean(axis=1)
    col_means = values.mean(axis=0)
    return AdditiveDecomposition(tau=row_means - mu, phi=col_means - mu, mu=mu)


def emap_predictions(dec: AdditiveDecomposition) -> np.ndarray:
    """Projected scores of the originally paired items: ``tau[i] + phi[i] + mu``.

    Only meaningful when texts and visuals are paired one-to-one, i.e. the
    underlying grid was square.
    """
    if dec.tau.shape[0] != dec.phi.shape[0]:
        raise InputError(
            f"paired predictions need equally many text and visual offsets, "
            f"got {dec.tau.shape[0]} and {dec.phi.shape[0]}"
        )
    return dec.tau + dec.phi + dec.mu


def projection_loss(
    grid: ScoreGrid, dec: AdditiveDecomposition, per_channel: bool = False
):
    """Summed squared residual between the grid and an additive fit.

    Returns the total over all cells and channels, or the per-channel vector
    when ``per_channel`` is set.  The objective decouples across channels, so
    the total is exactly the sum of the per-channel losses.
    """
    if dec.tau.shape[0] != grid.n_text or dec.phi.shape[0] != grid.n_visual:
        raise InputError(
            f"decomposition shape ({dec.tau.shape[0]}, {dec.phi.shape[0]}) does not match "
            f"grid ({grid.n_text}, {grid.n_visual})"
        )
    if dec.d != grid.d:
        raise InputError(f"channel mismatch: grid d={grid.d}, decomposition d={dec.d}")
    resid = grid.values - dec.reconstruct()
    channel = np.sum(resid * resid, axis=(0, 1))
    if per_channel:
        return channel
    return float(np.sum(channel))
