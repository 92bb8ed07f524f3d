"""Binary AdaBoost over depth-capped decision trees.

Built for measuring training fit, not generalization: impure nodes are
split even at zero impurity gain (whenever any feature still separates the
node), so a single deep tree can always memorize a finite discrete dataset.
Tie-breaking is fully deterministic -- lowest feature index first, then
lowest threshold, with thresholds at midpoints between consecutive distinct
values.

The unimodal-restricted variant fits one candidate tree per modality each
round and keeps the one with lower weighted error, so every stage reads only
text features or only visual features.  Identical feature rows are
aggregated into weighted pseudo-samples before each fit; this leaves every
split statistic unchanged and makes boolean-table boosting cheap.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, field

import numpy as np

from .data import PairedDataset
from .exceptions import InputError

__all__ = [
    "AdaBoostConfig",
    "DecisionTree",
    "fit_tree",
    "AdaBoostModel",
    "BoostState",
    "init_boost_state",
    "unimodal_restricted_boost_round",
    "full_boost_round",
    "train_adaboost",
]

_CHANCE_TOL = 1e-9
_ALPHA_EPS = 1e-10


@dataclass(frozen=True)
class AdaBoostConfig:
    max_depth: int = 15
    n_stages: int = 200
    restriction: str = "full"  # "full" or "unimodal"
    seed: int = 0  # recorded for provenance; the fit itself is deterministic


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """CART-style tree stored as parallel node arrays.

    ``feature[k] == -1`` marks node ``k`` as a leaf predicting
    ``value[k]`` in {-1, +1}.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.empty(X.shape[0], dtype=np.float64)
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            f = self.feature[node]
            if f < 0:
                out[idx] = self.value[node]
                continue
            go_left = X[idx, f] <= self.threshold[node]
            stack.append((self.left[node], idx[go_left]))
            stack.append((self.right[node], idx[~go_left]))
        return out

    def to_json_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "DecisionTree":
        return cls(
            feature=np.asarray(payload["feature"], dtype=np.int64),
            threshold=np.asarray(payload["threshold"], dtype=np.float64),
            left=np.asarray(payload["left"], dtype=np.int64),
            right=np.asarray(payload["right"], dtype=np.int64),
            value=np.asarray(payload["value"], dtype=np.float64),
        )


def _best_split(X: np.ndarray, wp: np.ndarray, wn: np.ndarray, idx: np.ndarray):
    """Best (feature, threshold) by weighted Gini decrease; None if unsplittable.

    Ties resolve to the lowest feature index, then the lowest threshold
    (np.argmax keeps the first maximum; thresholds are scanned ascending).
    """
    total_p = wp[idx].sum()
    total_n = wn[idx].sum()
    total = total_p + total_n
    parent_gini = total - (total_p * total_p + total_n * total_n) / total
    best_gain = -1.0
    best = None
    for f in range(X.shape[1]):
        vals = X[idx, f]
        order = np.argsort(vals, kind="stable")
        v_sorted = vals[order]
        distinct = v_sorted[1:] != v_sorted[:-1]
        if not distinct.any():
            continue
        cut = np.nonzero(distinct)[0]
        cp = np.cumsum(wp[idx][order])[cut]
        cn = np.cumsum(wn[idx][order])[cut]
        left_tot = cp + cn
        right_p = total_p - cp
        right_n = total_n - cn
        right_tot = total - left_tot
        # a zero-weight child contributes zero impurity (weights can
        # underflow to exact 0 late in boosting)
        with np.errstate(divide="ignore", invalid="ignore"):
            left_imp = np.where(left_tot > 0.0, (cp * cp + cn * cn) / left_tot, 0.0)
            right_imp = np.where(
                right_tot > 0.0, (right_p * right_p + right_n * right_n) / right_tot, 0.0
            )
        child_gini = left_tot - left_imp + right_tot - right_imp
        gains = parent_gini - child_gini
        k = int(np.argmax(gains))
        if gains[k] > best_gain:
            best_gain = float(gains[k])
            thr = 0.5 * (v_sorted[cut[k]] + v_sorted[cut[k] + 1])
            best = (f, float(thr))
    if best is None:
        return None
    return best


def fit_tree(X: np.ndarray, y: np.ndarray, w: np.ndarray, max_depth: int) -> DecisionTree:
    """Weighted binary CART fit; y in {0, 1}, leaf values in {-1, +1}.

    Leaves predict the weighted majority class (ties go to class 0 / -1).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y)
    w = np.asarray(w, dtype=np.float64)
    wp = np.where(y == 1, w, 0.0)
    wn = np.where(y == 1, 0.0, w)

    feature, threshold, left, right, value = [], [], [], [], []

    def add_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    def build(idx: np.ndarray, depth: int) -> int:
        node = add_node()
        p, q = wp[idx].sum(), wn[idx].sum()
        if depth >= max_depth or p == 0.0 or q == 0.0:
            value[node] = 1.0 if p > q else -1.0
            return node
        split = _best_split(X, wp, wn, idx)
        if split is None:
            value[node] = 1.0 if p > q else -1.0
            return node
        f, thr = split
        feature[node] = f
        threshold[node] = thr
        mask = X[idx, f] <= thr
        left[node] = build(idx[mask], depth + 1)
        right[node] = build(idx[~mask], depth + 1)
        return node

    build(np.arange(X.shape[0]), 0)
    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
    )


def _fit_deduplicated(X: np.ndarray, y: np.ndarray, w: np.ndarray, max_depth: int):
    """Fit a tree after aggregating identical feature rows.

    Rows with equal features are merged into one pseudo-sample per class
    with summed weights; every node's weighted class sums -- hence every
    split decision -- are unchanged.  Returns the tree and its predictions
    on the original rows.
    """
    uniq, inverse = np.unique(X, axis=0, return_inverse=True)
    if uniq.shape[0] == X.shape[0]:
        tree = fit_tree(X, y, w, max_depth)
        return tree, tree.predict(X)
    wp = np.bincount(inverse, weights=np.where(y == 1, w, 0.0), minlength=uniq.shape[0])
    wn = np.bincount(inverse, weights=np.where(y == 1, 0.0, w), minlength=uniq.shape[0])
    pseudo_X = np.vstack([uniq, uniq])
    pseudo_y = np.concatenate([np.ones(uniq.shape[0], dtype=np.int64), np.zeros(uniq.shape[0], dtype=np.int64)])
    pseudo_w = np.concatenate([wp, wn])
    tree = fit_tree(pseudo_X, pseudo_y, pseudo_w, max_depth)
    return tree, tree.predict(uniq)[inverse]


def _bit_reverse(codes: np.ndarray, n_bits: int) -> np.ndarray:
    out = np.zeros_like(codes)
    for k in range(n_bits):
        out |= ((codes >> k) & 1) << (n_bits - 1 - k)
    return out


def _fit_binary_complete(X: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Direct fit for all-binary features that fit within the depth budget.

    When every feature is 0/1 and there are at most max_depth of them, the
    greedy fit (which splits impure nodes even at zero gain) always descends
    to feature-identical groups, so the fitted function is the per-group
    weighted majority.  This builds that same function as a complete tree
    splitting feature k at depth k, skipping the recursion entirely; on the
    training support the two constructions classify identically.
    """
    n_feat = X.shape[1]
    codes = X.astype(np.int64) @ (1 << np.arange(n_feat))
    n_groups = 2**n_feat
    wp = np.bincount(codes, weights=np.where(y == 1, w, 0.0), minlength=n_groups)
    wn = np.bincount(codes, weights=np.where(y == 1, 0.0, w), minlength=n_groups)
    majority = np.where(wp > wn, 1.0, -1.0)

    total = 2 * n_groups - 1
    feature = np.full(total, -1, dtype=np.int64)
    threshold = np.zeros(total)
    left = np.full(total, -1, dtype=np.int64)
    right = np.full(total, -1, dtype=np.int64)
    value = np.zeros(total)
    for depth in range(n_feat):
        idx = np.arange(2**depth - 1, 2 ** (depth + 1) - 1)
        feature[idx] = depth
        threshold[idx] = 0.5
        left[idx] = 2 * idx + 1
        right[idx] = 2 * idx + 2
    # leaf heap position encodes the root-to-leaf choices most-significant-first
    value[n_groups - 1 + _bit_reverse(np.arange(n_groups), n_feat)] = majority
    tree = DecisionTree(
        feature=feature, threshold=threshold, left=left, right=right, value=value
    )
    return tree, majority[codes]


def _fit_weak(X: np.ndarray, y: np.ndarray, w: np.ndarray, max_depth: int):
    if X.shape[1] <= max_depth and ((X == 0.0) | (X == 1.0)).all():
        return _fit_binary_complete(X, y, w)
    return _fit_deduplicated(X, y, w, max_depth)


@dataclass
class BoostState:
    """Mutable training state threaded through boosting rounds."""

    X_t: np.ndarray
    X_v: np.ndarray
    y_sign: np.ndarray  # labels mapped to {-1, +1}
    weights: np.ndarray
    max_depth: int
    stages: list = field(default_factory=list)  # (tree, alpha, side)
    scores: np.ndarray | None = None
    stop_reason: str | None = None

    def __post_init__(self):
        if self.scores is None:
            self.scores = np.zeros(self.y_sign.shape[0])


def init_boost_state(X_t: np.ndarray, X_v: np.ndarray, y: np.ndarray, max_depth: int = 15) -> BoostState:
    y = np.asarray(y)
    if np.all(y == y[0]):
        raise InputError("constant labels: boosting needs both classes present")
    if set(np.unique(y)) - {0, 1}:
        raise InputError("boosting labels must be binary 0/1")
    n = y.shape[0]
    return BoostState(
        X_t=np.atleast_2d(np.asarray(X_t, dtype=np.float64)),
        X_v=np.atleast_2d(np.asarray(X_v, dtype=np.float64)),
        y_sign=np.where(y == 1, 1.0, -1.0),
        weights=np.full(n, 1.0 / n),
        max_depth=max_depth,
    )


def _apply_stage(state: BoostState, tree: DecisionTree, h: np.ndarray, err: float, side: str) -> None:
    alpha = 0.5 * np.log((1.0 - err + _ALPHA_EPS) / (err + _ALPHA_EPS))
    state.stages.append((tree, float(alpha), side))
    state.scores = state.scores + alpha * h
    state.weights = state.weights * np.exp(-alpha * state.y_sign * h)
    state.weights = state.weights / state.weights.sum()
    if not np.any(np.sign(state.scores) != state.y_sign):
        state.stop_reason = "perfect_fit"


def _weighted_error(state: BoostState, h: np.ndarray) -> float:
    return float(state.weights[h != state.y_sign].sum())


def full_boost_round(state: BoostState) -> BoostState:
    """One unrestricted round: the tree sees both modalities concatenated."""
    if state.stop_reason is not None:
        return state
    X = np.hstack([state.X_t, state.X_v])
    y01 = (state.y_sign > 0).astype(np.int64)
    tree, h = _fit_weak(X, y01, state.weights, state.max_depth)
    err = _weighted_error(state, h)
    # majority leaves guarantee err <= 0.5, so "at chance" means err ~ 0.5
    if err >= 0.5 - _CHANCE_TOL:
        state.stop_reason = "no_weak_learner"
        return state
    _apply_stage(state, tree, h, err, "full")
    return state


def unimodal_restricted_boost_round(state: BoostState) -> BoostState:
    """One restricted round: per-modality candidate trees, keep the better.

    Fits one tree on text features alone and one on visual features alone,
    keeps whichever has lower weighted error (ties go to the text side) and
    applies the usual stage-weight update.  When both candidates are at
    chance, boosting terminates with ``stop_reason = "no_weak_learner"``.
    """
    if state.stop_reason is not None:
        return state
    y01 = (state.y_sign > 0).astype(np.int64)
    tree_t, h_t = _fit_weak(state.X_t, y01, state.weights, state.max_depth)
    tree_v, h_v = _fit_weak(state.X_v, y01, state.weights, state.max_depth)
    err_t = _weighted_error(state, h_t)
    err_v = _weighted_error(state, h_v)
    if min(err_t, err_v) >= 0.5 - _CHANCE_TOL:
        state.stop_reason = "no_weak_learner"
        return state
    if err_t <= err_v:
        _apply_stage(state, tree_t, h_t, err_t, "text")
    else:
        _apply_stage(state, tree_v, h_v, err_v, "visual")
    return state


@dataclass(frozen=True, eq=False)
class AdaBoostModel:
    """Staged binary classifier; logits are per-class stage-weight sums."""

    stages: tuple  # (DecisionTree, alpha, side)
    restriction: str
    d1: int
    d2: int
    rounds_run: int = 0
    stop_reason: str | None = None
    config: dict = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return 2

    def decision_scores(self, T: np.ndarray, V: np.ndarray) -> np.ndarray:
        """Signed staged score sum(alpha * h) per item."""
        T, V = np.atleast_2d(T), np.atleast_2d(V)
        if T.shape[1] != self.d1 or V.shape[1] != self.d2:
            raise InputError(
                f"feature dims ({T.shape[1]}, {V.shape[1]}) do not match model "
                f"({self.d1}, {self.d2})"
            )
        scores = np.zeros(T.shape[0])
        full = np.hstack([T, V])
        for tree, alpha, side in self.stages:
            X = {"full": full, "text": T, "visual": V}[side]
            scores += alpha * tree.predict(X)
        return scores

    def logits(self, t: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.logits_many(np.atleast_2d(t), np.atleast_2d(v))[0]

    def logits_many(self, T: np.ndarray, V: np.ndarray) -> np.ndarray:
        T, V = np.atleast_2d(T), np.atleast_2d(V)
        full = np.hstack([T, V])
        per_class = np.zeros((T.shape[0], 2))
        for tree, alpha, side in self.stages:
            X = {"full": full, "text": T, "visual": V}[side]
            h = tree.predict(X)
            per_class[:, 1] += alpha * (h > 0)
            per_class[:, 0] += alpha * (h < 0)
        return per_class

    def to_json_dict(self) -> dict:
        return {
            "kind": "adaboost",
            "restriction": self.restriction,
            "d1": self.d1,
            "d2": self.d2,
            "rounds_run": self.rounds_run,
            "stop_reason": self.stop_reason,
            "stages": [
                {"tree": tree.to_json_dict(), "alpha": alpha, "side": side}
                for tree, alpha, side in self.stages
            ],
            "config": dict(self.config),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "AdaBoostModel":
        stages = tuple(
            (DecisionTree.from_json_dict(s["tree"]), float(s["alpha"]), s["side"])
            for s in payload["stages"]
        )
        return cls(
            stages=stages,
            restriction=payload["restriction"],
            d1=int(payload["d1"]),
            d2=int(payload["d2"]),
            rounds_run=int(payload.get("rounds_run", len(stages))),
            stop_reason=payload.get("stop_reason"),
            config=dict(payload.get("config", {})),
        )


def train_adaboost(data: PairedDataset, cfg: AdaBoostConfig | None = None) -> AdaBoostModel:
    """Boost on the train split until perfect fit, stall, or stage budget."""
    cfg = cfg or AdaBoostConfig()
    if data.num_classes != 2:
        raise InputError("adaboost is binary; dataset has more than two classes")
    if cfg.restriction not in ("full", "unimodal"):
        raise InputError(f"unknown restriction {cfg.restriction!r}")
    train = data.subset("train")
    state = init_boost_state(train.text, train.visual, train.labels, cfg.max_depth)
    step = full_boost_round if cfg.restriction == "full" else unimodal_restricted_boost_round
    rounds = 0
    for _ in range(cfg.n_stages):
        step(state)
        rounds += 1
        if state.stop_reason is not None:
            break
    return AdaBoostModel(
        stages=tuple(state.stages),
        restriction=cfg.restriction,
        d1=train.d1,
        d2=train.d2,
        rounds_run=rounds,
        stop_reason=state.stop_reason or "stage_budget",
        config={**asdict(cfg), "kind": "adaboost"},
    )
