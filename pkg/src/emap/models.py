"""Desk-scale reference models spanning the additive/interactive divide.

The linear model is additive by construction: its logits split into a
text-only part plus a visual-only part, so its cross-pairing grid is an
exact fixed point of the additive projection.  The two interactive families
can represent multiplicative cross-modal structure: an explicit degree-2
cross-term expansion with logistic loss, and a feed-forward network over
projected features ``[t'; v'; v' - t'; v' * t']``.

All training is full-batch and deterministic given the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict, field

import numpy as np
from scipy.special import erf

from .data import PairedDataset
from .exceptions import InputError, TrainingError

__all__ = [
    "LinearConfig",
    "Poly2Config",
    "FeedForwardConfig",
    "LinearModel",
    "Poly2Model",
    "FeedForwardModel",
    "train_linear",
    "train_interactive",
    "predict",
]


@dataclass(frozen=True)
class LinearConfig:
    l2: float = 1e-4
    lr: float = 1.0
    epochs: int = 300
    seed: int = 0


@dataclass(frozen=True)
class Poly2Config:
    l2: float = 1e-4
    lr: float = 1.0
    epochs: int = 400
    seed: int = 0
    max_features: int = 200_000


@dataclass(frozen=True)
class FeedForwardConfig:
    proj_width: int = 64
    hidden: tuple[int, ...] = (128, 128)
    activation: str = "relu"
    lr: float = 1e-2
    momentum: float = 0.9
    epochs: int = 500
    l2: float = 0.0
    plateau_patience: int = 25
    plateau_rtol: float = 1e-4
    seed: int = 0


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    picked = probs[np.arange(labels.shape[0]), labels]
    return -float(np.mean(np.log(np.maximum(picked, 1e-300))))


def _fit_softmax_descent(
    features: np.ndarray,
    labels: np.ndarray,
    num_classes: int,
    l2: float,
    lr: float,
    epochs: int,
):
    """Full-batch multinomial logistic regression with step halving.

    A step is committed only if it does not increase the regularized loss,
    so the committed loss sequence is non-increasing; on an increase the
    learning rate is halved and the step retried.  Starts from zero weights,
    which makes the result deterministic without any RNG.  Returns the
    weights, bias and the per-epoch loss history.
    """
    n, p = features.shape
    w = np.zeros((p, num_classes))
    b = np.zeros(num_classes)

    def loss_of(w_, b_):
        probs = _softmax(features @ w_ + b_)
        return _cross_entropy(probs, labels) + 0.5 * l2 * float(np.sum(w_ * w_)), probs

    loss, probs = loss_of(w, b)
    history = [loss]
    step = lr
    for _ in range(epochs):
        grad_logits = probs
        grad_logits[np.arange(n), labels] -= 1.0
        grad_logits /= n
        g_w = features.T @ grad_logits + l2 * w
        g_b = grad_logits.sum(axis=0)
        committed = False
        while step > 1e-16:
            w_new = w - step * g_w
            b_new = b - step * g_b
            new_loss, new_probs = loss_of(w_new, b_new)
            if not np.isfinite(new_loss):
                raise TrainingError("logistic training diverged to a non-finite loss")
            if new_loss <= loss + 1e-12:
                w, b, loss, probs = w_new, b_new, new_loss, new_probs
                history.append(loss)
                committed = True
                break
            step *= 0.5
        if not committed:
            break
    return w, b, history


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Additive scorer ``logits = w_t' t + (w_v' v + b)``."""

    w_t: np.ndarray
    w_v: np.ndarray
    b: np.ndarray
    config: dict = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return self.b.shape[0]

    def logits(self, t: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.logits_many(np.atleast_2d(t), np.atleast_2d(v))[0]

    def logits_many(self, T: np.ndarray, V: np.ndarray) -> np.ndarray:
        T, V = np.atleast_2d(T), np.atleast_2d(V)
        if T.shape[1] != self.w_t.shape[0] or V.shape[1] != self.w_v.shape[0]:
            raise InputError(
                f"feature dims ({T.shape[1]}, {V.shape[1]}) do not match model "
                f"({self.w_t.shape[0]}, {self.w_v.shape[0]})"
            )
        return T @ self.w_t + V @ self.w_v + self.b

    def logits_grid(self, T: np.ndarray, V: np.ndarray) -> np.ndarray:
        # additive structure: the grid is an outer sum of unimodal scores
        t_part = np.atleast_2d(T) @ self.w_t
        v_part = np.atleast_2d(V) @ self.w_v + self.b
        return t_part[:, np.newaxis, :] + v_part[np.newaxis, :, :]

    def to_json_dict(self) -> dict:
        return {
            "kind": "linear",
            "w_t": self.w_t.tolist(),
            "w_v": self.w_v.tolist(),
            "b": self.b.tolist(),
            "config": dict(self.config),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "LinearModel":
        return cls(
            w_t=np.asarray(payload["w_t"], dtype=np.float64),
            w_v=np.asarray(payload["w_v"], dtype=np.float64),
            b=np.asarray(payload["b"], dtype=np.float64),
            config=dict(payload.get("config", {})),
        )


def train_linear(data: PairedDataset, cfg: LinearConfig | None = None) -> LinearModel:
    """Fit the additive linear baseline on the train split."""
    cfg = cfg or LinearConfig()
    train = data.subset("train")
    features = np.hstack([train.text, train.visual])
    w, b, _ = _fit_softmax_descent(
        features, train.labels, data.num_classes, cfg.l2, cfg.lr, cfg.epochs
    )
    return LinearModel(
        w_t=w[: train.d1],
        w_v=w[train.d1 :],
        b=b,
        config={**asdict(cfg), "kind": "linear"},
    )


@dataclass(frozen=True, eq=False)
class Poly2Model:
    """Logistic model over ``[t; v; all pairwise products t_a * v_b]``.

    The cross-term block is an explicit bilinear form, so the model can
    represent multiplicative cross-modal interactions exactly.
    """

    w: np.ndarray
    b: np.ndarray
    d1: int
    d2: int
    config: dict = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return self.b.shape[0]

    @staticmethod
    def expand(T: np.ndarray, V: np.ndarray) -> np.ndarray:
        T, V = np.atleast_2d(T), np.atleast_2d(V)
        cross = np.einsum("na,nb->nab", T, V).reshape(T.shape[0], -1)
        return np.hstack([T, V, cross])

    def _split_weights(self):
        w_t = self.w[: self.d1]
        w_v = self.w[self.d1 : self.d1 + self.d2]
        w_x = self.w[self.d1 + self.d2 :].reshape(self.d1, self.d2, -1)
        return w_t, w_v, w_x

    def logits(self, t: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.logits_many(np.atleast_2d(t), np.atleast_2d(v))[0]

    def logits_many(self, T: np.ndarray, V: np.ndarray) -> np.ndarray:
        T, V = np.atleast_2d(T), np.atleast_2d(V)
        if T.shape[1] != self.d1 or V.shape[1] != self.d2:
            raise InputError(
                f"feature dims ({T.shape[1]}, {V.shape[1]}) do not match model "
                f"({self.d1}, {self.d2})"
            )
        w_t, w_v, w_x = self._split_weights()
        bilinear = np.einsum("na,abc,nb->nc", T, w_x, V)
        return T @ w_t + V @ w_v + bilinear + self.b

    def logits_grid(self, T: np.ndarray, V: np.ndarray) -> np.ndarray:
        T, V = np.atleast_2d(T), np.atleast_2d(V)
        w_t, w_v, w_x = self._split_weights()
        t_part = T @ w_t
        v_part = V @ w_v + self.b
        cross = np.einsum("ta,abc,vb->tvc", T, w_x, V, optimize=True)
        return t_part[:, np.newaxis, :] + v_part[np.newaxis, :, :] + cross

    def to_json_dict(self) -> dict:
        return {
            "kind": "poly2",
            "w": self.w.tolist(),
            "b": self.b.tolist(),
            "d1": self.d1,
            "d2": self.d2,
            "config": dict(self.config),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "Poly2Model":
        return cls(
            w=np.asarray(payload["w"], dtype=np.float64),
            b=np.asarray(payload["b"], dtype=np.float64),
            d1=int(payload["d1"]),
            d2=int(payload["d2"]),
            config=dict(payload.get("config", {})),
        )


def _train_poly2(data: PairedDataset, cfg: Poly2Config) -> Poly2Model:
    train = data.subset("train")
    feature_count = train.d1 + train.d2 + train.d1 * train.d2
    if feature_count > cfg.max_features:
        raise InputError(
            f"degree-2 expansion needs {feature_count} features, over the budget "
            f"of {cfg.max_features}"
        )
    features = Poly2Model.expand(train.text, train.visual)
    w, b, _ = _fit_softmax_descent(
        features, train.labels, data.num_classes, cfg.l2, cfg.lr, cfg.epochs
    )
    return Poly2Model(
        w=w, b=b, d1=train.d1, d2=train.d2, config={**asdict(cfg), "kind": "poly2"}
    )


def _activation(name: str):
    if name == "relu":
        return lambda x: np.maximum(x, 0.0), lambda x, a: (x > 0.0).astype(np.float64)
    if name == "gelu":
        def gelu(x):
            return 0.5 * x * (1.0 + erf(x / np.sqrt(2.0)))

        def gelu_grad(x, a):
            pdf = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
            return 0.5 * (1.0 + erf(x / np.sqrt(2.0))) + x * pdf

        return gelu, gelu_grad
    raise InputError(f"unknown activation {name!r}")


@dataclass(frozen=True, eq=False)
class FeedForwardModel:
    """Network over projected features ``[t'; v'; v' - t'; v' * t']``.

    Both inputs are first mapped by affine layers to a common width, then
    the concatenated comparison features feed a plain multi-layer network.
    The elementwise product channel is what gives the family its capacity
    for multiplicative interactions.
    """

    proj_t: np.ndarray
    proj_t_b: np.ndarray
    proj_v: np.ndarray
    proj_v_b: np.ndarray
    layers: tuple
    activation: str = "relu"
    config: dict = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        return self.layers[-1][1].shape[0]

    def _comparison_features(self, T: np.ndarray, V: np.ndarray) -> np.ndarray:
        tp = T @ self.proj_t + self.proj_t_b
        vp = V @ self.proj_v + self.proj_v_b
        return np.hstack([tp, vp, vp - tp, vp * tp])

    def logits(self, t: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.logits_many(np.atleast_2d(t), np.atleast_2d(v))[0]

    def logits_many(self, T: np.ndarray, V: np.ndarray) -> np.ndarray:
        T, V = np.atleast_2d(T), np.atleast_2d(V)
        if T.shape[1] != self.proj_t.shape[0] or V.shape[1] != self.proj_v.shape[0]:
            raise InputError(
                f"feature dims ({T.shape[1]}, {V.shape[1]}) do not match model "
                f"({self.proj_t.shape[0]}, {self.proj_v.shape[0]})"
            )
        act, _ = _activation(self.activation)
        h = self._comparison_features(T, V)
        for w, b in self.layers[:-1]:
            h = act(h @ w + b)
        w, b = self.layers[-1]
        return h @ w + b

    def to_json_dict(self) -> dict:
        return {
            "kind": "feedforward",
            "proj_t": self.proj_t.tolist(),
            "proj_t_b": self.proj_t_b.tolist(),
            "proj_v": self.proj_v.tolist(),
            "proj_v_b": self.proj_v_b.tolist(),
            "layers": [[w.tolist(), b.tolist()] for w, b in self.layers],
            "activation": self.activation,
            "config": dict(self.config),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "FeedForwardModel":
        layers = tuple(
            (np.asarray(w, dtype=np.float64), np.asarray(b, dtype=np.float64))
            for w, b in payload["layers"]
        )
        return cls(
            proj_t=np.asarray(payload["proj_t"], dtype=np.float64),
            proj_t_b=np.asarray(payload["proj_t_b"], dtype=np.float64),
            proj_v=np.asarray(payload["proj_v"], dtype=np.float64),
            proj_v_b=np.asarray(payload["proj_v_b"], dtype=np.float64),
            layers=layers,
            activation=payload.get("activation", "relu"),
            config=dict(payload.get("config", {})),
        )


def _train_feedforward(data: PairedDataset, cfg: FeedForwardConfig) -> FeedForwardModel:
    train = data.subset("train")
    T, V, y = train.text, train.visual, train.labels
    n, num_classes = T.shape[0], data.num_classes
    h = cfg.proj_width
    act, act_grad = _activation(cfg.activation)
    rng = np.random.default_rng(cfg.seed)

    def init(fan_in, fan_out):
        return rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)

    params = [init(train.d1, h), np.zeros(h), init(train.d2, h), np.zeros(h)]
    widths = [4 * h, *cfg.hidden, num_classes]
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        params.append(init(fan_in, fan_out))
        params.append(np.zeros(fan_out))
    velocity = [np.zeros_like(p) for p in params]

    def forward(ps):
        p_t, b_t, p_v, b_v, *rest = ps
        tp = T @ p_t + b_t
        vp = V @ p_v + b_v
        feats = np.hstack([tp, vp, vp - tp, vp * tp])
        pre, post = [], [feats]
        hcur = feats
        n_layers = len(rest) // 2
        for k in range(n_layers):
            z = hcur @ rest[2 * k] + rest[2 * k + 1]
            pre.append(z)
            hcur = act(z) if k < n_layers - 1 else z
            post.append(hcur)
        return (tp, vp, feats, pre, post)

    def loss_and_grads(ps):
        p_t, b_t, p_v, b_v, *rest = ps
        tp, vp, feats, pre, post = forward(ps)
        probs = _softmax(post[-1])
        loss = _cross_entropy(probs, y)
        if cfg.l2 > 0.0:
            loss += 0.5 * cfg.l2 * sum(float(np.sum(p * p)) for p in ps[::2])

        grads = [None] * len(ps)
        delta = probs
        delta[np.arange(n), y] -= 1.0
        delta /= n
        n_layers = len(rest) // 2
        for k in reversed(range(n_layers)):
            inp = post[k]
            grads[4 + 2 * k] = inp.T @ delta
            grads[4 + 2 * k + 1] = delta.sum(axis=0)
            if k > 0:
                delta = (delta @ rest[2 * k].T) * act_grad(pre[k - 1], post[k])
        d_feats = delta @ rest[0].T
        d_tp = d_feats[:, :h] - d_feats[:, 2 * h : 3 * h] + d_feats[:, 3 * h :] * vp
        d_vp = d_feats[:, h : 2 * h] + d_feats[:, 2 * h : 3 * h] + d_feats[:, 3 * h :] * tp
        grads[0] = T.T @ d_tp
        grads[1] = d_tp.sum(axis=0)
        grads[2] = V.T @ d_vp
        grads[3] = d_vp.sum(axis=0)
        if cfg.l2 > 0.0:
            for i in range(0, len(ps), 2):
                grads[i] = grads[i] + cfg.l2 * ps[i]
        return loss, grads

    lr = cfg.lr
    best_loss = np.inf
    stall = 0
    for _ in range(cfg.epochs):
        loss, grads = loss_and_grads(params)
        if not np.isfinite(loss):
            raise TrainingError("feed-forward training diverged to a non-finite loss")
        if loss < best_loss * (1.0 - cfg.plateau_rtol):
            best_loss = loss
            stall = 0
        else:
            stall += 1
            if stall >= cfg.plateau_patience:
                lr *= 0.5
                stall = 0
        for i, g in enumerate(grads):
            velocity[i] = cfg.momentum * velocity[i] - lr * g
            params[i] = params[i] + velocity[i]

    p_t, b_t, p_v, b_v, *rest = params
    layers = tuple((rest[2 * k], rest[2 * k + 1]) for k in range(len(rest) // 2))
    return FeedForwardModel(
        proj_t=p_t,
        proj_t_b=b_t,
        proj_v=p_v,
        proj_v_b=b_v,
        layers=layers,
        activation=cfg.activation,
        config={**asdict(cfg), "hidden": list(cfg.hidden), "kind": "feedforward"},
    )


def train_interactive(data: PairedDataset, kind: str, cfg=None):
    """Train an interaction-capable model: poly2, feedforward or adaboost."""
    if kind == "poly2":
        return _train_poly2(data, cfg or Poly2Config())
    if kind == "feedforward":
        return _train_feedforward(data, cfg or FeedForwardConfig())
    if kind == "adaboost":
        from .boosting import AdaBoostConfig, train_adaboost

        return train_adaboost(data, cfg or AdaBoostConfig())
    raise InputError(f"unknown interactive model kind {kind!r}")


def predict(model, t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Logits of any trained model for a single (text, visual) pair."""
    return np.asarray(model.logits(np.asarray(t, dtype=np.float64), np.asarray(v, dtype=np.float64)))
