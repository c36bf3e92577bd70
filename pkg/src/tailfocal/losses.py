"""Classification losses for long-tailed label distributions.

Seven single-label losses behind one interface: plain cross entropy (ce),
count-weighted cross entropy (wce), focal loss (fl), class-balanced loss via
effective numbers (cb), balanced softmax (bs), label-distribution-aware
margins (ldam), and the tail-aware focal loss (tfl) that adds an extra
cross-entropy term on tail classes only:

    tfl(p_y) = -(1 - p_y)^gamma * ln(p_y) - beta * ln(p_y)   [tail classes]
    tfl(p_y) = fl(p_y)                                        [head classes]

ce/wce/fl/cb/tfl are functions of the true-class probability; bs and ldam
act on logits directly (both reduce to cross entropy over count-adjusted
logits). Every evaluator reports three things: the loss value, the
derivative with respect to the true-class probability, and the full
gradient with respect to the logits (through the softmax for the
probability-form losses).

All logs are natural. The true-class probability is clamped to
[1e-12, 1 - 1e-12] in both the value and the derivative, so finite
difference checks on the logits stay consistent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .imbalance import ClassStats, TailPartition

__all__ = [
    "LOSS_KINDS",
    "LossEval",
    "LossSpec",
    "softmax",
    "ce_loss",
    "wce_loss",
    "focal_loss",
    "cb_loss",
    "bs_loss",
    "ldam_loss",
    "tfl_loss",
    "loss_on_logits",
    "batch_loss",
]

LOSS_KINDS = ("ce", "wce", "fl", "cb", "bs", "ldam", "tfl")

_P_LO = 1e-12
_P_HI = 1.0 - 1e-12


@dataclass(frozen=True)
class LossEval:
    """One loss evaluation: scalar value, d(loss)/d(P_y), d(loss)/d(logits).

    For bs/ldam, grad_p is taken with respect to the loss's own adjusted
    true-class probability (the softmax of the count-shifted logits), since
    that is the probability whose negative log the loss is.
    """

    value: float
    grad_p: float
    grad_z: np.ndarray


@dataclass(frozen=True)
class LossSpec:
    """Which loss to run and with what hyperparameters.

    Fields irrelevant to `kind` are ignored. wce/cb/bs/ldam need `stats`;
    tfl needs `tail` (and uses gamma and beta).
    """

    kind: str
    gamma: float = 2.0
    beta: float = 2.0
    lam: float = 0.999
    margin_c: float = 0.5
    stats: ClassStats | None = None
    tail: TailPartition | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in LOSS_KINDS:
            raise ConfigError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind in ("fl", "tfl") and self.gamma < 0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if kind == "tfl" and self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if kind == "cb" and not 0.0 < self.lam < 1.0:
            raise ConfigError(f"lam must be in (0, 1), got {self.lam}")
        if kind == "ldam" and not 0.0 < self.margin_c <= 1.0:
            raise ConfigError(f"margin_c must be in (0, 1], got {self.margin_c}")
        if kind in ("wce", "cb", "bs", "ldam") and self.stats is None:
            raise ConfigError(f"loss {kind!r} needs class statistics")
        if kind == "tfl" and self.tail is None:
            raise ConfigError("loss 'tfl' needs a tail partition")


def softmax(z) -> np.ndarray:
    """Numerically stable softmax of a 1-D logit vector."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ConfigError("logits must be a non-empty 1-D vector")
    if not np.all(np.isfinite(z)):
        raise ConfigError("logits contain non-finite values")
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


# ---------------------------------------------------------------------------
# value / dL-dP cores, shared by the scalar API and the vectorized batch path.
# Each takes the clamped true-class probability as an array and returns
# (value, grad_p) arrays of the same shape.


def _ce_terms(pc):
    return -np.log(pc), -1.0 / pc


def _focal_terms(pc, gamma):
    # two-term form of the derivative; at gamma = 0 the first term is
    # exactly zero and the second is exactly -1/p, so fl(gamma=0) == ce
    # holds bit for bit.
    one_m = 1.0 - pc
    log_p = np.log(pc)
    value = -(one_m**gamma) * log_p
    grad = gamma * one_m ** (gamma - 1.0) * log_p - one_m**gamma / pc
    return value, grad


def _tfl_terms(pc, gamma, beta, tail_flag):
    value, grad = _focal_terms(pc, gamma)
    boost = np.asarray(tail_flag, dtype=float) * beta
    value = value - boost * np.log(pc)
    grad = grad - boost / pc
    return value, grad


def _clamp(py):
    return np.clip(py, _P_LO, _P_HI)


def _check_prob_vector(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ConfigError("p must be a non-empty 1-D probability vector")
    if not np.all(np.isfinite(p)):
        raise ConfigError("p contains non-finite values")
    if np.any(p < -1e-9) or abs(p.sum() - 1.0) > 1e-6:
        raise ConfigError("p is not a probability distribution")
    return p


def _check_label(y, n: int) -> int:
    y = int(y)
    if not 0 <= y < n:
        raise IndexError(f"label {y} out of range for {n} classes")
    return y


def _through_softmax(p: np.ndarray, y: int, grad_p: float) -> np.ndarray:
    # chain rule through the softmax jacobian row for P_y:
    # dP_y/dz_j = P_y * (delta_yj - p_j)
    gz = grad_p * p[y] * (-p)
    gz[y] += grad_p * p[y]
    return gz


def _eval_p_form(p, y, terms) -> LossEval:
    p = _check_prob_vector(p)
    y = _check_label(y, p.size)
    pc = _clamp(p[y])
    value, grad_p = terms(np.asarray(pc))
    return LossEval(
        value=float(value),
        grad_p=float(grad_p),
        grad_z=_through_softmax(p, y, float(grad_p)),
    )


# ---------------------------------------------------------------------------
# scalar API


def ce_loss(p, y) -> LossEval:
    """Cross entropy -ln(P_y). grad_z comes out as p - onehot(y)."""
    return _eval_p_form(p, y, _ce_terms)


def wce_loss(p, y, stats: ClassStats) -> LossEval:
    """Cross entropy weighted by inverse class frequency, total / n_y."""
    p = _check_prob_vector(p)
    y = _check_label(y, p.size)
    if stats.n_classes != p.size:
        raise ConfigError(f"stats cover {stats.n_classes} classes, p has {p.size}")
    w = stats.total / stats.counts[y]
    return _eval_p_form(p, y, lambda pc: tuple(w * t for t in _ce_terms(pc)))


def focal_loss(p, y, gamma: float = 2.0) -> LossEval:
    """Focal loss -(1 - P_y)^gamma * ln(P_y)."""
    if gamma < 0:
        raise ConfigError(f"gamma must be >= 0, got {gamma}")
    return _eval_p_form(p, y, lambda pc: _focal_terms(pc, gamma))


def cb_loss(p, y, lam: float, stats: ClassStats) -> LossEval:
    """Class-balanced cross entropy: weight (1 - lam) / (1 - lam^n_y)."""
    if not 0.0 < lam < 1.0:
        raise ConfigError(f"lam must be in (0, 1), got {lam}")
    p = _check_prob_vector(p)
    y = _check_label(y, p.size)
    if stats.n_classes != p.size:
        raise ConfigError(f"stats cover {stats.n_classes} classes, p has {p.size}")
    w = (1.0 - lam) / (1.0 - lam ** int(stats.counts[y]))
    return _eval_p_form(p, y, lambda pc: tuple(w * t for t in _ce_terms(pc)))


def tfl_loss(p, y, gamma: float, beta: float, tail: TailPartition) -> LossEval:
    """Tail-aware focal loss: focal everywhere, plus beta * (-ln P_y) on tail classes."""
    if gamma < 0:
        raise ConfigError(f"gamma must be >= 0, got {gamma}")
    if beta < 0:
        raise ConfigError(f"beta must be >= 0, got {beta}")
    p = _check_prob_vector(p)
    y = _check_label(y, p.size)
    if tail.is_tail.size != p.size:
        raise ConfigError(f"partition covers {tail.is_tail.size} classes, p has {p.size}")
    flag = bool(tail.is_tail[y])
    return _eval_p_form(p, y, lambda pc: _tfl_terms(pc, gamma, beta, flag))


def _adjusted_ce(z, y, shift) -> LossEval:
    # bs and ldam are cross entropy over shifted logits u = z + shift
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or z.size == 0:
        raise ConfigError("logits must be a non-empty 1-D vector")
    if not np.all(np.isfinite(z)):
        raise ConfigError("logits contain non-finite values")
    y = _check_label(y, z.size)
    u = z + shift
    m = u.max()
    log_norm = m + np.log(np.exp(u - m).sum())
    q = np.exp(u - log_norm)
    gz = q.copy()
    gz[y] -= 1.0
    return LossEval(
        value=float(log_norm - u[y]),
        grad_p=float(-1.0 / _clamp(q[y])),
        grad_z=gz,
    )


def bs_loss(z, y, stats: ClassStats) -> LossEval:
    """Balanced softmax: -ln( n_y e^{z_y} / sum_i n_i e^{z_i} )."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 1 and stats.n_classes != z.size:
        raise ConfigError(f"stats cover {stats.n_classes} classes, z has {z.size}")
    return _adjusted_ce(z, y, np.log(stats.counts.astype(float)))


def ldam_loss(z, y, margin_c: float, stats: ClassStats) -> LossEval:
    """Margin loss: cross entropy over z_i - C / n_i^(1/4), applied to all classes."""
    if not 0.0 < margin_c <= 1.0:
        raise ConfigError(f"margin_c must be in (0, 1], got {margin_c}")
    z = np.asarray(z, dtype=float)
    if z.ndim == 1 and stats.n_classes != z.size:
        raise ConfigError(f"stats cover {stats.n_classes} classes, z has {z.size}")
    margins = margin_c / stats.counts.astype(float) ** 0.25
    return _adjusted_ce(z, y, -margins)


def loss_on_logits(spec: LossSpec, z, y) -> LossEval:
    """Evaluate any configured loss on raw logits."""
    if spec.kind == "bs":
        return bs_loss(z, y, spec.stats)
    if spec.kind == "ldam":
        return ldam_loss(z, y, spec.margin_c, spec.stats)
    p = softmax(z)
    if spec.kind == "ce":
        return ce_loss(p, y)
    if spec.kind == "wce":
        return wce_loss(p, y, spec.stats)
    if spec.kind == "fl":
        return focal_loss(p, y, spec.gamma)
    if spec.kind == "cb":
        return cb_loss(p, y, spec.lam, spec.stats)
    return tfl_loss(p, y, spec.gamma, spec.beta, spec.tail)


# ---------------------------------------------------------------------------
# vectorized batch path


def _softmax_rows(Z: np.ndarray) -> np.ndarray:
    shifted = Z - Z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def batch_loss(spec: LossSpec, Z, Y) -> tuple[float, np.ndarray]:
    """Mean loss over a batch of logit rows, plus its gradient.

    Returns (mean value, grad) where grad has Z's shape and already carries
    the 1/B factor, so it can feed a backward pass directly.
    """
    Z = np.asarray(Z, dtype=float)
    Y = np.asarray(Y)
    if Z.ndim != 2 or Z.shape[0] == 0:
        raise ConfigError("Z must be a non-empty (batch, classes) array")
    if Y.shape != (Z.shape[0],):
        raise ConfigError(f"labels shape {Y.shape} does not match batch {Z.shape[0]}")
    if not np.all(np.isfinite(Z)):
        raise ConfigError("logits contain non-finite values")
    Y = Y.astype(np.int64)
    n = Z.shape[1]
    if np.any(Y < 0) or np.any(Y >= n):
        raise ConfigError(f"labels out of range for {n} classes")
    b = Z.shape[0]
    rows = np.arange(b)

    if spec.kind in ("bs", "ldam"):
        if spec.stats.n_classes != n:
            raise ConfigError(f"stats cover {spec.stats.n_classes} classes, Z has {n}")
        if spec.kind == "bs":
            shift = np.log(spec.stats.counts.astype(float))
        else:
            shift = -spec.margin_c / spec.stats.counts.astype(float) ** 0.25
        U = Z + shift
        m = U.max(axis=1, keepdims=True)
        log_norm = m[:, 0] + np.log(np.exp(U - m).sum(axis=1))
        values = log_norm - U[rows, Y]
        G = np.exp(U - log_norm[:, None])
        G[rows, Y] -= 1.0
        return float(values.mean()), G / b

    P = _softmax_rows(Z)
    pc = _clamp(P[rows, Y])
    if spec.kind == "ce":
        values, gp = _ce_terms(pc)
    elif spec.kind == "wce":
        if spec.stats.n_classes != n:
            raise ConfigError(f"stats cover {spec.stats.n_classes} classes, Z has {n}")
        w = spec.stats.total / spec.stats.counts[Y]
        values, gp = (w * t for t in _ce_terms(pc))
    elif spec.kind == "fl":
        values, gp = _focal_terms(pc, spec.gamma)
    elif spec.kind == "cb":
        if spec.stats.n_classes != n:
            raise ConfigError(f"stats cover {spec.stats.n_classes} classes, Z has {n}")
        w = (1.0 - spec.lam) / (1.0 - spec.lam ** spec.stats.counts[Y].astype(float))
        values, gp = (w * t for t in _ce_terms(pc))
    else:
        if spec.tail.is_tail.size != n:
            raise ConfigError(f"partition covers {spec.tail.is_tail.size} classes, Z has {n}")
        values, gp = _tfl_terms(pc, spec.gamma, spec.beta, spec.tail.is_tail[Y])

    # chain through softmax: dL/dz_j = gp * P_y * (delta - p_j)
    coef = gp * P[rows, Y]
    G = -coef[:, None] * P
    G[rows, Y] += coef
    return float(values.mean()), G / b
