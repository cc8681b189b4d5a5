"""Online linear learners.

Two families share the WeightVector state but follow different driver
protocols. The margin-driven family (pa1, pac, fsol) updates only when the
hinge loss is positive; the driver calls update() with the precomputed loss.
The stepwise family (sgdm, adagrad, tgd) advances state on every example;
the driver calls step() with the precomputed margin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from wrsol import _kernels
from wrsol.sparse import SparseVector, WeightVector, dot, sq_norm

ADAGRAD_EPS = 1e-8


@dataclass(frozen=True)
class Hyperparams:
    """One bag of knobs; each learner reads only the fields it uses."""

    c_err: float = 1.0
    eta: float = 1.0
    lam: float = 0.01
    rate: float = 0.1
    momentum: float = 0.9
    gravity: float = 1e-4
    period: int = 10


class _Learner:
    pa_family = False

    def __init__(self):
        self.w = WeightVector(0)

    def predict_margin(self, x: SparseVector) -> float:
        return dot(self.w, x)


class PA1Learner(_Learner):
    """Additive update with step size capped at the slack penalty."""

    pa_family = True

    def __init__(self, c_err: float):
        if c_err <= 0:
            raise ValueError("c_err must be positive")
        super().__init__()
        self.c_err = float(c_err)

    def update(self, x: SparseVector, y: int, loss: float) -> None:
        if loss <= 0.0:
            return
        sq = sq_norm(x)
        if sq == 0.0:
            return
        tau = min(self.c_err, loss / sq)
        if x.nnz:
            self.w.ensure_dim(x.max_index + 1)
            _kernels.axpy(self.w.data, tau * y, x.indices, x.values)


class PA2Learner(_Learner):
    """Additive update with quadratically penalized slack.

    Step size is loss / (|x|^2 + 1 / (2 c_err)), so the denominator stays
    positive even for an all-zero example.
    """

    pa_family = True

    def __init__(self, c_err: float):
        if c_err <= 0:
            raise ValueError("c_err must be positive")
        super().__init__()
        self.c_err = float(c_err)

    def update(self, x: SparseVector, y: int, loss: float) -> None:
        if loss <= 0.0:
            return
        tau = loss / (sq_norm(x) + 1.0 / (2.0 * self.c_err))
        if x.nnz:
            self.w.ensure_dim(x.max_index + 1)
            _kernels.axpy(self.w.data, tau * y, x.indices, x.values)


class FSOLLearner(_Learner):
    """First-order sparse online learner.

    Keeps a dense accumulator theta; after each aggressive step the touched
    coordinates of w are recomputed as sign(theta) * max(|theta| - eta*lam, 0).
    Untouched coordinates already satisfy that identity, so it holds globally.
    """

    pa_family = True

    def __init__(self, eta: float, lam: float):
        if eta <= 0:
            raise ValueError("eta must be positive")
        if lam < 0:
            raise ValueError("lam must be non-negative")
        super().__init__()
        self.eta = float(eta)
        self.lam = float(lam)
        self.theta = WeightVector(0)

    def update(self, x: SparseVector, y: int, loss: float) -> None:
        if loss <= 0.0 or x.nnz == 0:
            return
        d = x.max_index + 1
        self.theta.ensure_dim(d)
        self.w.ensure_dim(d)
        _kernels.fsol_step(
            self.theta.data,
            self.w.data,
            self.eta * y,
            self.eta * self.lam,
            x.indices,
            x.values,
        )


class SGDMomentumLearner(_Learner):
    """Hinge subgradient descent with heavy-ball momentum.

    The velocity decays every step, gradient or not, so state advances even
    on correctly classified examples.
    """

    def __init__(self, rate: float, momentum: float):
        if rate <= 0:
            raise ValueError("rate must be positive")
        if not 0.0 <= momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        super().__init__()
        self.rate = float(rate)
        self.momentum = float(momentum)
        self.v = WeightVector(0)

    def step(self, x: SparseVector, y: int, margin: float) -> None:
        active = 1.0 - y * margin > 0.0 and x.nnz > 0
        if active:
            self.v.ensure_dim(x.max_index + 1)
        if self.v.dim:
            vd = self.v.data
            vd *= self.momentum
        if active:
            _kernels.axpy(self.v.data, self.rate * y, x.indices, x.values)
        if self.v.dim:
            self.w.ensure_dim(self.v.dim)
            self.w.data[: self.v.dim] += self.v.data


class AdaGradLearner(_Learner):
    """Per-coordinate adaptive subgradient steps on the hinge loss."""

    def __init__(self, rate: float):
        if rate <= 0:
            raise ValueError("rate must be positive")
        super().__init__()
        self.rate = float(rate)
        self.g2 = WeightVector(0)

    def step(self, x: SparseVector, y: int, margin: float) -> None:
        if 1.0 - y * margin <= 0.0 or x.nnz == 0:
            return
        d = x.max_index + 1
        self.g2.ensure_dim(d)
        self.w.ensure_dim(d)
        g = y * x.values
        acc = self.g2.data
        acc[x.indices] += g * g
        self.w.data[x.indices] += self.rate * g / np.sqrt(
            acc[x.indices] + ADAGRAD_EPS
        )


class TruncatedGradientLearner(_Learner):
    """SGD on the hinge loss with periodic shrink-toward-zero truncation."""

    def __init__(self, rate: float, gravity: float, period: int):
        if rate <= 0:
            raise ValueError("rate must be positive")
        if gravity < 0:
            raise ValueError("gravity must be non-negative")
        if period < 1:
            raise ValueError("period must be a positive integer")
        super().__init__()
        self.rate = float(rate)
        self.gravity = float(gravity)
        self.period = int(period)
        self.steps = 0

    def step(self, x: SparseVector, y: int, margin: float) -> None:
        self.steps += 1
        if 1.0 - y * margin > 0.0 and x.nnz:
            self.w.ensure_dim(x.max_index + 1)
            _kernels.axpy(self.w.data, self.rate * y, x.indices, x.values)
        shrink = self.rate * self.gravity
        if shrink > 0.0 and self.steps % self.period == 0 and self.w.dim:
            d = self.w.data
            np.multiply(
                np.sign(d), np.maximum(np.abs(d) - shrink, 0.0), out=d
            )


PA_FAMILY = ("pa1", "pac", "fsol")
STEPWISE = ("sgdm", "adagrad", "tgd")
ALGORITHMS = PA_FAMILY + STEPWISE


def make_learner(algo: str, hp: Hyperparams) -> _Learner:
    if algo == "pa1":
        return PA1Learner(hp.c_err)
    if algo == "pac":
        return PA2Learner(hp.c_err)
    if algo == "fsol":
        return FSOLLearner(hp.eta, hp.lam)
    if algo == "sgdm":
        return SGDMomentumLearner(hp.rate, hp.momentum)
    if algo == "adagrad":
        return AdaGradLearner(hp.rate)
    if algo == "tgd":
        return TruncatedGradientLearner(hp.rate, hp.gravity, hp.period)
    raise ValueError("unknown algorithm %r" % algo)
