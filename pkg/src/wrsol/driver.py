"""Training loops and checkpoint evaluation.

One engine runs all configurations. Margin-driven learners offer the current
weight vector to the ensembler right before every aggressive update, tagged
with how many consecutive examples that vector survived. Stepwise learners
offer right before every misclassified example, with survival counted as
consecutive sign-correct predictions. Ensembles are materialized lazily at
checkpoints only; when the ensembler holds nothing yet, checkpoint metrics
fall back to the base learner's, exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from wrsol.ensemble import (
    ExponentialAverageEnsemble,
    MovingAverageEnsemble,
    TopKSurvivalTracker,
    simple_average,
    voting_zero,
    weighted_average,
)
from wrsol.learners import ALGORITHMS, PA_FAMILY, Hyperparams, make_learner
from wrsol.metrics import AccuracyCurve, TestSetEvaluator, sparsity
from wrsol.reservoir import SCHEMES, Reservoir
from wrsol.sparse import Example

ENSEMBLE_TAGS = ("wrs", "topk", "movavg", "expavg")
AVERAGING_MODES = ("simple", "weighted")


def checkpoint_schedule(n_train: int, target: int) -> list[int]:
    """Evenly strided checkpoint timesteps: always starts at 0, ends at n_train."""
    if n_train < 1:
        raise ValueError("n_train must be positive")
    if target < 1:
        raise ValueError("target must be positive")
    stride = max(1, n_train // target)
    ts = list(range(0, n_train, stride))
    ts.append(n_train)
    return ts


@dataclass(frozen=True)
class RunConfig:
    """Everything one training run depends on."""

    algo: str = "pac"
    hp: Hyperparams = field(default_factory=Hyperparams)
    seed: int = 1
    ensemble: str | None = "wrs"
    reservoir_k: int = 64
    weighting: str = "standard"
    averaging: str = "simple"
    voting_zero: bool = False
    window: int = 64
    gamma: float = 0.9
    checkpoint_target: int = 200
    eval_subsample: int | None = None

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ValueError("unknown algorithm %r" % self.algo)
        if self.ensemble is not None and self.ensemble not in ENSEMBLE_TAGS:
            raise ValueError("unknown ensemble tag %r" % self.ensemble)
        if self.reservoir_k < 1:
            raise ValueError("reservoir_k must be a positive integer")
        if self.weighting not in SCHEMES:
            raise ValueError("unknown weighting scheme %r" % self.weighting)
        if self.averaging not in AVERAGING_MODES:
            raise ValueError("averaging must be 'simple' or 'weighted'")
        if self.voting_zero and self.ensemble != "wrs":
            raise ValueError("voting_zero requires the wrs ensemble")
        if self.window < 1:
            raise ValueError("window must be a positive integer")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.checkpoint_target < 2:
            raise ValueError("checkpoint_target must be at least 2")
        if self.eval_subsample is not None and self.eval_subsample < 1:
            raise ValueError("eval_subsample must be a positive integer")


@dataclass(frozen=True)
class CheckpointRecord:
    timestep: int
    base_acc: float
    base_sparsity: float
    ens_acc: float
    ens_sparsity: float


@dataclass
class RunTrace:
    seed: int
    algo: str
    ensemble: str | None
    dim: int
    n_train: int
    records: list[CheckpointRecord]
    aggressive_steps: int
    offers: int
    inserts: int

    def base_curve(self) -> AccuracyCurve:
        return AccuracyCurve(
            [r.timestep for r in self.records],
            [r.base_acc for r in self.records],
        )

    def ens_curve(self) -> AccuracyCurve:
        return AccuracyCurve(
            [r.timestep for r in self.records],
            [r.ens_acc for r in self.records],
        )

    @property
    def final(self) -> CheckpointRecord:
        return self.records[-1]


class _WrsEnsembler:
    per_step = False

    def __init__(self, config: RunConfig):
        self.reservoir = Reservoir(config.reservoir_k, config.weighting)
        self.rng = np.random.default_rng((config.seed, 1))
        self.averaging = config.averaging
        self.vz = config.voting_zero

    def on_candidate_end(self, w, survival, birth):
        self.reservoir.offer(w, survival, birth, self.rng)

    def on_step(self, w):
        pass

    def build(self):
        if len(self.reservoir) == 0:
            return None
        if self.averaging == "weighted":
            avg = weighted_average(self.reservoir)
        else:
            avg = simple_average(self.reservoir)
        if self.vz:
            avg = voting_zero(avg, self.reservoir)
        return avg


class _TopKEnsembler:
    per_step = False

    def __init__(self, config: RunConfig):
        self.tracker = TopKSurvivalTracker(config.reservoir_k, config.weighting)
        self.averaging = config.averaging

    def on_candidate_end(self, w, survival, birth):
        self.tracker.offer(w, survival, birth)

    def on_step(self, w):
        pass

    def build(self):
        if len(self.tracker) == 0:
            return None
        return self.tracker.average(self.averaging)


class _MovAvgEnsembler:
    per_step = True

    def __init__(self, config: RunConfig):
        self.buf = MovingAverageEnsemble(config.window)

    def on_candidate_end(self, w, survival, birth):
        pass

    def on_step(self, w):
        self.buf.push(w)

    def build(self):
        if len(self.buf) == 0:
            return None
        return self.buf.average()


class _ExpAvgEnsembler:
    per_step = True

    def __init__(self, config: RunConfig):
        self.avg = ExponentialAverageEnsemble(config.gamma)

    def on_candidate_end(self, w, survival, birth):
        pass

    def on_step(self, w):
        self.avg.push(w)

    def build(self):
        if len(self.avg) == 0:
            return None
        return self.avg.average()


_ENSEMBLERS = {
    "wrs": _WrsEnsembler,
    "topk": _TopKEnsembler,
    "movavg": _MovAvgEnsembler,
    "expavg": _ExpAvgEnsembler,
}


def _run_stream(
    config: RunConfig,
    train: list[Example],
    test: list[Example],
    dim: int,
) -> RunTrace:
    if len(train) == 0:
        raise ValueError("empty training stream")
    if len(test) == 0:
        raise ValueError("empty test set")
    touched = max(x.max_index for x, _ in train)
    touched = max(touched, max(x.max_index for x, _ in test))
    if dim < touched + 1:
        raise ValueError("dim %d smaller than max feature index + 1" % dim)

    learner = make_learner(config.algo, config.hp)
    ens = None
    if config.ensemble is not None:
        ens = _ENSEMBLERS[config.ensemble](config)

    eval_set = test
    if config.eval_subsample is not None and config.eval_subsample < len(test):
        pick = np.random.default_rng((config.seed, 2)).choice(
            len(test), size=config.eval_subsample, replace=False
        )
        eval_set = [test[i] for i in np.sort(pick)]
    evaluator = TestSetEvaluator(eval_set)

    schedule = checkpoint_schedule(len(train), config.checkpoint_target)
    records: list[CheckpointRecord] = []

    def record(t: int) -> None:
        base_acc = evaluator.accuracy(learner.w)
        base_sp = sparsity(learner.w, dim)
        combined = ens.build() if ens is not None else None
        if combined is None:
            ens_acc, ens_sp = base_acc, base_sp
        else:
            ens_acc = evaluator.accuracy(combined)
            ens_sp = sparsity(combined, dim)
        records.append(CheckpointRecord(t, base_acc, base_sp, ens_acc, ens_sp))

    record(schedule[0])
    cp = 1
    survival = 0
    aggressive = 0
    pa = learner.pa_family
    per_step = ens is not None and ens.per_step

    for t, (x, y) in enumerate(train, 1):
        margin = learner.predict_margin(x)
        if pa:
            loss = 1.0 - y * margin
            if loss > 0.0:
                aggressive += 1
                if ens is not None:
                    ens.on_candidate_end(learner.w, survival, t)
                learner.update(x, y, loss=loss)
                survival = 0
            else:
                survival += 1
        else:
            correct = y * margin > 0.0
            if not correct:
                aggressive += 1
                if ens is not None:
                    ens.on_candidate_end(learner.w, survival, t)
            learner.step(x, y, margin=margin)
            survival = survival + 1 if correct else 0
        if per_step:
            ens.on_step(learner.w)
        if t == schedule[cp]:
            record(t)
            cp += 1

    offers = inserts = 0
    if isinstance(ens, _WrsEnsembler):
        offers = ens.reservoir.total_offers
        inserts = ens.reservoir.total_inserts
    return RunTrace(
        seed=config.seed,
        algo=config.algo,
        ensemble=config.ensemble,
        dim=dim,
        n_train=len(train),
        records=records,
        aggressive_steps=aggressive,
        offers=offers,
        inserts=inserts,
    )


def run_wat(
    config: RunConfig, train: list[Example], test: list[Example], dim: int
) -> RunTrace:
    """Reservoir-stabilized run for the margin-driven learner family."""
    if config.algo not in PA_FAMILY:
        raise ValueError("run_wat requires a margin-driven learner, got %r" % config.algo)
    if config.ensemble != "wrs":
        raise ValueError("run_wat requires the wrs ensemble")
    return _run_stream(config, train, test, dim)


def run_wat_pseudo_passive(
    config: RunConfig, train: list[Example], test: list[Example], dim: int
) -> RunTrace:
    """Reservoir-stabilized run for stepwise learners.

    Survival counts sign-correct predictions; each misclassified example
    terminates the current candidate, which is offered before the update.
    """
    if config.algo in PA_FAMILY:
        raise ValueError(
            "run_wat_pseudo_passive requires a stepwise learner, got %r" % config.algo
        )
    if config.ensemble != "wrs":
        raise ValueError("run_wat_pseudo_passive requires the wrs ensemble")
    return _run_stream(config, train, test, dim)


def run_baseline(
    config: RunConfig, train: list[Example], test: list[Example], dim: int
) -> RunTrace:
    """Base learner alone, or with a non-reservoir ensembler (topk/movavg/expavg)."""
    if config.ensemble == "wrs":
        raise ValueError("run_baseline does not take the wrs ensemble")
    return _run_stream(config, train, test, dim)


def run_trial(
    config: RunConfig, train: list[Example], test: list[Example], dim: int
) -> RunTrace:
    """Route a config to the matching run function."""
    if config.ensemble == "wrs":
        if config.algo in PA_FAMILY:
            return run_wat(config, train, test, dim)
        return run_wat_pseudo_passive(config, train, test, dim)
    return run_baseline(config, train, test, dim)
