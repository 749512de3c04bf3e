"""Training loop: Adam on the circuit loss, noise diffusion after each step.

The classification head is fixed: p = sigmoid(5 * <Z_0>), trained with
binary cross-entropy.  The scale 5 sharpens the +-1-bounded expectation;
the chain rule folds it into the parameter-shift gradient as
dL/dtheta_k = mean_b 5 * (p_b - y_b) * d<Z_0>_b/dtheta_k.

One optimizer step is one diffusion-schedule step: the schedule is built
for epochs * batches_per_epoch iterations, and when diffusion is enabled
the parameters leaving iteration t are diffuse(adam_update(theta), .) —
update first, noise second, never the reverse.

Instrumentation: the report carries, per iteration, the first-layer slice
of the mini-batch loss gradient, and, at every epoch boundary (including
initialization), per-sample first-layer expectation gradients on a fixed
evaluation batch — the first batch_size rows of the chosen split,
unshuffled.  Pooled variances of the latter are the experiment harness's
trainability metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import (
    CircuitSpec,
    EncodedSample,
    batch_expectations,
    evaluate,
    gradient_batch,
    pad_angles,
    single_z,
)
from .datasets import SplitDataset
from .regularize import (
    DiffusionSchedule,
    InitStrategy,
    PriorStats,
    build_schedule,
    diffuse,
    fit_prior,
    sample_init,
)
from .simcore import ObservableSpec
from .streams import derived_seed, stream

__all__ = [
    "READOUT_SCALE",
    "PROB_CLAMP",
    "DiffusionConfig",
    "TrainConfig",
    "TrainReport",
    "adam_step",
    "train",
    "predict",
    "loss",
]

READOUT_SCALE = 5.0
PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class DiffusionConfig:
    """Diffusion hyperparameters for one training run.

    mode "cumulative" applies Eq.-style gamma_bar[t] (the literal running
    product); "per-step" substitutes gamma[t].  An explicit ``schedule``
    overrides the dr ramp (boundary experiments); it must cover at least
    total_steps entries.
    """

    dr_max: float
    dr_min: float = 1e-4
    mode: str = "cumulative"
    schedule: DiffusionSchedule | None = None

    def __post_init__(self):
        if self.mode not in ("cumulative", "per-step"):
            raise ValueError(f"mode must be cumulative or per-step, got {self.mode!r}")


@dataclass(frozen=True)
class TrainConfig:
    init: InitStrategy
    seed: int
    learning_rate: float = 1e-2
    batch_size: int = 20
    epochs: int = 50
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    diffusion: DiffusionConfig | None = None
    # Instrumentation: observable for the eval-batch gradient record
    # (defaults to the Z_0 readout) and which split provides the batch.
    record_observable: ObservableSpec | None = None
    eval_split: str = "train"
    # Supplies the init stats instead of fitting them from the train split
    # (e.g. a synthetic Uniform(0, 2pi) range).
    prior_override: PriorStats | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("adam betas must lie in [0, 1)")
        if self.adam_eps <= 0:
            raise ValueError("adam_eps must be > 0")
        if self.eval_split not in ("train", "valid", "test"):
            raise ValueError(f"eval_split must be train/valid/test, got {self.eval_split!r}")


@dataclass
class TrainReport:
    """Everything a run produces, enough to re-plot without re-running."""

    train_loss: np.ndarray
    valid_loss: np.ndarray
    train_acc: np.ndarray
    valid_acc: np.ndarray
    test_acc: float
    iteration_grads: np.ndarray  # (total_steps, N*R) mini-batch loss grads, layer 0
    eval_grads: np.ndarray  # (epochs+1, eval_batch, N*R) <H> grads, layer 0
    final_params: np.ndarray
    eval_split: str
    seed: int

    def variance_curve(self) -> np.ndarray:
        """Pooled first-layer gradient variance at each epoch boundary."""
        flat = self.eval_grads.reshape(self.eval_grads.shape[0], -1)
        return flat.var(axis=1)

    def to_jsonable(self) -> dict:
        return {
            "train_loss": self.train_loss.tolist(),
            "valid_loss": self.valid_loss.tolist(),
            "train_acc": self.train_acc.tolist(),
            "valid_acc": self.valid_acc.tolist(),
            "test_acc": self.test_acc,
            "iteration_grads": self.iteration_grads.tolist(),
            "eval_grads": self.eval_grads.tolist(),
            "final_params": self.final_params.tolist(),
            "variance_curve": self.variance_curve().tolist(),
            "eval_split": self.eval_split,
            "seed": self.seed,
        }


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def loss(probability: float | np.ndarray, label: int | np.ndarray) -> float | np.ndarray:
    """Binary cross-entropy, inputs clamped so the result stays finite."""
    p = np.clip(probability, PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.asarray(label, dtype=np.float64)
    out = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    return float(out) if np.isscalar(probability) else out


def predict(circuit: CircuitSpec, params: np.ndarray, sample: EncodedSample) -> float:
    """Class-1 probability sigmoid(5 * <Z_0>) for one sample."""
    value = evaluate(circuit, params, sample, single_z(circuit.n_qubits))
    return float(_sigmoid(READOUT_SCALE * value))


def adam_step(
    params: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    t: int,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
) -> np.ndarray:
    """One bias-corrected Adam update (t is 1-based); m and v in place."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    return params - lr * m_hat / (np.sqrt(v_hat) + eps)


def _split_metrics(circuit, params, angles, labels, readout):
    values = batch_expectations(circuit, params, angles, readout)
    p = _sigmoid(READOUT_SCALE * values)
    losses = loss(p, labels)
    acc = float(np.mean((p >= 0.5).astype(np.int64) == labels))
    return float(np.mean(losses)), acc


def train(circuit: CircuitSpec, data: SplitDataset, config: TrainConfig) -> TrainReport:
    """Run the full loop; bit-identical results for identical config+seed."""
    n = circuit.n_qubits
    train_x, train_y = data.train
    valid_x, valid_y = data.valid
    test_x, test_y = data.test
    train_x = pad_angles(train_x, n)
    valid_x = pad_angles(valid_x, n)
    test_x = pad_angles(test_x, n)

    if train_x.shape[0] < config.batch_size:
        raise ValueError(
            f"train split has {train_x.shape[0]} rows < batch_size {config.batch_size}"
        )
    steps_per_epoch = train_x.shape[0] // config.batch_size
    total_steps = config.epochs * steps_per_epoch

    readout = single_z(n)
    record_obs = config.record_observable or readout
    eval_x = {"train": train_x, "valid": valid_x, "test": test_x}[config.eval_split]
    eval_x = eval_x[: config.batch_size]

    prior: PriorStats | None = config.prior_override
    if prior is None and config.init.use_prior:
        prior = fit_prior(data.train[0])
    params = sample_init(
        config.init, prior, circuit.param_shape, derived_seed(config.seed, "init")
    )

    schedule = None
    if config.diffusion is not None:
        schedule = config.diffusion.schedule
        if schedule is None:
            schedule = build_schedule(
                total_steps, config.diffusion.dr_min, config.diffusion.dr_max
            )
        elif schedule.gamma_bar.size < total_steps:
            raise ValueError(
                f"explicit schedule covers {schedule.gamma_bar.size} steps, "
                f"run has {total_steps}"
            )
        mix = schedule.gamma if config.diffusion.mode == "per-step" else schedule.gamma_bar
    batch_rng = stream(config.seed, "batches")
    diff_rng = stream(config.seed, "diffusion")

    n_slots = circuit.n_qubits * circuit.n_rot
    report = TrainReport(
        train_loss=np.empty(config.epochs),
        valid_loss=np.empty(config.epochs),
        train_acc=np.empty(config.epochs),
        valid_acc=np.empty(config.epochs),
        test_acc=0.0,
        iteration_grads=np.empty((total_steps, n_slots)),
        eval_grads=np.empty((config.epochs + 1, eval_x.shape[0], n_slots)),
        final_params=params,
        eval_split=config.eval_split,
        seed=config.seed,
    )
    report.eval_grads[0] = gradient_batch(
        circuit, params, eval_x, record_obs, first_layer_only=True
    )

    m = np.zeros_like(params)
    v = np.zeros_like(params)
    t = 0
    for epoch in range(config.epochs):
        order = batch_rng.permutation(train_x.shape[0])
        for b in range(steps_per_epoch):
            idx = order[b * config.batch_size : (b + 1) * config.batch_size]
            x, y = train_x[idx], train_y[idx]
            grads, values = gradient_batch(circuit, params, x, readout, with_value=True)
            p = _sigmoid(READOUT_SCALE * values)
            batch_loss = float(np.mean(loss(p, y)))
            if not np.isfinite(batch_loss):
                raise RuntimeError(
                    f"non-finite loss {batch_loss} at step {t} (epoch {epoch})"
                )
            chain = READOUT_SCALE * (p - y)  # dBCE/d<Z_0> per sample
            batch_grad = (chain[:, None] * grads).mean(axis=0)
            report.iteration_grads[t] = batch_grad[:n_slots]
            params = adam_step(
                params,
                batch_grad.reshape(circuit.param_shape),
                m,
                v,
                t + 1,
                config.learning_rate,
                config.adam_beta1,
                config.adam_beta2,
                config.adam_eps,
            )
            if schedule is not None:
                params = diffuse(params, float(mix[t]), diff_rng)
            t += 1
        report.eval_grads[epoch + 1] = gradient_batch(
            circuit, params, eval_x, record_obs, first_layer_only=True
        )
        report.train_loss[epoch], report.train_acc[epoch] = _split_metrics(
            circuit, params, train_x, train_y, readout
        )
        report.valid_loss[epoch], report.valid_acc[epoch] = _split_metrics(
            circuit, params, valid_x, valid_y, readout
        )

    _, report.test_acc = _split_metrics(circuit, params, test_x, test_y, readout)
    report.final_params = params
    return report
