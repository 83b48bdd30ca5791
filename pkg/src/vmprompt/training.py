"""SGD training of the prompt layer and pooled classifier, plus lambda sweeps."""

import csv
import io
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .classifier import LinearClassifier
from .errors import DomainError, TrainingDiverged
from .framediff import diff_maps
from .gradients import loss_gradients
from .pn import PnHyper, PnParams, shift, slope
from .prompts import attention_sequence, motion_prompts

log = logging.getLogger(__name__)

REPORT_HEADER = ["epoch", "a", "b", "task_loss", "variation", "total_loss", "train_acc", "val_acc"]
SWEEP_HEADER = ["lambda", "a", "b", "variation", "train_acc", "val_acc"]


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.005
    head_lr: float = 0.5
    momentum: float = 0.9
    weight_decay: float = 0.0001
    epochs: int = 60
    batch_size: int = 8
    lam: float = 0.0
    init_mean: float = 1e-5
    init_std: float = 1.0
    seed: int = 0
    pool_grid: int = 4
    use_prompts: bool = True

    def __post_init__(self):
        if not (self.lr > 0 and self.head_lr > 0):
            raise DomainError("learning rates must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise DomainError("momentum must lie in [0, 1)")
        if not 0.0 <= self.lam <= 10.0:
            raise DomainError("lambda must lie in [0, 10]")
        if self.epochs < 0 or self.batch_size < 1 or self.pool_grid < 1:
            raise DomainError("epochs >= 0, batch_size >= 1 and pool_grid >= 1 required")
        if self.weight_decay < 0 or self.init_std < 0:
            raise DomainError("weight_decay and init_std must be non-negative")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    a: float
    b: float
    task_loss: float
    variation: float
    total_loss: float
    train_acc: float
    val_acc: float


@dataclass
class TrainReport:
    records: list = field(default_factory=list)
    params: PnParams = None
    classifier: LinearClassifier = None

    @property
    def final(self):
        return self.records[-1]

    def to_csv(self):
        return records_to_csv(self.records)


def _fmt(x):
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def records_to_csv(records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for r in records:
        writer.writerow([_fmt(v) for v in asdict(r).values()])
    return buf.getvalue()


def evaluate(params, classifier, dataset, use_prompts=True):
    """Fraction of clips whose top class score matches the label."""
    if len(dataset) == 0:
        raise DomainError("cannot evaluate on an empty dataset")
    frames = dataset.frames
    if use_prompts:
        attn = attention_sequence(diff_maps(frames), params)
        prompts = motion_prompts(frames, attn)
    else:
        prompts = frames[..., 1:]
    pred = classifier.predict(classifier.features(prompts))
    return float(np.mean(pred == dataset.labels))


def _snapshot(epoch, params, classifier, extra=None):
    state = {
        "epoch": epoch,
        "m": params.m,
        "n": params.n,
        "weights": classifier.weights.copy(),
        "bias": classifier.bias.copy(),
    }
    state.update(extra or {})
    return state


def _record(epoch, data, diffs, val, params, classifier, cfg):
    g = loss_gradients(
        data.frames, data.labels, params, classifier, cfg.lam,
        use_prompts=cfg.use_prompts, diffs=diffs,
    )
    if not np.isfinite(g.total):
        raise TrainingDiverged(
            f"non-finite loss at epoch {epoch}",
            _snapshot(epoch, params, classifier, {"task_loss": g.task_loss, "variation": g.variation}),
        )
    val_acc = (
        evaluate(params, classifier, val, cfg.use_prompts)
        if val is not None and len(val)
        else float("nan")
    )
    return EpochRecord(
        epoch=epoch,
        a=slope(params),
        b=shift(params),
        task_loss=g.task_loss,
        variation=g.variation,
        total_loss=g.total,
        train_acc=g.accuracy,
        val_acc=val_acc,
    )


def train(dataset, cfg, val=None, hyper=None):
    """Minimise cross-entropy + lam * variation with momentum SGD.

    ``m`` and ``n`` start from N(init_mean, init_std) and move with ``lr``;
    the classifier starts at zero and moves with ``head_lr``.  Weight decay
    touches classifier weights only.  Record 0 is the
    initial state; record ``e`` is measured on the full training set after
    epoch ``e``.
    """
    hyper = hyper or PnHyper()
    if len(dataset) == 0:
        raise DomainError("cannot train on an empty dataset")
    rng = np.random.default_rng(cfg.seed)
    m0, n0 = rng.normal(cfg.init_mean, cfg.init_std, size=2)
    params = PnParams(float(m0), float(n0), hyper)
    classes = int(dataset.labels.max()) + 1
    classifier = LinearClassifier.zeros(classes, cfg.pool_grid)

    diffs = diff_maps(dataset.frames)
    report = TrainReport()
    report.records.append(_record(0, dataset, diffs, val, params, classifier, cfg))

    vel_mn = np.zeros(2)
    vel_w = np.zeros_like(classifier.weights)
    vel_b = np.zeros_like(classifier.bias)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(dataset))
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            g = loss_gradients(
                dataset.frames[idx], dataset.labels[idx], params, classifier,
                cfg.lam, use_prompts=cfg.use_prompts, diffs=diffs[idx],
            )
            if not np.isfinite(g.total):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}",
                    _snapshot(epoch, params, classifier),
                )
            vel_mn = cfg.momentum * vel_mn + np.array([g.d_m, g.d_n])
            vel_w = cfg.momentum * vel_w + g.d_weights + cfg.weight_decay * classifier.weights
            vel_b = cfg.momentum * vel_b + g.d_bias
            if cfg.use_prompts:
                params = params.with_mn(params.m - cfg.lr * vel_mn[0], params.n - cfg.lr * vel_mn[1])
            classifier.weights = classifier.weights - cfg.head_lr * vel_w
            classifier.bias = classifier.bias - cfg.head_lr * vel_b
        rec = _record(epoch, dataset, diffs, val, params, classifier, cfg)
        log.debug("epoch %d: %s", epoch, rec)
        report.records.append(rec)

    report.params = params
    report.classifier = classifier
    return report


@dataclass
class SweepReport:
    lambdas: list
    reports: list

    def summary_rows(self):
        return [
            (lam, r.final.a, r.final.b, r.final.variation, r.final.train_acc, r.final.val_acc)
            for lam, r in zip(self.lambdas, self.reports)
        ]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for row in self.summary_rows():
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def lambda_sweep(dataset, cfg, lambdas, val=None, hyper=None):
    """Train once per lambda from the same seed and initialisation."""
    lambdas = [float(x) for x in lambdas]
    if not lambdas:
        raise DomainError("lambda list is empty")
    reports = []
    for lam in lambdas:
        run_cfg = TrainConfig(**{**asdict(cfg), "lam": lam})
        reports.append(train(dataset, run_cfg, val=val, hyper=hyper))
    return SweepReport(lambdas, reports)
