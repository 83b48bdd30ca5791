"""Analytic derivatives of the learnable PN and of the regularized loss.

Every closed form here is checked against :func:`finite_difference`.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .classifier import LinearClassifier, cross_entropy, softmax
from .errors import DomainError, ShapeMismatchError
from .framediff import diff_maps, validate_frames
from .pn import PnHyper, PnParams, pn_function, shift_of, sigmoid, slope_of
from .regularization import temporal_variation, temporal_variation_grad


def _parts(diff, params):
    h = params.hyper
    tm = np.tanh(params.m)
    tn = np.tanh(params.n)
    denom = h.beta * abs(tm) + h.epsilon
    centred = np.asarray(diff, dtype=np.float64) - h.gamma * tn
    s = sigmoid(h.alpha / denom * centred)
    return h, tm, tn, denom, centred, s * (1.0 - s)


def slope_derivative(m, hyper):
    """a'(m); the kink of |tanh m| at 0 gets the zero subgradient."""
    tm = np.tanh(m)
    return (
        -hyper.alpha * hyper.beta * np.sign(tm) * (1.0 - tm * tm)
        / (hyper.beta * np.abs(tm) + hyper.epsilon) ** 2
    )


def shift_derivative(n, hyper):
    tn = np.tanh(n)
    return hyper.gamma * (1.0 - tn * tn)


def pn_partial_m(diff, params):
    h, tm, _, denom, centred, dsig = _parts(diff, params)
    return dsig * slope_derivative(params.m, h) * centred


def pn_partial_m_without_sign(diff, params):
    """df/dm with a'(m) replaced by +alpha*beta*tanh'(m)/(...)^2.

    Drops the minus sign and sgn(tanh m) that the chain rule through |tanh m|
    produces.  Only kept so the acceptance suite can show it disagrees with
    finite differences.
    """
    h, tm, _, denom, centred, dsig = _parts(diff, params)
    return dsig * h.alpha * h.beta * (1.0 - tm * tm) * centred / denom**2


def pn_partial_n(diff, params):
    h, _, tn, denom, _, dsig = _parts(diff, params)
    return dsig * (-h.alpha * h.gamma * (1.0 - tn * tn)) / denom


def pn_partial_hyper(diff, params, which):
    """Sensitivity of f(D) to alpha, beta or gamma."""
    h, tm, tn, denom, centred, dsig = _parts(diff, params)
    if which == "alpha":
        return dsig * centred / denom
    if which == "beta":
        return dsig * (-h.alpha * centred * abs(tm)) / denom**2
    if which == "gamma":
        return dsig * (-h.alpha * tn) / denom
    raise ValueError(f"unknown hyper-parameter {which!r}")


def finite_difference(fn, point, h=1e-6):
    """Central difference (fn(x+h) - fn(x-h)) / 2h."""
    if not h > 0:
        raise DomainError(f"step must be positive, got {h}")
    hi = fn(point + h)
    lo = fn(point - h)
    if not (math.isfinite(hi) and math.isfinite(lo)):
        raise DomainError(f"non-finite evaluation near {point}")
    return (hi - lo) / (2.0 * h)


@dataclass
class LossGradients:
    task_loss: float
    variation: float
    total: float
    accuracy: float
    d_m: float
    d_n: float
    d_weights: np.ndarray
    d_bias: np.ndarray


def _stack(frames, labels, diffs):
    frames = validate_frames(frames)
    if frames.ndim != 5:
        raise ShapeMismatchError(f"expected a (B, H, W, 3, T) batch, got {frames.shape}")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (frames.shape[0],):
        raise ShapeMismatchError(
            f"{labels.shape[0]} labels for {frames.shape[0]} clips"
        )
    if diffs is None:
        diffs = diff_maps(frames)
    return frames, labels, diffs


def loss_gradients(frames, labels, params, classifier, lam, use_prompts=True, diffs=None):
    """Loss and exact gradients for a batch.

    The objective is mean cross-entropy plus ``lam`` times the mean per-clip
    temporal variation.  ``frames`` is ``(B, H, W, 3, T)``; ``diffs`` may be
    passed to skip recomputing the difference maps.  With
    ``use_prompts=False`` the classifier sees raw frames 2..T and the
    prompt-layer gradients are zero.
    """
    if lam < 0:
        raise DomainError(f"lambda must be non-negative, got {lam}")
    frames, labels, diffs = _stack(frames, labels, diffs)
    batch = frames.shape[0]
    following = frames[..., 1:]

    if use_prompts:
        hyper = params.hyper
        a = slope_of(params.m, hyper)
        centred = diffs - shift_of(params.n, hyper)
        attn = sigmoid(a * centred)
        prompts = attn[..., None, :] * following
        per_clip_var = temporal_variation(attn)
        variation = float(np.mean(per_clip_var))
    else:
        prompts = following
        variation = 0.0

    feats = classifier.features(prompts)
    logits = classifier.logits(feats)
    task = cross_entropy(logits, labels)
    acc = float(np.mean(np.argmax(logits, axis=1) == labels))

    resid = softmax(logits)
    resid[np.arange(batch), labels] -= 1.0
    resid /= batch
    d_weights = resid.T @ feats
    d_bias = resid.sum(axis=0)

    d_m = d_n = 0.0
    if use_prompts:
        d_feats = resid @ classifier.weights
        b, hgt, wid, c, p = prompts.shape
        g = classifier.grid
        cell_weight = classifier.features_backward(d_feats, prompts.shape)
        cells = following.reshape(b, g, hgt // g, g, wid // g, c, p)
        d_attn = (cells * cell_weight).sum(axis=5).reshape(b, hgt, wid, p)
        if lam:
            d_attn = d_attn + (lam / batch) * temporal_variation_grad(attn)
        d_g = d_attn * attn * (1.0 - attn)
        d_m = float(slope_derivative(params.m, hyper) * np.sum(d_g * centred))
        d_n = float(-a * shift_derivative(params.n, hyper) * np.sum(d_g))

    return LossGradients(
        task_loss=task,
        variation=variation,
        total=task + lam * variation,
        accuracy=acc,
        d_m=d_m,
        d_n=d_n,
        d_weights=d_weights,
        d_bias=d_bias,
    )


def batch_total_loss(frames, labels, params, classifier, lam, use_prompts=True):
    """Forward-only objective, written out independently of the backward path."""
    frames = validate_frames(frames)
    labels = np.asarray(labels)
    if use_prompts:
        d = diff_maps(frames)
        attn = pn_function(d, params.m, params.n, params.hyper)
        z = attn[..., None, :] * frames[..., 1:]
        v = float(np.mean(temporal_variation(attn)))
    else:
        z = frames[..., 1:]
        v = 0.0
    logits = classifier.logits(classifier.features(z))
    return cross_entropy(logits, labels) + lam * v


def _tail_pn(diff, params):
    """f(D) up to an additive constant, evaluated on the sigmoid's small tail.

    Returns a function of the perturbed parameters.  Near saturation f is
    within 1e-16 of 1, so differencing it directly loses every digit; the
    complement sigma(-g) keeps full relative precision.  The side is fixed
    at the base point so both probes use the same branch.
    """
    g0 = slope_of(params.m, params.hyper) * (diff - shift_of(params.n, params.hyper))
    sign = 1.0 if g0 < 0 else -1.0

    def fn(m, n, hyper):
        g = slope_of(m, hyper) * (diff - shift_of(n, hyper))
        return sign * sigmoid(sign * g)

    return fn


def fd_partials(diff, params, h=1e-6):
    """Finite-difference partials of f(D) w.r.t. m, n, alpha, beta, gamma."""
    fn = _tail_pn(diff, params)
    hyp = params.hyper
    return {
        "m": finite_difference(lambda x: fn(x, params.n, hyp), params.m, h),
        "n": finite_difference(lambda x: fn(params.m, x, hyp), params.n, h),
        "alpha": finite_difference(lambda x: fn(params.m, params.n, replace(hyp, alpha=x)), hyp.alpha, h),
        "beta": finite_difference(lambda x: fn(params.m, params.n, replace(hyp, beta=x)), hyp.beta, h),
        "gamma": finite_difference(lambda x: fn(params.m, params.n, replace(hyp, gamma=x)), hyp.gamma, h),
    }


@dataclass
class CheckResult:
    name: str
    max_rel_error: float
    tolerance: float
    checked: int

    @property
    def passed(self):
        return self.checked > 0 and self.max_rel_error < self.tolerance


def _rel(analytic, numeric):
    return abs(analytic - numeric) / abs(analytic)


def check_pn_partials(points=1000, seed=0, h=1e-6, tol=1e-6, hyper=None):
    """Compare every analytic PN partial with central differences.

    Points draw m, n from U[-3, 3] and D from U[-1, 1]; |m| < 1e-4 (the
    |tanh m| kink) and |analytic| < 1e-8 are skipped.  Also reports the
    sign-free m-partial, which is expected to fail.
    """
    hyper = hyper or PnHyper()
    rng = np.random.default_rng(seed)
    analytic = {
        "m": pn_partial_m,
        "n": pn_partial_n,
        "alpha": lambda d, p: pn_partial_hyper(d, p, "alpha"),
        "beta": lambda d, p: pn_partial_hyper(d, p, "beta"),
        "gamma": lambda d, p: pn_partial_hyper(d, p, "gamma"),
        "m (sign dropped)": pn_partial_m_without_sign,
    }
    worst = dict.fromkeys(analytic, 0.0)
    counts = dict.fromkeys(analytic, 0)
    for _ in range(points):
        m, n = rng.uniform(-3, 3, size=2)
        d = float(rng.uniform(-1, 1))
        if abs(m) < 1e-4:
            continue
        params = PnParams(float(m), float(n), hyper)
        numeric = fd_partials(d, params, h)
        for name, fn in analytic.items():
            value = float(fn(d, params))
            if abs(value) < 1e-8:
                continue
            key = name.split()[0]
            worst[name] = max(worst[name], _rel(value, numeric[key]))
            counts[name] += 1
    return [CheckResult(f"df/d{k}", worst[k], tol, counts[k]) for k in analytic]


def check_loss_gradients(lams=(0.0, 0.5, 2.5), seed=0, h=1e-5, tol=1e-4):
    """End-to-end check of :func:`loss_gradients` on a random 4-clip batch."""
    rng = np.random.default_rng(seed)
    frames = rng.random((4, 8, 8, 3, 5))
    labels = np.array([0, 1, 2, 3])
    grid = 2
    clf = LinearClassifier(rng.normal(size=(4, 3 * grid * grid)), rng.normal(size=4), grid)
    params = PnParams(float(rng.normal(1e-5, 1)), float(rng.normal(1e-5, 1)))
    results = []
    for lam in lams:
        g = loss_gradients(frames, labels, params, clf, lam)
        num_m = finite_difference(
            lambda x: batch_total_loss(frames, labels, params.with_mn(x, params.n), clf, lam),
            params.m, h,
        )
        num_n = finite_difference(
            lambda x: batch_total_loss(frames, labels, params.with_mn(params.m, x), clf, lam),
            params.n, h,
        )
        # one classifier weight and the first bias
        def with_weight(x):
            w = clf.weights.copy()
            w[1, 2] = x
            return batch_total_loss(frames, labels, params, LinearClassifier(w, clf.bias, grid), lam)

        def with_bias(x):
            bias = clf.bias.copy()
            bias[0] = x
            return batch_total_loss(frames, labels, params, LinearClassifier(clf.weights, bias, grid), lam)

        num_w = finite_difference(with_weight, clf.weights[1, 2], h)
        num_b = finite_difference(with_bias, clf.bias[0], h)
        err = max(
            _rel(g.d_m, num_m), _rel(g.d_n, num_n),
            _rel(g.d_weights[1, 2], num_w), _rel(g.d_bias[0], num_b),
        )
        results.append(CheckResult(f"loss gradients (lambda={lam})", err, tol, 4))
    return results


def run_gradcheck(points=1000, seed=0):
    """Full oracle suite; the sign-dropped m-partial is excluded from the verdict."""
    partials = check_pn_partials(points, seed)
    return partials, check_loss_gradients(seed=seed)
