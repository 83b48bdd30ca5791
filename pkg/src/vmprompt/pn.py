"""Learnable sigmoid power normalization and the classic PN baselines.

The learnable function maps a difference value ``D`` in [-1, 1] to

    f(D) = sigmoid(a(m) * (D - b(n)))
    a(m) = alpha / (beta * |tanh m| + epsilon)
    b(n) = gamma * tanh(n)

with ``m`` and ``n`` free reals and ``alpha, beta, gamma, epsilon`` fixed.
"""

import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError


class ConstraintWarning(UserWarning):
    """alpha is too small for the sigmoid to saturate over [-1, 1]."""


@dataclass(frozen=True)
class PnHyper:
    alpha: float = 5.0
    beta: float = 0.45
    gamma: float = 0.6
    epsilon: float = 0.1

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0 and self.epsilon > 0):
            raise DomainError(
                f"alpha, beta and epsilon must be positive: {self}"
            )
        if not 0 < self.gamma < 1:
            raise DomainError(f"gamma must lie in (0, 1), got {self.gamma}")


@dataclass(frozen=True)
class PnParams:
    m: float = 0.0
    n: float = 0.0
    hyper: PnHyper = field(default_factory=PnHyper)

    def with_mn(self, m, n):
        return replace(self, m=float(m), n=float(n))


def sigmoid(x):
    """Logistic function that never overflows.

    Positive inputs use 1/(1+exp(-x)), negative ones exp(x)/(1+exp(x)).
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def slope_of(m, hyper):
    return hyper.alpha / (hyper.beta * np.abs(np.tanh(m)) + hyper.epsilon)


def shift_of(n, hyper):
    return hyper.gamma * np.tanh(n)


def slope(params):
    """a(m); ranges over [alpha/(beta+epsilon), alpha/epsilon]."""
    return float(slope_of(params.m, params.hyper))


def shift(params):
    """b(n); ranges over (-gamma, gamma)."""
    return float(shift_of(params.n, params.hyper))


def _check_diff(diff):
    diff = np.asarray(diff, dtype=np.float64)
    if np.any(np.abs(diff) > 1.0) or not np.all(np.isfinite(diff)):
        raise DomainError("difference values must lie in [-1, 1]")
    return diff


def pn_function(diff, m, n, hyper):
    """Vectorised learnable PN; ``m`` and ``n`` broadcast against ``diff``."""
    diff = _check_diff(diff)
    return sigmoid(slope_of(m, hyper) * (diff - shift_of(n, hyper)))


def apply_pn(diff, params):
    """Map a difference map to an attention map in [0, 1]."""
    return pn_function(diff, params.m, params.n, params.hyper)


def slope_bounds(hyper):
    return hyper.alpha / (hyper.beta + hyper.epsilon), hyper.alpha / hyper.epsilon


def constraint_check(hyper):
    """Return the safety factor k in alpha = k * max{(b+e)/(1-g), e/(1-g)}.

    With the defaults this is 5 / 1.375.  A ConstraintWarning is issued when
    k <= 1, i.e. the sigmoid cannot reach both 0 and 1 over [-1, 1] for every
    admissible (m, n).
    """
    if hyper.gamma >= 1:
        raise DomainError("gamma must be < 1")
    one_minus = 1.0 - hyper.gamma
    k = hyper.alpha / max(
        (hyper.beta + hyper.epsilon) / one_minus, hyper.epsilon / one_minus
    )
    if k <= 1:
        warnings.warn(f"constraint factor k={k:.4g} <= 1", ConstraintWarning)
    return k


def invert_slope(a, hyper):
    """Return |tanh m| that produces slope ``a``."""
    low, high = slope_bounds(hyper)
    tol = 1e-12 * high
    if not low - tol <= a <= high + tol:
        raise DomainError(f"slope {a} outside attainable range [{low}, {high}]")
    t = (hyper.alpha / a - hyper.epsilon) / hyper.beta
    return min(max(t, 0.0), 1.0)


def params_from_slope_shift(a, b, hyper=PnHyper()):
    """Find (m, n) with slope(m) == a and shift(n) == b.

    Endpoints are rejected: the gentlest slope and |b| == gamma need
    infinite m or n.  The non-negative root is chosen for m.
    """
    t = invert_slope(a, hyper)
    if t >= 1.0:
        raise DomainError(f"slope {a} is only reached as |m| -> infinity")
    if abs(b) >= hyper.gamma:
        raise DomainError(f"shift {b} outside (-{hyper.gamma}, {hyper.gamma})")
    return PnParams(math.atanh(t), math.atanh(b / hyper.gamma), hyper)


class PnKind(enum.Enum):
    GAMMA = "gamma"
    MAXEXP = "maxexp"
    ASINHE = "asinhe"
    SIGME = "sigme"


def classic_pn(kind, diff, param):
    """Sign-symmetric classic power normalizations on [-1, 1] -> [-1, 1].

    gamma:  sign(x) |x|^p
    maxexp: sign(x) (1 - (1 - |x|)^p)
    asinhe: asinh(p x) / asinh(p)
    sigme:  2 / (1 + exp(-p x)) - 1
    """
    try:
        kind = PnKind(kind.value if isinstance(kind, PnKind) else str(kind).lower())
    except ValueError:
        raise ValueError(f"unknown PN kind {kind!r}") from None
    if param <= 0:
        raise DomainError(f"PN parameter must be positive, got {param}")
    x = _check_diff(diff)
    ax = np.abs(x)
    if kind is PnKind.GAMMA:
        out = np.sign(x) * ax**param
    elif kind is PnKind.MAXEXP:
        out = np.sign(x) * (1.0 - (1.0 - ax) ** param)
    elif kind is PnKind.ASINHE:
        out = np.arcsinh(param * x) / np.arcsinh(param)
    else:
        out = 2.0 * sigmoid(param * x) - 1.0
    return np.clip(out, -1.0, 1.0)
