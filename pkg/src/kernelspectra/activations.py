"""Normalized scalar activations and their Gaussian moment constants.

Every activation used by the limit theory is normalized so that, for a
standard Gaussian input, its mean is 0 and its second moment is 1. The
derived constants are

- ``b_sigma``: Gaussian mean of the derivative,
- ``a_sigma``: Gaussian mean of the squared derivative,
- ``lambda_sigma``: user-declared uniform bound on first and second
  derivatives (diagnostic only, never estimated).

From these, per-layer weights ``q[l] = (b_sigma**2)**(L-l)`` and
``r[l] = a_sigma**(L-l)`` and the identity-component shift
``r_plus = sum(r - q)`` are formed for an ``L``-layer network.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from kernelspectra.errors import DegenerateActivationError, EvaluationError

DEFAULT_QUAD_NODES = 200

# Tolerances for the normalization / ordering invariants.
NORMALIZATION_TOL = 1e-8


@dataclass(frozen=True)
class Activation:
    """A normalized activation with its Gaussian moment constants.

    ``f`` and ``df`` accept and return numpy arrays (or scalars).
    Instances are immutable and safe to share across workers.
    """

    name: str
    f: Callable
    df: Callable
    b_sigma: float
    a_sigma: float
    lambda_sigma: float

    def __call__(self, x):
        return self.f(x)


@dataclass(frozen=True)
class LayerConstants:
    """Per-layer derivative-moment weights for an L-layer network.

    ``q[l]`` weights the layer-l feature gram in the tangent-kernel
    surrogate, ``r[l]`` is the corresponding squared-derivative weight,
    and ``r_plus`` is the resulting identity-component shift.
    """

    q: np.ndarray
    r: np.ndarray
    r_plus: float

    @property
    def depth(self) -> int:
        return len(self.q)


@functools.lru_cache(maxsize=16)
def _hermite_rule(nodes: int):
    # Physicists' Gauss-Hermite rule rescaled to the standard normal:
    # E[f(xi)] = pi^{-1/2} * sum w_i f(sqrt(2) x_i).
    x, w = np.polynomial.hermite.hermgauss(nodes)
    return np.sqrt(2.0) * x, w / math.sqrt(math.pi)


def gaussian_moment(f: Callable, nodes: int = DEFAULT_QUAD_NODES) -> float:
    """Expectation of ``f`` under the standard normal, by Gauss-Hermite quadrature.

    Raises :class:`EvaluationError` naming the offending node if ``f``
    produces a non-finite value.
    """
    if nodes < 2:
        raise ValueError(f"need at least 2 quadrature nodes, got {nodes}")
    x, w = _hermite_rule(nodes)
    try:
        vals = np.asarray(f(x), dtype=float)
        if vals.shape != x.shape:
            raise TypeError
    except Exception:
        vals = np.array([float(f(xi)) for xi in x])
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise EvaluationError(f"non-finite value {vals[i]!r} at quadrature node x={x[i]!r}")
    return float(w @ vals)


def normalize_activation(
    raw: Callable,
    raw_deriv: Callable,
    lambda_hint: float,
    name: str = "custom",
    nodes: int = DEFAULT_QUAD_NODES,
) -> Activation:
    """Shift and rescale ``raw`` to Gaussian mean 0 and second moment 1.

    ``lambda_hint`` must bound |raw'| and |raw''| uniformly; it is rescaled
    along with the activation. A raw function that is constant under the
    Gaussian (variance below 1e-14) raises
    :class:`DegenerateActivationError`.
    """
    if lambda_hint <= 0:
        raise ValueError("lambda_hint must be positive")
    c1 = gaussian_moment(raw, nodes)
    c2 = gaussian_moment(lambda x: (np.asarray(raw(x), dtype=float) - c1) ** 2, nodes)
    if c2 <= 1e-14:
        raise DegenerateActivationError(
            f"activation {name!r} has Gaussian variance {c2:.3e}; cannot normalize"
        )
    scale = 1.0 / math.sqrt(c2)

    def f(x, _raw=raw, _c1=c1, _s=scale):
        return (np.asarray(_raw(x), dtype=float) - _c1) * _s

    def df(x, _d=raw_deriv, _s=scale):
        return np.asarray(_d(x), dtype=float) * _s

    b = gaussian_moment(df, nodes)
    a = gaussian_moment(lambda x: df(x) ** 2, nodes)
    act = Activation(
        name=name,
        f=f,
        df=df,
        b_sigma=b,
        a_sigma=a,
        lambda_sigma=lambda_hint * scale,
    )
    _check_moment_ordering(act)
    return act


def _check_moment_ordering(act: Activation) -> None:
    # b^2 <= 1 <= a <= lambda^2 holds for any normalized twice-differentiable
    # activation; a gross violation means the supplied derivative is wrong.
    tol = 1e-6
    if act.b_sigma**2 > 1.0 + tol or act.a_sigma < 1.0 - tol:
        raise EvaluationError(
            f"activation {act.name!r}: moment ordering violated "
            f"(b^2={act.b_sigma**2:.6f}, a={act.a_sigma:.6f}); "
            "derivative likely inconsistent with the activation"
        )
    if act.a_sigma > act.lambda_sigma**2 + tol:
        warnings.warn(
            f"activation {act.name!r}: declared derivative bound "
            f"lambda={act.lambda_sigma:.4f} is below sqrt(a)={math.sqrt(act.a_sigma):.4f}",
            stacklevel=3,
        )


def layer_constants(act: Activation, depth: int) -> LayerConstants:
    """Layer weights q, r (indexed 0..depth-1) and the shift r_plus."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    ells = np.arange(depth)
    q = (act.b_sigma**2) ** (depth - ells)
    r = act.a_sigma ** (depth - ells)
    return LayerConstants(q=q, r=r, r_plus=float(np.sum(r - q)))


def _identity() -> Activation:
    return Activation(
        name="identity",
        f=lambda x: np.asarray(x, dtype=float),
        df=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        b_sigma=1.0,
        a_sigma=1.0,
        lambda_sigma=1.0,
    )


def _sigmoid(x):
    # Stable logistic.
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


_BUILTIN_RAW = {
    # name -> (raw, raw', bound on |raw'| and |raw''|)
    "atan": (np.arctan, lambda x: 1.0 / (1.0 + np.asarray(x, dtype=float) ** 2), 1.0),
    "tanh": (np.tanh, lambda x: 1.0 / np.cosh(np.asarray(x, dtype=float)) ** 2, 1.0),
    "sigmoid-centered": (_sigmoid, lambda x: _sigmoid(x) * (1.0 - _sigmoid(x)), 0.25),
    "cos-centered": (np.cos, lambda x: -np.sin(np.asarray(x, dtype=float)), 1.0),
}

BUILTIN_NAMES = ("identity", "atan", "tanh", "sigmoid-centered", "cos-centered")


def builtin_activation(name: str, unsafe: bool = False) -> Activation:
    """Look up a built-in activation by name.

    ``relu`` is rejected unless ``unsafe=True``: it is not twice
    differentiable, which the limit theory assumes.
    """
    if name == "identity":
        return _identity()
    if name in _BUILTIN_RAW:
        raw, draw, lam = _BUILTIN_RAW[name]
        return normalize_activation(raw, draw, lam, name=name)
    if name == "relu":
        if not unsafe:
            raise ValueError(
                "relu is not twice differentiable; pass --unsafe-activation "
                "to use it anyway (results are outside the supported theory)"
            )
        warnings.warn(
            "relu violates the smoothness assumptions of the limit theory; "
            "computed constants are exploratory only",
            stacklevel=2,
        )
        return normalize_activation(
            lambda x: np.maximum(np.asarray(x, dtype=float), 0.0),
            lambda x: (np.asarray(x, dtype=float) > 0).astype(float),
            1.0,
            name="relu",
        )
    raise ValueError(f"unknown activation {name!r}; builtins: {', '.join(BUILTIN_NAMES)}")


def activation_from_table(path, lambda_hint: float | None = None) -> Activation:
    """Cubic-spline activation from a two-column CSV of (x, raw(x)) samples.

    The spline is extended linearly outside the tabulated range so that the
    derivative stays bounded. The result is approximate; prefer a closed-form
    activation when one exists.
    """
    from scipy.interpolate import CubicSpline

    data = np.loadtxt(path, delimiter=",", ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"activation table must have 2 columns, found {data.shape[1]}")
    xs = data[:, 0]
    order = np.argsort(xs)
    xs, ys = xs[order], data[order, 1]
    if len(xs) < 4:
        raise ValueError("activation table needs at least 4 rows for a cubic spline")
    spline = CubicSpline(xs, ys)
    dspline = spline.derivative()
    lo, hi = xs[0], xs[-1]
    ylo, yhi = spline(lo), spline(hi)
    slo, shi = dspline(lo), dspline(hi)

    def raw(x):
        x = np.asarray(x, dtype=float)
        out = spline(np.clip(x, lo, hi))
        out = np.where(x < lo, ylo + slo * (x - lo), out)
        return np.where(x > hi, yhi + shi * (x - hi), out)

    def raw_deriv(x):
        x = np.asarray(x, dtype=float)
        out = dspline(np.clip(x, lo, hi))
        return np.where(x < lo, slo, np.where(x > hi, shi, out))

    if lambda_hint is None:
        fine = np.linspace(lo, hi, 4001)
        lambda_hint = float(max(np.max(np.abs(dspline(fine))), 1e-12))
    return normalize_activation(raw, raw_deriv, lambda_hint, name="table")
