"""Finite-width Monte-Carlo: forward pass, kernels, input checks.

Widths enter through explicit ``1/sqrt(d)`` factors in the forward map
while weights stay standard normal, so rate-weighted variants of the
tangent kernel remain faithful to the rescaled-parametrization theory.
All randomness flows through per-layer counter-based generator streams
spawned from a single seed, so results are reproducible bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from kernelspectra.activations import Activation, LayerConstants
from kernelspectra.errors import EvaluationError, SizeGuardError
from kernelspectra.matio import read_matrix

#: dense Jacobian oracle refuses beyond this many gram entries
JACOBIAN_GUARD = 10**7


@dataclass(frozen=True)
class NetworkShape:
    """Sample count, layer dimensions, output count, per-layer rate weights."""

    n: int
    dims: tuple
    k: int = 1
    taus: tuple | None = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if self.n < 1 or any(d < 1 for d in dims) or len(dims) < 2:
            raise ValueError("need n >= 1 and at least (d0, d1) with all dims >= 1")
        if self.k < 1:
            raise ValueError("output count must be >= 1")
        taus = self.taus
        if taus is None:
            taus = (1.0,) * (len(dims) - 1 + 1)
        taus = tuple(float(t) for t in taus)
        if len(taus) != len(dims) or any(t <= 0 for t in taus):
            # dims has L+1 entries, taus needs L+1 entries (layers 1..L plus output)
            raise ValueError(f"need {len(dims)} positive rate weights, got {len(taus)}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "taus", taus)

    @property
    def depth(self) -> int:
        return len(self.dims) - 1

    @property
    def gammas(self) -> np.ndarray:
        """Aspect ratios n / d_l for the hidden layers l = 1..L."""
        return self.n / np.asarray(self.dims[1:], dtype=float)

    @property
    def gamma0(self) -> float:
        return self.n / float(self.dims[0])


@dataclass(frozen=True)
class LayerStack:
    """Forward-pass products: features per layer, weights, pre-activations."""

    X: list  # X[l] is d_l x n, l = 0..L
    W: list  # W[l] is d_{l+1} x d_l, l = 0..L-1
    w_out: np.ndarray  # d_L x k
    pre: list  # pre[l] = W[l] @ X[l], l = 0..L-1
    shape: NetworkShape

    @property
    def depth(self) -> int:
        return len(self.W)


@dataclass(frozen=True)
class OrthonormalityReport:
    """Near-orthonormality diagnostics of a column matrix."""

    epsilon_diag: float
    epsilon_offdiag: float
    op_norm: float
    diag_sq_sum: float
    epsilon: float | None = None
    B: float | None = None
    pass_epsilon: bool | None = None
    pass_B: bool | None = None

    def as_dict(self) -> dict:
        return {
            "epsilon_diag": self.epsilon_diag,
            "epsilon_offdiag": self.epsilon_offdiag,
            "op_norm": self.op_norm,
            "diag_sq_sum": self.diag_sq_sum,
            "epsilon": self.epsilon,
            "B": self.B,
            "pass_epsilon": self.pass_epsilon,
            "pass_B": self.pass_B,
        }


def _layer_rngs(seed, count):
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def sample_input(kind: str, n: int, d0: int, seed=None, path=None) -> np.ndarray:
    """Input matrix of shape (d0, n): one sample per column.

    ``gaussian`` draws i.i.d. entries of variance 1/d0; ``sphere`` puts
    columns uniformly on the unit sphere; ``file`` ingests a CSV or packed
    binary matrix and checks its shape.
    """
    if n < 1 or d0 < 1:
        raise ValueError("n and d0 must be >= 1")
    if kind == "gaussian":
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        return rng.standard_normal((d0, n)) / np.sqrt(d0)
    if kind == "sphere":
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        X = rng.standard_normal((d0, n))
        return X / np.linalg.norm(X, axis=0, keepdims=True)
    if kind == "file":
        X = read_matrix(path, expect_shape=(d0, n))
        return X
    raise ValueError(f"unknown input kind {kind!r}")


def remove_top_pcs(X: np.ndarray, p: int, center: bool = False) -> np.ndarray:
    """Strip the top ``p`` principal directions and renormalize columns.

    With ``center=True`` each column first has its own mean subtracted
    (per-column mean removal), matching the usual image-preprocessing
    pipeline. Columns that become numerically zero are left at zero rather
    than renormalized.
    """
    X = np.asarray(X, dtype=float)
    if p < 0 or p > min(X.shape):
        raise ValueError(f"p must lie in [0, {min(X.shape)}]")
    if center:
        X = X - X.mean(axis=0, keepdims=True)
    if p > 0:
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
        X = X - (U[:, :p] * s[:p]) @ Vt[:p]
    norms = np.linalg.norm(X, axis=0)
    safe = norms > 1e-12 * max(1.0, norms.max(initial=0.0))
    out = X.copy()
    out[:, safe] /= norms[safe]
    out[:, ~safe] = 0.0
    return out


def check_orthonormal(X: np.ndarray, epsilon: float | None = None, B: float | None = None) -> OrthonormalityReport:
    """Diagnostics for approximate pairwise orthonormality of columns."""
    X = np.asarray(X, dtype=float)
    G = X.T @ X
    diag = np.diag(G)
    eps_diag = float(np.max(np.abs(diag - 1.0)))
    off = G - np.diag(diag)
    eps_off = float(np.max(np.abs(off))) if G.shape[0] > 1 else 0.0
    op = float(np.linalg.norm(X, 2))
    dss = float(np.sum((diag - 1.0) ** 2))
    pass_eps = pass_B = None
    if epsilon is not None:
        pass_eps = bool(eps_diag <= epsilon and eps_off <= epsilon)
    if B is not None:
        pass_B = bool(op <= B and dss <= B**2)
    return OrthonormalityReport(
        epsilon_diag=eps_diag,
        epsilon_offdiag=eps_off,
        op_norm=op,
        diag_sq_sum=dss,
        epsilon=epsilon,
        B=B,
        pass_epsilon=pass_eps,
        pass_B=pass_B,
    )


def forward(X0: np.ndarray, shape: NetworkShape, act: Activation, seed=None) -> LayerStack:
    """Run the forward pass with fresh standard-normal weights.

    Deterministic for a fixed seed: layer l draws from its own spawned
    stream, so changing the depth does not reshuffle earlier layers.
    """
    X0 = np.asarray(X0, dtype=float)
    if X0.shape != (shape.dims[0], shape.n):
        raise ValueError(f"input must be {shape.dims[0]} x {shape.n}, got {X0.shape}")
    rngs = _layer_rngs(seed, shape.depth + 1)
    X = [X0]
    W = []
    pre = []
    for l in range(shape.depth):
        Wl = rngs[l].standard_normal((shape.dims[l + 1], shape.dims[l]))
        P = Wl @ X[l]
        Xl = act.f(P) / np.sqrt(shape.dims[l + 1])
        if not np.isfinite(Xl).all():
            raise EvaluationError(f"non-finite activation output at layer {l + 1}")
        W.append(Wl)
        pre.append(P)
        X.append(Xl)
    w_out = rngs[shape.depth].standard_normal((shape.dims[-1], shape.k))
    return LayerStack(X=X, W=W, w_out=w_out, pre=pre, shape=shape)


def ck_matrix(stack: LayerStack, layer: int) -> np.ndarray:
    """Feature gram matrix of the given layer (0 = raw input gram)."""
    if not (0 <= layer <= stack.depth):
        raise ValueError(f"layer must lie in [0, {stack.depth}]")
    X = stack.X[layer]
    K = X.T @ X
    return 0.5 * (K + K.T)


def _backprop_columns(stack: LayerStack, act: Activation, head: np.ndarray) -> list:
    """Per-layer sensitivity matrices for a given output head vector.

    Returns S[l] of shape d_{l+1} x n for l = 0..L-1, where column a of
    S[l] is the gradient of the output at sample a with respect to the
    layer-(l+1) pre-activations, scaled by the width factors.
    """
    L = stack.depth
    dims = stack.shape.dims
    S = [None] * L
    cur = act.df(stack.pre[L - 1]) * (head / np.sqrt(dims[L]))[:, None]
    S[L - 1] = cur
    for l in range(L - 2, -1, -1):
        cur = act.df(stack.pre[l]) * ((stack.W[l + 1].T / np.sqrt(dims[l + 1])) @ cur)
        S[l] = cur
    return S


def ntk_explicit(stack: LayerStack, act: Activation) -> np.ndarray:
    """Exact tangent kernel of a scalar-output stack, assembled layer-wise.

    Sensitivity chains are built in one right-to-left sweep shared across
    samples; the kernel is the top-layer gram plus per-layer products of
    sensitivity grams with the entering feature grams.
    """
    if stack.shape.k != 1:
        raise ValueError("ntk_explicit expects a scalar-output stack; use ntk_multi_explicit")
    S = _backprop_columns(stack, act, stack.w_out[:, 0])
    K = stack.X[-1].T @ stack.X[-1]
    for l in range(stack.depth):
        K = K + (S[l].T @ S[l]) * (stack.X[l].T @ stack.X[l])
    return 0.5 * (K + K.T)


def ntk_multi_explicit(stack: LayerStack, act: Activation, taus=None) -> np.ndarray:
    """Rate-weighted tangent kernel of a k-output stack, as a k x k block matrix.

    Block (i, j) couples output heads i and j; diagonal blocks carry the
    top-layer gram. Output is nk x nk with sample-major blocks.
    """
    shape = stack.shape
    taus = np.asarray(taus if taus is not None else shape.taus, dtype=float)
    L = stack.depth
    if taus.shape != (L + 1,) or (taus <= 0).any():
        raise ValueError(f"need {L + 1} positive rate weights")
    n, k = shape.n, shape.k
    S_by_head = [_backprop_columns(stack, act, stack.w_out[:, i]) for i in range(k)]
    grams = [stack.X[l].T @ stack.X[l] for l in range(L)]
    top = stack.X[-1].T @ stack.X[-1]
    K = np.zeros((n * k, n * k))
    for i in range(k):
        for j in range(i, k):
            block = np.zeros((n, n))
            if i == j:
                block += taus[L] * top
            for l in range(L):
                block += taus[l] * (S_by_head[i][l].T @ S_by_head[j][l]) * grams[l]
            K[i * n : (i + 1) * n, j * n : (j + 1) * n] = block
            if i != j:
                K[j * n : (j + 1) * n, i * n : (i + 1) * n] = block.T
    return 0.5 * (K + K.T)


def ntk_surrogate(stack: LayerStack, constants: LayerConstants) -> np.ndarray:
    """Deterministic-coefficient linear combination spectrally matching the NTK."""
    if stack.shape.k != 1:
        raise ValueError("surrogate is defined for scalar-output stacks")
    if constants.depth != stack.depth:
        raise ValueError("layer constants were built for a different depth")
    n = stack.shape.n
    K = constants.r_plus * np.eye(n) + stack.X[-1].T @ stack.X[-1]
    for l in range(stack.depth):
        if constants.q[l] != 0.0:
            K = K + constants.q[l] * (stack.X[l].T @ stack.X[l])
    return 0.5 * (K + K.T)


def ntk_jacobian_oracle(stack: LayerStack, act: Activation, taus=None) -> np.ndarray:
    """Tangent kernel by dense per-sample gradient assembly. Test oracle only.

    Walks the chain rule sample by sample, materializes the full gradient
    of every output coordinate with respect to every weight, and returns
    the gram of that Jacobian (with optional per-layer rate weights).
    Refuses when n*k*dim(theta) exceeds the size guard.
    """
    shape = stack.shape
    L = stack.depth
    dims = shape.dims
    n, k = shape.n, shape.k
    taus = np.asarray(taus if taus is not None else shape.taus, dtype=float)
    if taus.shape != (L + 1,) or (taus <= 0).any():
        raise ValueError(f"need {L + 1} positive rate weights")
    dim_theta = sum(dims[l + 1] * dims[l] for l in range(L)) + dims[L] * k
    if n * k * dim_theta > JACOBIAN_GUARD:
        raise SizeGuardError(
            f"dense Jacobian would hold {n * k * dim_theta} entries "
            f"(guard {JACOBIAN_GUARD}); use ntk_explicit instead"
        )
    J = np.zeros((dim_theta, n * k))
    sqrt_taus = np.sqrt(taus)
    for a in range(n):
        xs = [stack.X[l][:, a] for l in range(L + 1)]
        for i in range(k):
            col = np.zeros(dim_theta)
            # Gradient w.r.t. the output head: only column i is nonzero.
            delta = act.df(stack.pre[L - 1][:, a]) * (stack.w_out[:, i] / np.sqrt(dims[L]))
            offset = dim_theta - dims[L] * k
            col[offset + i * dims[L] : offset + (i + 1) * dims[L]] = sqrt_taus[L] * xs[L]
            # Walk the hidden layers from the top down.
            for l in range(L - 1, -1, -1):
                start = sum(dims[m + 1] * dims[m] for m in range(l))
                grad_Wl = np.outer(delta, xs[l]) * sqrt_taus[l]
                col[start : start + dims[l + 1] * dims[l]] = grad_Wl.ravel()
                if l > 0:
                    delta = act.df(stack.pre[l - 1][:, a]) * (
                        (stack.W[l].T / np.sqrt(dims[l])) @ delta
                    )
            J[:, i * n + a] = col
    K = J.T @ J
    return 0.5 * (K + K.T)
