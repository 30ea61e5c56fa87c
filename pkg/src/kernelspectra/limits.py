"""Deterministic spectral limits via recursive fixed-point equations.

The limit Stieltjes transform of any real linear combination

    c[-1]*Id + c[0]*G_0 + ... + c[L]*G_L,

where ``G_l`` is the layer-``l`` feature gram matrix of a random
feedforward network, is obtained by evaluating a recursively defined
trace functional ``t_L`` at a shifted argument vector. Evaluating ``t_L``
requires one solved auxiliary value ``s_l`` in the upper half-plane per
layer; the ``s_l`` satisfy coupled fixed-point equations tied together by
an argument-shifting chain.

The solver iterates all levels simultaneously: each sweep first rebuilds
the argument chain top-down from the current ``s`` values, then updates
every ``s_l`` from the right-hand side of its equation. Iterates that
leave the upper half-plane or stagnate are restarted from random points
in a box; a density sweep warm-starts each grid point by extrapolating
the two previously solved chains.

Special cases exposed as named entry points:

- ``mp_stieltjes``      -- the classical sample-covariance (aspect-ratio)
                           fixed point for an arbitrary atomic input law;
- ``ck_stieltjes``      -- last-layer feature gram (conjugate kernel);
- ``ntk_stieltjes``     -- tangent kernel, scalar output;
- ``ntk_multi_stieltjes`` -- tangent kernel with per-layer rate weights
                           (multi-output networks, any output dimension);
- ``linear_combo_stieltjes`` -- arbitrary real coefficients.

When the activation's mean slope is zero the layered recursion is
ill-posed and the limits collapse to (translated, rescaled) aspect-ratio
laws that do not depend on the input spectrum; those paths bypass the
chain solver entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from kernelspectra.errors import (
    ContractViolationError,
    CurveQualityError,
    SingularArgumentError,
    SolverError,
)
from kernelspectra.measures import (
    NEGATIVE_DENSITY_TOL,
    DensityCurve,
    SpectralMeasure,
)

#: below this |b_sigma| the zero-mean-slope special cases are used
B_ZERO_TOL = 1e-8

#: iterations between stagnation checks, and the required shrink factor
STALL_WINDOW = 500
STALL_FACTOR = 10.0


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for the fixed-point iterations.

    ``tol`` bounds the sup-norm of the last update on convergence.
    ``damping`` in (0, 1] blends updates (1.0 = plain iteration); it is
    halved automatically after the first restart. Restarts draw uniformly
    from the box ``reinit_real x reinit_imag`` in the upper half-plane.
    """

    tol: float = 1e-11
    max_iter: int = 20000
    max_reinits: int = 50
    damping: float = 1.0
    reinit_real: tuple = (-2.0, 2.0)
    reinit_imag: tuple = (0.05, 2.0)
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not (0.0 < self.damping <= 1.0):
            raise ValueError("damping must lie in (0, 1]")
        if self.reinit_imag[0] <= 0:
            raise ValueError("reinit box must lie in the upper half-plane")


DEFAULT_OPTIONS = SolverOptions()


@dataclass(frozen=True)
class FixedPointState:
    """Solved per-level values and the argument chain for one spectral point."""

    s: np.ndarray
    z_chain: list
    z_top: np.ndarray
    b_sigma: float
    converged: bool
    iterations: int
    reinits: int
    residual: float


def _validate_z_top(z_top: np.ndarray) -> None:
    scale = max(1.0, float(np.max(np.abs(z_top))))
    if z_top[0].imag > 1e-12 * scale:
        raise ValueError("z_top[0] must lie in the closed lower half-plane")
    mids = z_top[1:-1]
    if mids.size and np.max(np.abs(mids.imag)) > 1e-12 * scale:
        raise ValueError("interior entries of z_top must be real")
    if z_top[-1] == 0:
        raise ValueError("last entry of z_top must be nonzero")
    if z_top[-1].imag > 1e-12 * scale:
        raise ValueError("last entry of z_top must lie in the closed lower half-plane")


def _build_chain(z_top: np.ndarray, s: np.ndarray, b2: float) -> list:
    """Argument vectors for every level, top-down from the current s values."""
    depth = len(s)
    chain = [None] * (depth + 1)
    chain[depth] = z_top
    cur = z_top
    for level in range(depth, 0, -1):
        shift = 1.0 / s[level - 1]
        nxt = cur[:-1].copy()
        nxt[0] += (1.0 - b2) * shift
        nxt[-1] += b2 * shift
        chain[level - 1] = nxt
        cur = nxt
    return chain


def _bottom_moments(mu0: SpectralMeasure, z_bottom: np.ndarray):
    """Scalars (A, B): integrals of 1/(z0+z1*x) and x/(z0+z1*x) over the atoms.

    Every trace evaluation in one sweep reduces to a linear combination of
    these two numbers, so they are computed once per sweep.
    """
    denom = z_bottom[0] + z_bottom[1] * mu0.locations
    amin = np.abs(denom).min()
    if amin < 1e-14 or not np.isfinite(amin):
        raise SingularArgumentError("argument chain produced a singular base integral")
    inv = mu0.weights / denom
    return complex(inv.sum()), complex((inv * mu0.locations).sum())


def _t_eval(level: int, w: np.ndarray, chain: list, A: complex, B: complex) -> complex:
    """Unroll the trace functional at ``level`` down to the base integral."""
    acc = 0.0 + 0.0j
    w = np.asarray(w, dtype=complex)
    for j in range(level, 0, -1):
        zv = chain[j]
        ratio = w[-1] / zv[-1]
        acc += ratio
        w = w[:-1] - ratio * zv[:-1]
    return acc + w[0] * A + w[1] * B


def _s_weight_vectors(depth: int, b2: float) -> list:
    # Update of level l integrates the weight vector (1-b^2, 0, ..., 0, b^2)
    # of length l+1 at level l-1.
    out = []
    for level in range(1, depth + 1):
        w = np.zeros(level + 1, dtype=complex)
        w[0] = 1.0 - b2
        w[-1] = b2
        out.append(w)
    return out


def solve_chain(
    z_top,
    mu0: SpectralMeasure,
    gammas,
    b_sigma: float,
    opts: SolverOptions = DEFAULT_OPTIONS,
    warm=None,
) -> FixedPointState:
    """Solve the coupled per-level fixed-point equations at one argument vector.

    ``z_top`` has ``L + 2`` entries: the first in the closed lower
    half-plane, the middle ``L`` real, the last nonzero in the closed lower
    half-plane. ``warm`` (an array of ``L`` values or a previous state)
    seeds the first trial; its values are nudged into the upper half-plane
    if extrapolation left it.

    Raises :class:`SolverError` (carrying the best iterate) if no trial
    converges within ``opts.max_reinits`` restarts.
    """
    z_top = np.asarray(z_top, dtype=complex)
    gammas = np.asarray(gammas, dtype=float)
    depth = len(gammas)
    if z_top.shape != (depth + 2,):
        raise ValueError(f"z_top must have {depth + 2} entries for {depth} layers")
    if abs(b_sigma) < B_ZERO_TOL:
        raise ValueError("the chain recursion requires a nonzero mean slope b_sigma")
    _validate_z_top(z_top)

    b2 = b_sigma**2
    s_weights = _s_weight_vectors(depth, b2)
    rng = np.random.default_rng(opts.seed)

    if warm is not None:
        if isinstance(warm, FixedPointState):
            warm = warm.s
        init = np.asarray(warm, dtype=complex).copy()
        if init.shape != (depth,):
            raise ValueError("warm start must supply one value per layer")
        init.imag = np.maximum(init.imag, 1e-12)
    else:
        init = np.full(depth, 1j, dtype=complex)

    def random_init():
        re = rng.uniform(*opts.reinit_real, size=depth)
        im = rng.uniform(*opts.reinit_imag, size=depth)
        return re + 1j * im

    best_s, best_resid, best_chain = None, np.inf, None
    total_iters = 0
    damping = opts.damping
    s = init
    reinits = 0
    while True:
        resid = np.inf
        window_resid = np.inf
        failed = False
        for it in range(opts.max_iter):
            total_iters += 1
            chain = _build_chain(z_top, s, b2)
            try:
                A, B = _bottom_moments(mu0, chain[0])
            except SingularArgumentError:
                failed = True
                break
            new_s = np.empty(depth, dtype=complex)
            for level in range(1, depth + 1):
                t_val = _t_eval(level - 1, s_weights[level - 1], chain, A, B)
                new_s[level - 1] = 1.0 / chain[level][-1] + gammas[level - 1] * t_val
            if not np.isfinite(new_s).all():
                failed = True
                break
            resid = float(np.max(np.abs(new_s - s)))
            if resid < best_resid and (new_s.imag > 0).all():
                best_resid, best_s = resid, new_s.copy()
            if resid <= opts.tol:
                if (new_s.imag > 0).all():
                    final_chain = _build_chain(z_top, new_s, b2)
                    return FixedPointState(
                        s=new_s,
                        z_chain=final_chain,
                        z_top=z_top,
                        b_sigma=b_sigma,
                        converged=True,
                        iterations=total_iters,
                        reinits=reinits,
                        residual=resid,
                    )
                # Converged outside the upper half-plane: wrong fixed point.
                failed = True
                break
            # Transients may dip below the real axis; only a *converged*
            # point is required to sit in the upper half-plane.
            s = s + damping * (new_s - s)
            if (it + 1) % STALL_WINDOW == 0:
                if resid > window_resid / STALL_FACTOR:
                    failed = True
                    break
                window_resid = resid
        if not failed:
            # Exhausted max_iter without converging; treat as a failed trial.
            pass
        reinits += 1
        if reinits > opts.max_reinits:
            if best_s is not None:
                best_chain = _build_chain(z_top, best_s, b2)
            raise SolverError(
                f"chain solver did not converge after {opts.max_reinits} restarts "
                f"(best residual {best_resid:.3e})",
                best=FixedPointState(
                    s=best_s if best_s is not None else s,
                    z_chain=best_chain if best_chain is not None else _build_chain(z_top, s, b2),
                    z_top=z_top,
                    b_sigma=b_sigma,
                    converged=False,
                    iterations=total_iters,
                    reinits=reinits - 1,
                    residual=best_resid,
                ),
                residual=best_resid,
                iterations=total_iters,
                reinits=reinits - 1,
            )
        # Halve the damping on every restart (floor 1/16): plain iteration
        # overshoots across the real axis where the fixed point has a tiny
        # imaginary part, and heavier damping restores local contraction.
        damping = max(min(damping, opts.damping * 0.5 ** reinits), opts.damping / 16.0)
        s = random_init()


def t_value(state: FixedPointState, z_top, w, mu0: SpectralMeasure, b_sigma: float) -> complex:
    """Evaluate the trace functional at the top level of a solved chain.

    Pure evaluation; no iteration. ``z_top``, ``b_sigma`` and the measure
    must be the ones the state was solved for.
    """
    z_top = np.asarray(z_top, dtype=complex)
    if z_top.shape != state.z_top.shape or not np.allclose(
        z_top, state.z_top, rtol=0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(state.z_top))))
    ):
        raise ContractViolationError("state was solved for a different argument vector")
    if abs(b_sigma - state.b_sigma) > 1e-12:
        raise ContractViolationError("state was solved for a different b_sigma")
    w = np.asarray(w, dtype=complex)
    if w.shape != z_top.shape:
        raise ContractViolationError("weight vector length must match the argument vector")
    A, B = _bottom_moments(mu0, state.z_chain[0])
    return _t_eval(len(state.s), w, state.z_chain, A, B)


# ---------------------------------------------------------------------------
# Aspect-ratio (sample covariance) fixed point.


def _mp_solve(mu: SpectralMeasure, gamma: float, z: complex, opts: SolverOptions, warm=None):
    """Damped iteration of the aspect-ratio fixed point; returns diagnostics."""
    locs, wts = mu.locations, mu.weights
    rng = np.random.default_rng(opts.seed)

    def update(m):
        denom = locs * (1.0 - gamma - gamma * z * m) - z
        amin = np.abs(denom).min()
        if amin < 1e-300:
            return None
        return complex(np.sum(wts / denom))

    m = complex(warm) if warm is not None else -1.0 / z
    if m.imag <= 0:
        m = complex(m.real, 1e-12)
    best_m, best_resid = None, np.inf
    total_iters = 0
    damping = opts.damping
    reinits = 0
    while True:
        window_resid = np.inf
        failed = False
        for it in range(opts.max_iter):
            total_iters += 1
            new_m = update(m)
            if new_m is None or not np.isfinite(new_m):
                failed = True
                break
            resid = abs(new_m - m)
            if resid < best_resid and new_m.imag > 0:
                best_resid, best_m = resid, new_m
            if resid <= opts.tol:
                if new_m.imag > 0:
                    return new_m, total_iters, reinits, True, resid
                failed = True
                break
            m = m + damping * (new_m - m)
            if (it + 1) % STALL_WINDOW == 0:
                if resid > window_resid / STALL_FACTOR:
                    failed = True
                    break
                window_resid = resid
        reinits += 1
        if reinits > opts.max_reinits:
            return (
                best_m if best_m is not None else m,
                total_iters,
                reinits - 1,
                False,
                best_resid,
            )
        damping = max(min(damping, opts.damping * 0.5 ** reinits), opts.damping / 16.0)
        m = complex(rng.uniform(*opts.reinit_real), rng.uniform(*opts.reinit_imag))


def mp_stieltjes(
    mu: SpectralMeasure,
    gamma: float,
    z: complex,
    opts: SolverOptions = DEFAULT_OPTIONS,
    warm=None,
) -> complex:
    """Stieltjes transform of the aspect-ratio map of ``mu`` at ``z``.

    Solves ``m = integral of 1 / (x*(1 - gamma - gamma*z*m) - z)`` over the
    atoms by damped fixed-point iteration with random restarts.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("spectral argument must have Im z > 0")
    m, iters, reinits, ok, resid = _mp_solve(mu, gamma, z, opts, warm)
    if not ok:
        raise SolverError(
            f"aspect-ratio fixed point did not converge (best residual {resid:.3e})",
            best=m,
            residual=resid,
            iterations=iters,
            reinits=reinits,
        )
    return m


def _mp_conjugate_aware(mu, gamma, z, opts, warm=None):
    # Stieltjes transform extended to Im z < 0 by conjugate symmetry;
    # needed when a negative last coefficient flips the half-plane.
    if z.imag > 0:
        return mp_stieltjes(mu, gamma, z, opts, warm)
    return complex(np.conj(mp_stieltjes(mu, gamma, np.conj(z), opts, warm)))


_POINT_ONE = SpectralMeasure.point(1.0)


# ---------------------------------------------------------------------------
# Named limit transforms.


def _unit_w(depth: int) -> np.ndarray:
    w = np.zeros(depth + 2, dtype=complex)
    w[0] = 1.0
    return w


def _combo_z_top(coeffs: np.ndarray, z: complex) -> np.ndarray:
    z_top = coeffs.astype(complex)
    z_top[0] = coeffs[0] - z
    return z_top


def _combo_value(mu0, gammas, b_sigma, coeffs, z, opts, warm=None):
    z_top = _combo_z_top(coeffs, z)
    state = solve_chain(z_top, mu0, gammas, b_sigma, opts, warm)
    return t_value(state, z_top, _unit_w(len(gammas)), mu0, b_sigma), state


def ck_stieltjes(
    mu0: SpectralMeasure,
    gammas,
    b_sigma: float,
    z: complex,
    opts: SolverOptions = DEFAULT_OPTIONS,
    warm=None,
) -> complex:
    """Limit Stieltjes transform of the last-layer feature gram matrix.

    For a zero-mean-slope activation the limit is the plain aspect-ratio
    law of the last layer and does not depend on the input spectrum.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("spectral argument must have Im z > 0")
    gammas = np.asarray(gammas, dtype=float)
    if abs(b_sigma) < B_ZERO_TOL:
        return mp_stieltjes(_POINT_ONE, gammas[-1], z, opts, warm)
    coeffs = np.zeros(len(gammas) + 2)
    coeffs[-1] = 1.0
    value, _ = _combo_value(mu0, gammas, b_sigma, coeffs, z, opts, warm)
    return value


def linear_combo_stieltjes(
    mu0: SpectralMeasure,
    gammas,
    b_sigma: float,
    coeffs,
    z: complex,
    opts: SolverOptions = DEFAULT_OPTIONS,
    warm=None,
) -> complex:
    """Limit transform of ``coeffs[-1]*Id + sum coeffs[l]*G_l`` at ``z``.

    ``coeffs`` is the real vector ``(c_id, c_0, ..., c_L)`` with
    ``c_L != 0``; a layer with zero coefficient at the top must instead be
    dropped from the combination.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("spectral argument must have Im z > 0")
    gammas = np.asarray(gammas, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (len(gammas) + 2,):
        raise ValueError(f"need {len(gammas) + 2} coefficients for {len(gammas)} layers")
    if coeffs[-1] == 0.0:
        raise ValueError(
            "top-layer coefficient must be nonzero; drop the layer from the "
            "combination instead of zeroing it"
        )
    if abs(b_sigma) < B_ZERO_TOL:
        if np.any(coeffs[1:-1] != 0.0):
            raise ValueError(
                "zero-mean-slope activations admit no layered recursion; only "
                "combinations of Id and the top layer are defined"
            )
        scale = coeffs[-1]
        return _mp_conjugate_aware(
            _POINT_ONE, gammas[-1], (z - coeffs[0]) / scale, opts
        ) / scale
    value, _ = _combo_value(mu0, gammas, b_sigma, coeffs, z, opts, warm)
    return value


def ntk_stieltjes(
    mu0: SpectralMeasure,
    gammas,
    constants,
    b_sigma: float,
    z: complex,
    opts: SolverOptions = DEFAULT_OPTIONS,
    warm=None,
) -> complex:
    """Limit Stieltjes transform of the tangent kernel (scalar output)."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("spectral argument must have Im z > 0")
    gammas = np.asarray(gammas, dtype=float)
    if abs(b_sigma) < B_ZERO_TOL:
        # Identity shift of the last-layer aspect-ratio law.
        return mp_stieltjes(_POINT_ONE, gammas[-1], z - constants.r_plus, opts, warm)
    coeffs = np.concatenate([[constants.r_plus], constants.q, [1.0]])
    value, _ = _combo_value(mu0, gammas, b_sigma, coeffs, z, opts, warm)
    return value


def ntk_multi_coeffs(constants, taus) -> np.ndarray:
    """Coefficient vector for the rate-weighted tangent kernel."""
    taus = np.asarray(taus, dtype=float)
    depth = constants.depth
    if taus.shape != (depth + 1,):
        raise ValueError(f"need {depth + 1} rate weights for {depth} layers")
    if (taus <= 0).any():
        raise ValueError("rate weights must all be positive")
    shift = float(np.sum(taus[:depth] * (constants.r - constants.q)))
    return np.concatenate([[shift], taus[:depth] * constants.q, [taus[depth]]])


def ntk_multi_stieltjes(
    mu0: SpectralMeasure,
    gammas,
    constants,
    b_sigma: float,
    taus,
    z: complex,
    opts: SolverOptions = DEFAULT_OPTIONS,
    warm=None,
) -> complex:
    """Tangent-kernel limit with per-layer rate weights.

    The limit does not depend on the output dimension, so no output count
    is taken.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("spectral argument must have Im z > 0")
    gammas = np.asarray(gammas, dtype=float)
    coeffs = ntk_multi_coeffs(constants, taus)
    if abs(b_sigma) < B_ZERO_TOL:
        scale = coeffs[-1]
        return mp_stieltjes(
            _POINT_ONE, gammas[-1], (z - coeffs[0]) / scale, opts, warm
        ) / scale
    value, _ = _combo_value(mu0, gammas, b_sigma, coeffs, z, opts, warm)
    return value


def pennington_quartic_residual(
    mK: complex, mM: complex, phi: float, psi: float, zeta: float, z: complex
) -> float:
    """Consistency residual of the one-hidden-layer quartic characterization.

    For a single hidden layer on white Gaussian input data, the limit
    feature-gram spectrum is known to satisfy a quartic equation in the
    Stieltjes transform of the companion neuron-covariance matrix. Given
    ``mM`` (companion transform at ``z``) and ``mK`` (feature-gram
    transform at ``psi/phi * z``), this forms the auxiliary quantities of
    that equation and returns the absolute defect of the quartic relation.
    Used as an independent validation oracle for the recursion.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("spectral argument must have Im z > 0")
    if phi <= 0 or psi <= 0:
        raise ValueError("aspect parameters must be positive")
    if not (0.0 <= zeta <= 1.0):
        raise ValueError("zeta must lie in [0, 1]")
    gamma1 = psi / phi
    G = -complex(mM)
    P = (z * G - (1.0 - psi)) / psi
    P_psi = 1.0 + (P - 1.0) * psi
    P_phi = -gamma1 * z * complex(mK)
    t = 1.0 / (z * psi)
    core = t * P_phi * P_psi
    pole = 1.0 - zeta * core
    if abs(pole) < 1e-12:
        raise SingularArgumentError("quartic relation evaluated at its pole")
    rhs = 1.0 + (1.0 - zeta) * core + zeta * core / pole
    return float(abs(P - rhs))


# ---------------------------------------------------------------------------
# Density sweeps with warm starts.

KINDS = ("ck", "ntk", "ntk-multi", "combo")


def _kind_coeffs(kind, depth, constants=None, taus=None, coeffs=None):
    if kind == "ck":
        out = np.zeros(depth + 2)
        out[-1] = 1.0
        return out
    if kind == "ntk":
        if constants is None:
            raise ValueError("ntk curves need layer constants")
        return np.concatenate([[constants.r_plus], constants.q, [1.0]])
    if kind == "ntk-multi":
        if constants is None or taus is None:
            raise ValueError("ntk-multi curves need layer constants and rate weights")
        return ntk_multi_coeffs(constants, taus)
    if kind == "combo":
        if coeffs is None:
            raise ValueError("combo curves need an explicit coefficient vector")
        out = np.asarray(coeffs, dtype=float)
        if out.shape != (depth + 2,):
            raise ValueError(f"need {depth + 2} coefficients for {depth} layers")
        if out[-1] == 0.0:
            raise ValueError("top-layer coefficient must be nonzero")
        return out
    raise ValueError(f"unknown curve kind {kind!r}; choose from {KINDS}")


def _sweep_chain(coeffs, mu0, gammas, b_sigma, grid, eta, opts):
    depth = len(gammas)
    n = len(grid)
    density = np.zeros(n)
    iterations = np.zeros(n, dtype=int)
    converged = np.zeros(n, dtype=bool)
    reinits = np.zeros(n, dtype=int)
    clipped = np.zeros(n, dtype=bool)
    unit_w = _unit_w(depth)
    prev = []  # up to two (x, s) pairs of converged chains
    for j, x in enumerate(grid):
        z = complex(x, eta)
        z_top = _combo_z_top(coeffs, z)
        warm = None
        if len(prev) == 2:
            (x1, s1), (x2, s2) = prev
            step = (x - x2) / (x2 - x1)
            warm = s2 + (s2 - s1) * step
        elif len(prev) == 1:
            warm = prev[0][1]
        try:
            state = solve_chain(z_top, mu0, gammas, b_sigma, opts, warm)
        except SolverError as err:
            state = err.best
        iterations[j] = state.iterations
        reinits[j] = state.reinits
        converged[j] = state.converged
        if state.converged:
            prev = (prev + [(x, state.s)])[-2:]
        try:
            val = t_value(state, z_top, unit_w, mu0, b_sigma)
        except Exception:
            continue
        rho = val.imag / np.pi
        if not np.isfinite(rho):
            converged[j] = False
            continue
        if rho < NEGATIVE_DENSITY_TOL:
            clipped[j] = True
        density[j] = max(rho, 0.0)
    return density, iterations, converged, reinits, clipped


def _sweep_shifted_mp(coeffs, gamma_top, grid, eta, opts):
    shift, scale = coeffs[0], coeffs[-1]
    n = len(grid)
    density = np.zeros(n)
    iterations = np.zeros(n, dtype=int)
    converged = np.zeros(n, dtype=bool)
    reinits = np.zeros(n, dtype=int)
    clipped = np.zeros(n, dtype=bool)
    warm = None
    for j, x in enumerate(grid):
        z = (complex(x, eta) - shift) / scale
        if z.imag <= 0:
            # Negative top coefficient: evaluate by conjugate symmetry.
            m_up, iters, re, ok, _ = _mp_solve(_POINT_ONE, gamma_top, np.conj(z), opts, warm)
            m = np.conj(m_up)
        else:
            m_up, iters, re, ok, _ = _mp_solve(_POINT_ONE, gamma_top, z, opts, warm)
            m = m_up
        iterations[j], reinits[j], converged[j] = iters, re, ok
        if ok:
            warm = m_up
        rho = (m / scale).imag / np.pi
        if not np.isfinite(rho):
            converged[j] = False
            continue
        if rho < NEGATIVE_DENSITY_TOL:
            clipped[j] = True
        density[j] = max(rho, 0.0)
    return density, iterations, converged, reinits, clipped


def limit_density(
    kind: str,
    mu0: SpectralMeasure,
    gammas,
    b_sigma: float,
    grid,
    eta: float = 0.01,
    opts: SolverOptions = DEFAULT_OPTIONS,
    constants=None,
    taus=None,
    coeffs=None,
    n_chunks: int = 1,
    max_unconverged: float = 0.2,
) -> DensityCurve:
    """Limit density curve of a kernel family over a real grid.

    Sweeps the grid left to right, warm-starting each point from a linear
    extrapolation of the two preceding solved chains. With ``n_chunks > 1``
    the grid splits into contiguous chunks, each cold-starting its first
    two points, so results are deterministic per (seed, chunking).

    Points whose solver fails are flagged in the diagnostics rather than
    aborting the sweep; if more than ``max_unconverged`` of all points
    fail, a :class:`CurveQualityError` carrying the finished curve is
    raised.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or (np.diff(grid) <= 0).any():
        raise ValueError("grid must be strictly increasing with >= 2 points")
    if eta <= 0:
        raise ValueError("eta must be positive")
    gammas = np.asarray(gammas, dtype=float)
    cvec = _kind_coeffs(kind, len(gammas), constants, taus, coeffs)
    if abs(b_sigma) < B_ZERO_TOL:
        if kind == "combo" and np.any(cvec[1:-1] != 0.0):
            raise ValueError(
                "zero-mean-slope activations only admit curves for Id and the top layer"
            )
        sweep = lambda g: _sweep_shifted_mp(cvec, gammas[-1], g, eta, opts)
    else:
        sweep = lambda g: _sweep_chain(cvec, mu0, gammas, b_sigma, g, eta, opts)

    if n_chunks <= 1:
        parts = [np.arange(grid.size)]
    else:
        parts = np.array_split(np.arange(grid.size), n_chunks)
    density = np.zeros(grid.size)
    iterations = np.zeros(grid.size, dtype=int)
    converged = np.zeros(grid.size, dtype=bool)
    reinits = np.zeros(grid.size, dtype=int)
    clipped = np.zeros(grid.size, dtype=bool)
    if len(parts) == 1:
        results = [sweep(grid)]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            results = list(pool.map(lambda idx: sweep(grid[idx]), parts))
    for idx, res in zip(parts, results):
        density[idx], iterations[idx], converged[idx], reinits[idx], clipped[idx] = res

    curve = DensityCurve(
        grid=grid,
        density=density,
        eta=eta,
        iterations=iterations,
        converged=converged,
        reinits=reinits,
        clipped=clipped,
        metadata={
            "kind": kind,
            "b_sigma": b_sigma,
            "gammas": list(map(float, gammas)),
            "coefficients": list(map(float, cvec)),
        },
    )
    if curve.unconverged_fraction > max_unconverged:
        raise CurveQualityError(
            f"{curve.unconverged_fraction:.0%} of grid points failed to converge",
            curve=curve,
        )
    return curve


def shifted_curve_metadata(curve: DensityCurve, extra: dict) -> DensityCurve:
    """Curve with metadata merged in (curves are immutable)."""
    return replace(curve, metadata={**curve.metadata, **extra})
