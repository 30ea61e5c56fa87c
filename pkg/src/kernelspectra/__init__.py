"""Spectral limits of deep-network kernel matrices.

Computes the wide-network limit eigenvalue densities of the conjugate
kernel (last-layer feature gram) and the neural tangent kernel (Jacobian
gram) of fully-connected networks whose hidden widths grow linearly with
the sample count, and cross-checks them against finite-width Monte-Carlo
simulation.

Main entry points:

- :mod:`kernelspectra.activations` -- normalized scalar nonlinearities and
  their Gaussian moment constants.
- :mod:`kernelspectra.measures` -- atomic spectral measures, Stieltjes
  transforms, density curves.
- :mod:`kernelspectra.limits` -- the deterministic-limit fixed-point engine.
- :mod:`kernelspectra.netsim` -- finite-width network simulation and exact
  kernel assembly.
- :mod:`kernelspectra.spectra` -- eigenvalue extraction and empirical-vs-limit
  comparison metrics.
- :mod:`kernelspectra.cli` -- batch command line driver.
"""

__version__ = "0.1.0"

from kernelspectra.activations import (
    Activation,
    LayerConstants,
    builtin_activation,
    gaussian_moment,
    layer_constants,
    normalize_activation,
)
from kernelspectra.measures import (
    DensityCurve,
    SpectralMeasure,
    cdf_from_curve,
    density_from_stieltjes,
    mp_atoms,
    rational_moment,
    stieltjes,
)
from kernelspectra.limits import (
    FixedPointState,
    SolverOptions,
    ck_stieltjes,
    limit_density,
    linear_combo_stieltjes,
    mp_stieltjes,
    ntk_multi_stieltjes,
    ntk_stieltjes,
    pennington_quartic_residual,
    solve_chain,
    t_value,
)
from kernelspectra.netsim import (
    LayerStack,
    NetworkShape,
    OrthonormalityReport,
    check_orthonormal,
    ck_matrix,
    forward,
    ntk_explicit,
    ntk_jacobian_oracle,
    ntk_multi_explicit,
    ntk_surrogate,
    remove_top_pcs,
    sample_input,
)
from kernelspectra.spectra import (
    ComparisonReport,
    EigenSpectrum,
    compare,
    eigenvalues_symmetric,
    empirical_stieltjes,
    histogram,
)

__all__ = [
    "Activation",
    "LayerConstants",
    "builtin_activation",
    "gaussian_moment",
    "layer_constants",
    "normalize_activation",
    "DensityCurve",
    "SpectralMeasure",
    "cdf_from_curve",
    "density_from_stieltjes",
    "mp_atoms",
    "rational_moment",
    "stieltjes",
    "FixedPointState",
    "SolverOptions",
    "ck_stieltjes",
    "limit_density",
    "linear_combo_stieltjes",
    "mp_stieltjes",
    "ntk_multi_stieltjes",
    "ntk_stieltjes",
    "pennington_quartic_residual",
    "solve_chain",
    "t_value",
    "LayerStack",
    "NetworkShape",
    "OrthonormalityReport",
    "check_orthonormal",
    "ck_matrix",
    "forward",
    "ntk_explicit",
    "ntk_jacobian_oracle",
    "ntk_multi_explicit",
    "ntk_surrogate",
    "remove_top_pcs",
    "sample_input",
    "ComparisonReport",
    "EigenSpectrum",
    "compare",
    "eigenvalues_symmetric",
    "empirical_stieltjes",
    "histogram",
]
