"""Numerical lab for graph hypersurfaces in the hyperbolic upper half-space.

Builds curvature tensors of vertical graphs x_{n+1} = f(x), classifies pointwise
convexity regimes, verifies the nonnegative-Ricci inequality chain down to
n-subharmonicity of the height log f, runs rigidity and recession-set analyses, and
provides a p-Dirichlet solver with a viscosity-comparison probe.
"""

from .asymptotics import RecessionReport, recession_report, sublevel_components
from .curvature import (FundamentalForms, ShapeSpectrum, codazzi_residual,
                        commutation_residual, fundamental_forms, gauss_residual,
                        mean_curvature, ricci_coordinate, ricci_eigenvalues,
                        ricci_from_shape, shape_spectrum)
from .errors import (DataError, DegenerateGradientError, DomainError, HypcurvError,
                     HypothesisContradiction, NumericError, ParameterError,
                     PreconditionError)
from .gridfn import GridFunction, load_grid_function, save_grid_function
from .heightfield import (Box, HeightField, Jet2, SampledGridField, fd_validate_jet,
                          field_from_descriptor, field_from_json, field_to_descriptor,
                          make_catalog_surface, sample_height_grid)
from .inequalities import (AdaptedJet, Regime, RegimeReport, adapted_frame,
                           convexity_classify, grad_direction_ricci, key_factors,
                           mean_bound_check, n_subharmonic_density, point_regime_report)
from .plaplace import (SolverConfig, comparison_check, p_dirichlet_energy,
                       solve_laplace_linear, solve_p_harmonic, viscosity_probe)
from .rigidity import (ConstancyScan, RigidityReport, Verdict, classify_global,
                       constancy_scan, flat_direction_check, rigidity_report)

__version__ = "0.1.0"
