"""kahlermu: moment-map and Futaki-type invariants of Kahler manifolds.

Jet arithmetic supplies exact derivatives of chart potentials; from them the
library builds pointwise Kahler geometry, the moment map on the space of
symplectic connections, Chern-Weil forms and the associated Futaki-type
invariants, all integrated over a compactified chart by deterministic
Gauss-Legendre quadrature.
"""

from .jets import Jet, jet_space, jet_arith, jet_extract
from .charts import (
    CompactificationSpec,
    ConnectionField,
    CurvatureBundle,
    KahlerChartSpec,
    PointGeometry,
    bump_three_tensor,
    covariant_derivative,
    curvature,
    laplacian,
    normalized_potential_bump,
    point_geometry,
    radial_bump,
)
from .forms import FormValue
from .quadrature import QuadratureAtlas, build_atlas, integrate, mean_zero_project, mu_zero
from .moment import (
    MomentDensity,
    OmegaEPairing,
    lie_derivative_connection,
    moment_map_direct,
    moment_map_kahler,
    moment_property_check,
    omega_E_pair,
    pontryagin_density,
)
from .chern import (
    EndoL,
    chern_forms,
    endo_L,
    generalized_futaki_integrand,
    pontryagin_identity_residual,
)
from .fields import (
    HolomorphicFieldSpec,
    InvariantReport,
    character_check,
    class_invariance_check,
    compute_invariant_report,
    futaki_chern,
    futaki_generalized,
    futaki_moment,
    hamiltonian_field,
    holomorphic_residuals,
    registry_field,
)
from .manifolds import MANIFOLDS, builtin_manifold, load_manifold

__version__ = "0.1.0"

__all__ = [
    "Jet", "jet_space", "jet_arith", "jet_extract",
    "CompactificationSpec", "ConnectionField", "CurvatureBundle",
    "KahlerChartSpec", "PointGeometry", "FormValue", "QuadratureAtlas",
    "MomentDensity", "OmegaEPairing", "EndoL", "HolomorphicFieldSpec",
    "InvariantReport",
    "bump_three_tensor", "covariant_derivative", "curvature", "laplacian",
    "normalized_potential_bump", "point_geometry", "radial_bump",
    "build_atlas", "integrate", "mean_zero_project", "mu_zero",
    "lie_derivative_connection", "moment_map_direct", "moment_map_kahler",
    "moment_property_check", "omega_E_pair", "pontryagin_density",
    "chern_forms", "endo_L", "generalized_futaki_integrand",
    "pontryagin_identity_residual",
    "character_check", "class_invariance_check", "compute_invariant_report",
    "futaki_chern", "futaki_generalized", "futaki_moment",
    "hamiltonian_field", "holomorphic_residuals", "registry_field",
    "MANIFOLDS", "builtin_manifold", "load_manifold",
    "__version__",
]
