"""Curvature algebra, Weyl gap-constant estimation, model-manifold
obstructions, and Morse-theoretic total-curvature experiments for
hypersurfaces."""

from .algebra import (
    CartanVerdict,
    CurvTensor,
    CurvatureDecomposition,
    Spectrum,
    SymForm,
    VectorValuedForm,
    cartan_check,
    cartan_lorentzian_form,
    curvature_of_form,
    decompose,
    is_flat,
    kn_product,
    kn_product_valued,
    nullity_space,
    weyl_map,
)
from .gap import (
    EpsilonConfig,
    GapEstimate,
    GapPoint,
    Stratum,
    UniversalConstants,
    VerifyConfig,
    classify_stratum,
    eigen_signature,
    estimate_epsilon,
    grad_phi,
    phi,
    phi_batch,
    psi,
    sigma1,
    sigma2,
    universal_constants,
    verify_gap,
    vol_sphere,
)
from .hypersurfaces import (
    HypersurfaceSpec,
    Quadric,
    SurfacePoint,
    chart_frames,
    geometry_at,
    sample_frames,
)
from .models import (
    Factor,
    ModelGeometry,
    ModelSpec,
    ObstructionReport,
    betti_middle_sum,
    build_model,
    conformal_scale_check,
    fit_identity_coefficients,
    weyl_ricci_chain_check,
    minimal_identity_check,
    obstruction_report,
    pairwise_weyl_norm_sq,
    trace_bound_check,
    printed_identity_coefficients,
    weyl_energy,
)
from .morse import (
    AreaConfig,
    CriticalPoint,
    CriticalPointConfig,
    DegenerateDirection,
    DirectionConfig,
    TauEstimate,
    critical_points,
    morse_audit,
    pointwise_gap_check,
    tau_direction_side,
    tau_normal_bundle_side,
    weyl_energy_mc,
)

__version__ = "0.1.0"
