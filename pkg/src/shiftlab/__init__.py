"""Exact classification and spectral analysis of unilateral weighted shifts."""

from .classify import (
    ConsistencyError,
    Verdict,
    build_class_report,
    class_Ainf_sufficient,
    class_Ak,
    is_concave,
    is_expansion,
    is_weakly_concave,
    is_weakly_concave_power,
    m_isometry_order,
    przyk_classify,
)
from .exact import Poly, real_root_count
from .spectra import (
    adjoint_kernel_dim,
    dichotomy_check,
    fredholm_index,
    inner_radius,
    spectral_picture,
    spectral_radius,
)
from .trunc import (
    GridSpec,
    Model,
    ap_spectrum_grid,
    carey_pincus_monomial,
    range_tprime_k_check,
    sigma_min_lower,
    trace_self_commutator,
    uv_limits,
    wold_split,
)
from .weights import (
    ShiftOp,
    SpecError,
    bm_diag,
    constant_shift,
    dual_weights,
    isometry,
    make_shift,
    sk_weights,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
