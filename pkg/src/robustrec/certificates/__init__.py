"""RIP constants, spectral checks and golfing dual certificates."""
from .cs_golfing import (
    CsCertificate,
    CsDualityReport,
    Margin,
    build_cs_certificate,
    cs_partition_sizes,
    golfing_block_count,
    verify_cs_inexact_duality,
)
from .mc_golfing import (
    McCertificate,
    McDualityReport,
    assign_blocks,
    build_mc_certificate,
    mc_block_count,
    mc_block_rates,
    operator_norm,
    sampling_deviation,
    verify_mc_duality,
)
from .rip import (
    PROOF_THRESHOLD,
    STRICT_THRESHOLD,
    RipReport,
    check_cross_term,
    rip_constant_exact,
    rip_deviation,
    stability_constant,
    stability_regime,
)
from .spectral import SpectralMode, gaussian_norm_bound_probability, spectral_check_gaussian, spectral_check_rows

__all__ = [
    "CsCertificate",
    "CsDualityReport",
    "Margin",
    "build_cs_certificate",
    "cs_partition_sizes",
    "golfing_block_count",
    "verify_cs_inexact_duality",
    "McCertificate",
    "McDualityReport",
    "assign_blocks",
    "build_mc_certificate",
    "mc_block_count",
    "mc_block_rates",
    "operator_norm",
    "sampling_deviation",
    "verify_mc_duality",
    "PROOF_THRESHOLD",
    "STRICT_THRESHOLD",
    "RipReport",
    "check_cross_term",
    "rip_constant_exact",
    "rip_deviation",
    "stability_constant",
    "stability_regime",
    "SpectralMode",
    "gaussian_norm_bound_probability",
    "spectral_check_gaussian",
    "spectral_check_rows",
]
