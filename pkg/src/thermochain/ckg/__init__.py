"""Dissipative generator with Gibbs steady state: construction, locality
truncation, evolution diagnostics, and the local update channel."""

from .kernels import (
    QuadratureConfig,
    abs_b2_integral,
    b1_fourier,
    b1_fourier_quad,
    b1_time,
    b2_fourier,
    b2_fourier_quad,
    b2_time,
    coherent_norm_bound,
    gamma_weight,
    jump_norm_bound,
    jump_prefactor,
    omega_grid,
)
from .generator import (
    SIGN_CONVENTION,
    CKGGenerator,
    SiteBlock,
    build_ckg,
    choi_one_norm_upper,
    coherent_term,
    jump_operator,
    jump_operator_quadrature,
    sampled_one_norm,
    stationarity_residuals,
)
from .truncation import (
    DeltaBlock,
    apply_block_to_full,
    apply_region_superop,
    ball_sites,
    cached_truncated_blocks,
    delta_blocks,
    lift_superop,
    max_inner_ball,
    subset_generator_blocks,
    truncated_blocks,
)
from .evolution import (
    chi2,
    chi2_bound_audit,
    chi2_classical,
    evolve,
    mixing_curve,
    spectral_gap,
)
from .channel import (
    BPChannelResult,
    LayeredChannel,
    RegionChannel,
    bp_channel_lindblad,
    layer_regions,
    layered_channel,
    layered_local_evolution,
)
