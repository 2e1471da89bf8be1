"""Deposition-evaporation surface growth encoded into 2D lattice states."""

from .params import ModelParams
from .surface import (
    EventOutcome,
    SiteShape,
    advance_slice,
    deposit_rule,
    evaporate_rule,
    event_distribution,
    horizon_profile,
    site_shape,
)
from .codec import (
    LatticeConfig,
    TrajectoryRecord,
    canonical_key,
    colored_area,
    decode_config,
    encode_trajectory,
    gauss_residual,
    key_to_config,
    zigzag_profile,
)
from .exact import (
    SparseState,
    build_state,
    enumerate_bridge,
    export_state_text,
    load_state,
    save_state,
    success_probability,
)
from .entropy import (
    EntropyReport,
    SurfaceDistribution,
    entropy_dp,
    entropy_exact,
    entropy_formula,
    fit_power_law,
    mid_cut_row,
    midcut_distribution,
    schmidt_spectrum,
)
from .hamiltonian import (
    DeformationState,
    LocalTerm,
    apply_operator,
    assemble_hamiltonian,
    build_boundary_terms,
    build_color_term,
    build_deformation_state,
    build_gauss_term,
    build_update_projector,
    expectation,
    export_terms_text,
    sector_spectrum,
    single_vertex_probability,
    term_residuals,
)
from .seqgen import (
    EmitterConfig,
    boundary_channels,
    fidelity,
    init_emitter,
    local_channel,
    run_generation,
)
from .scaling import (
    ObservableSeries,
    ensemble,
    exponent_report,
    roughness,
    run_free_dynamics,
    saturation_time,
)

__version__ = "0.1.0"
