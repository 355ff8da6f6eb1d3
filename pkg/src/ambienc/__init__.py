"""Ambisonics encoding filters, encodability analysis and residual channels for arbitrary arrays."""

from .array import (
    ArrayGeometry,
    auto_order,
    load_geometry,
    make_array,
    radial_response,
    save_geometry,
    steering_matrix,
    steering_series,
    steering_sh,
)
from .binaural import (
    BinauralPair,
    HrtfSh,
    hrtf_to_sh,
    load_hrtf,
    render_ambisonics,
    render_decomposed,
    save_hrtf,
    sphere_hrtf,
    sphere_hrtf_sh,
)
from .encoding import (
    ChannelPartition,
    FilterBank,
    SingularSystemError,
    apply_filters,
    asm_filters,
    bsm_filters,
    channel_partition,
    encodability,
    residual_filters,
    truncated_sh_encoder,
)
from .metrics import DiffuseModel, monte_carlo_nmse, nmse_ambisonics, nmse_binaural
from .sh import Direction, SamplingGrid, acn, conjugation_matrix, make_grid, sh_eval, sh_matrix
from .special import spherical_radial

__version__ = "0.1.0"
