"""Construction-A Voronoi lattice codes with Leech-lattice shaping.

Submodules: field (F_p arithmetic), ldpc (dual-diagonal nonbinary LDPC),
lattice (triangular generators, closest point, shaping gain), leech (the
scaled Leech generator and block shaping), voronoi (coset encoding and
demapping), decoder (beliefs and belief propagation), sim (AWGN harness),
cli (command line).
"""

from .field import Prime, fadd, finv, fmul, fsub, mod_p, validate_field_vec
from .lattice import (
    ShapingGainEstimate,
    TriangularGen,
    babai_round,
    closest_point,
    enumerate_within,
    load_generator,
    poltyrev_sigma_max,
    save_generator,
    shaping_gain_mc,
    sigma2_for_vnr,
    vnr,
    vnr_db,
    volume,
)
from .ldpc import (
    CodeParams,
    GirthError,
    ParityCheck,
    build_code,
    encode_systematic,
    load_matrix,
    optimize_row_coeffs,
    save_matrix,
    syndrome,
)
from .leech import (
    LeechGen,
    LeechValidationError,
    ShapingLattice,
    export_g24,
    load_g24,
    quantize_shaping,
    s_set_bounds,
    validate_g24,
)
from .voronoi import (
    DemapError,
    Message,
    VoronoiCode,
    code_rate,
    coset_leader,
    demap,
    encode,
    load_messages,
    sample_message,
    save_messages,
)
from .decoder import (
    BPDecoder,
    BPResult,
    DecodeResult,
    bp_decode,
    channel_beliefs,
    decode_point,
    lift_to_lattice,
    mmse_scale,
)
from .sim import (
    ConfigError,
    ExperimentConfig,
    PowerEstimate,
    SweepResult,
    build_config,
    capacity_anchor_db,
    emit_results,
    estimate_power,
    parse_config_file,
    pz_baseline,
    run_infinite,
    run_voronoi,
)

__version__ = "0.1.0"
