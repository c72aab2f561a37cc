"""Finite-SNR simulator for coded-caching delivery over a MISO downlink.

Three schemes share the Maddah-Ali/Niesen cache placement and are compared on
the same fading realizations: max-min fair multicast of XOR messages, and two
joint zero-forcing designs that combine mini-files in the complex field and
in the finite field respectively.
"""

from .combinatorics import (
    ConfigError,
    IndexCounter,
    SubfileId,
    SystemConfig,
    decode_count_identity,
    enumerate_subsets,
    generate_files,
    index_init,
    index_update,
    placement_map,
)
from .channel import (
    ChannelMatrix,
    SignalBlock,
    block_power,
    received_signal,
    sample_channel,
)
from .beamforming import (
    BeamVector,
    DegenerateChannelError,
    beams_for_subset,
    maxmin_beamformer,
    maxmin_value_monotonicity_check,
    zero_forcing_bfv,
)
from .rates import (
    RateReport,
    dof,
    groupcast_rate,
    mac_effective_rate,
    mn_transmission_length,
    subset_rate_complex,
    subset_rate_finite,
    symrate_complex,
    symrate_finite,
    symrate_maxmin,
)
from .delivery import (
    DeliveryTranscript,
    DemandVector,
    SigmaAssignment,
    VerificationReport,
    assign_sigmas,
    build_unitary,
    dump_transcript,
    run_delivery_complex,
    run_delivery_finite,
    verify_delivery,
    worst_case_demand,
)
from .harness import (
    SweepResult,
    SweepSpec,
    emit_csv,
    emit_plot,
    estimate_dof,
    find_crossover,
    read_sweep_csv,
    run_sweep,
)

__version__ = "0.1.0"
