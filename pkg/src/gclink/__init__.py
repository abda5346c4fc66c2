"""Burst-mode link simulation for galvanic-coupling intra-body channels."""

from gclink.channel import ChannelImpairments, add_awgn, apply_cfo_phase, apply_channel, apply_delay
from gclink.harness import (
    ExperimentSpec,
    ResultRow,
    compute_ber,
    compute_pb,
    emit_csv,
    run_sweep,
)
from gclink.preamble import (
    CorrelationProfile,
    Family,
    PreambleSequence,
    autocorrelation,
    generate_cazac,
    generate_golay_pair,
    generate_zadoff_chu,
    make_preamble,
    papr,
)
from gclink.rxsync import (
    CfoGrid,
    RxConfig,
    SyncEstimate,
    coarse_cfo,
    counter_rotate,
    detect_burst,
    downconvert_and_filter,
    fine_cfo,
    receive_burst,
    reference_preamble,
    wiener_design,
    wiener_equalize,
)
from gclink.txchain import (
    BurstFrame,
    SampledSignal,
    TxConfig,
    bpsk_map,
    build_burst,
    srrc_taps,
    transmit,
    upconvert,
    upsample_and_shape,
)

__version__ = "0.1.0"
