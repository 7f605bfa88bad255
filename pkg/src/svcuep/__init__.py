"""Scalable-video transmission over zero-forcing massive-MIMO downlinks:
link error model, packet-loss simulation with concealment, quality
metrics, and unequal power allocation between SVC layers."""

__version__ = "0.1.0"

from .link import (ChannelConfig, PowerSplit, bit_error_prob, db_to_linear,  # noqa: E402
                   linear_to_db, packet_error_rate, stream_snr)
from .trace import Layer, Packet, PacketTrace, load_trace, save_trace, synth_trace, trace_stats  # noqa: E402,E501
from .video import Frame, LayeredVideo, read_yuv420, synth_video, write_yuv420  # noqa: E402
from .losses import (LossOutcome, Provenance, Reconstruction, conceal,  # noqa: E402
                     expected_per, simulate_losses, total_per)
from .quality import psnr_frame, spatial_info, ssim_frame, temporal_info  # noqa: E402
from .uep import (DEFAULT_CHANNEL, PUBLISHED_MODEL, RegressionModel, SweepConfig,  # noqa: E402
                  SweepResult, calibrate, fit_regression, pearson, predict, sweep)
