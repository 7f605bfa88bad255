"""Monte-Carlo packet losses, frame-loss mapping and error concealment.

Randomness comes from a counter-based generator: the uniform deciding
packet ``i`` in trial ``t`` is Philox4x32-10 keyed by the seed at counter
``(i, t, stream)``. Results therefore do not depend on evaluation order or
on how work is split across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, ValidationError
from .link import ChannelConfig, PowerSplit, bit_error_prob, packet_error_rate
from .trace import LAYERS, Layer, PacketTrace
from .video import LayeredVideo, gray_frame, upsample

LOSS_STREAM = 0
FILLER_LEVEL = 128


class Provenance(enum.Enum):
    FULL = kernels.FULL
    BASE_UPSAMPLED = kernels.BASE_UPSAMPLED
    PREV_COPY = kernels.PREV_COPY
    FILLER = kernels.FILLER


def check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < 2**64:
        raise InvalidArgumentError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def layer_bit_error(split: PowerSplit, cfg: ChannelConfig):
    if len(split.layer_db) != 2:
        raise InvalidArgumentError(f"need one power per layer (2), got {len(split.layer_db)}")
    return tuple(bit_error_prob(p, cfg) for p in split.layer_linear)


def packet_pers(trace: PacketTrace, split: PowerSplit, cfg: ChannelConfig):
    """Analytic loss probability of every packet in trace order."""
    pb = np.array(layer_bit_error(split, cfg))
    return packet_error_rate(pb[trace.layer_ids()], trace.lengths())


def expected_per(trace: PacketTrace, split: PowerSplit, cfg: ChannelConfig):
    """Per-layer mean over packets of 1 - (1 - Pb) ** L."""
    per = packet_pers(trace, split, cfg)
    ids = trace.layer_ids()
    out = {}
    for layer in LAYERS:
        sel = per[ids == layer.index]
        if sel.size == 0:
            raise ValidationError(f"layer has no packets: {layer.value}", "non-empty layer")
        out[layer] = float(np.mean(sel))
    return out


def total_per(trace: PacketTrace, split: PowerSplit, cfg: ChannelConfig) -> float:
    """Expected fraction of all packets lost (both layers pooled)."""
    return float(np.mean(packet_pers(trace, split, cfg)))


def loss_matrix(trace, per, seed, trials):
    """(len(trials), n_packets) boolean loss decisions."""
    u = kernels.uniform_grid(check_seed(seed), np.asarray(trials, dtype=np.int64),
                             len(trace), LOSS_STREAM)
    return u < per[None, :]


def frame_losses(trace: PacketTrace, lost):
    """Per-layer (trials, frames) masks; a frame is lost if any of its
    packets is."""
    lost = np.atleast_2d(lost)
    n_trials = lost.shape[0]
    ids = trace.layer_ids()
    frames = trace.frame_ids()
    out = {}
    for layer in LAYERS:
        nf = trace.n_frames[layer]
        sel = ids == layer.index
        flat = (np.arange(n_trials)[:, None] * nf + frames[sel][None, :])[lost[:, sel]]
        counts = np.bincount(flat, minlength=n_trials * nf)
        out[layer] = counts.reshape(n_trials, nf) > 0
    return out


@dataclass(frozen=True)
class LossOutcome:
    lost_packets: frozenset
    lost_frames: dict
    empirical_per: dict

    @classmethod
    def from_mask(cls, trace: PacketTrace, lost):
        lost = np.asarray(lost, dtype=bool).reshape(-1)
        if lost.size != len(trace):
            raise ValidationError(f"mask has {lost.size} entries for {len(trace)} packets",
                                  "one flag per packet")
        frames = frame_losses(trace, lost[None, :])
        ids = trace.layer_ids()
        per = {}
        for layer in LAYERS:
            sel = ids == layer.index
            per[layer] = float(lost[sel].mean()) if sel.any() else 0.0
        return cls(
            frozenset(int(i) for i in np.flatnonzero(lost)),
            {layer: frozenset(int(i) for i in np.flatnonzero(frames[layer][0])) for layer in LAYERS},
            per,
        )

    def mask(self, n_packets):
        m = np.zeros(n_packets, dtype=bool)
        m[list(self.lost_packets)] = True
        return m


def simulate_losses(trace: PacketTrace, split: PowerSplit, cfg: ChannelConfig,
                    seed, trial=0) -> LossOutcome:
    """One independent-Bernoulli loss realisation of the whole trace."""
    per = packet_pers(trace, split, cfg)
    lost = loss_matrix(trace, per, seed, [trial])[0]
    return LossOutcome.from_mask(trace, lost)


@dataclass(frozen=True)
class Reconstruction:
    frames: tuple
    provenance: tuple
    # source code per output frame, see ``kernels.conceal_sources``
    sources: tuple


def source_frame(code, video: LayeredVideo, _cache=None):
    """Materialise a concealment source code as a frame at enhancement size."""
    ne = len(video.enh_frames)
    nb = len(video.base_frames)
    if code < ne:
        return video.enh_frames[code]
    w, h = video.enh_dims
    if code < ne + nb:
        if _cache is not None and code in _cache:
            return _cache[code]
        f = upsample(video.base_frames[code - ne], w, h)
        if _cache is not None:
            _cache[code] = f
        return f
    return gray_frame(w, h, FILLER_LEVEL)


def conceal(outcome: LossOutcome, video: LayeredVideo, trace: PacketTrace) -> Reconstruction:
    """Rebuild the enhancement-rate output after losses.

    Runs frame by frame in order: a base-layer loss copies the previous
    *reconstructed* output frame, so this cannot be split across workers.
    Never reads frames after the one being produced.
    """
    video.check_trace(trace)
    nb = trace.n_frames[Layer.BASE]
    ne = trace.n_frames[Layer.ENH]
    base_lost = np.zeros((1, nb), dtype=bool)
    enh_lost = np.zeros((1, ne), dtype=bool)
    base_lost[0, list(outcome.lost_frames[Layer.BASE])] = True
    enh_lost[0, list(outcome.lost_frames[Layer.ENH])] = True
    src, prov = kernels.conceal_sources(base_lost, enh_lost, trace.fps_ratio)
    cache = {}
    frames = tuple(source_frame(int(c), video, cache) for c in src[0])
    return Reconstruction(
        frames,
        tuple(Provenance(int(p)) for p in prov[0]),
        tuple(int(c) for c in src[0]),
    )


def format_loss_csv(trace: PacketTrace, outcome: LossOutcome) -> str:
    lines = ["packet_idx,layer,frame_idx,lost"]
    for i, p in enumerate(trace.packets):
        lines.append(f"{i},{p.layer.value},{p.frame_idx},{int(i in outcome.lost_packets)}")
    return "\n".join(lines) + "\n"
