import numpy as np
import pytest

from svcuep import kernels
from svcuep.trace import Layer, Packet, PacketTrace
from svcuep.video import Frame, LayeredVideo, frame_from_luma


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    previous = kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)


def toy_video(n_enh=4, enh_dims=(8, 8), seed=0):
    """Tiny layered video with random content; base at half size and rate."""
    rng = np.random.default_rng(seed)
    w, h = enh_dims
    ref = [frame_from_luma(rng.integers(0, 256, (h, w), dtype=np.uint8)) for _ in range(n_enh)]
    enh = [frame_from_luma(rng.integers(0, 256, (h, w), dtype=np.uint8)) for _ in range(n_enh)]
    base = [frame_from_luma(rng.integers(0, 256, (h // 2, w // 2), dtype=np.uint8))
            for _ in range((n_enh + 1) // 2)]
    return LayeredVideo(tuple(base), tuple(enh), tuple(ref))


def toy_trace(n_enh=4, enh_dims=(8, 8), base_bits=100, enh_bits=100):
    w, h = enh_dims
    nb = (n_enh + 1) // 2
    packets = [Packet(Layer.BASE, j, base_bits) for j in range(nb)]
    packets += [Packet(Layer.ENH, k, enh_bits) for k in range(n_enh)]
    return PacketTrace(packets, {Layer.BASE: nb, Layer.ENH: n_enh},
                       {Layer.BASE: 15.0, Layer.ENH: 30.0},
                       {Layer.BASE: (w // 2, h // 2), Layer.ENH: (w, h)})


@pytest.fixture
def video4():
    return toy_video()


@pytest.fixture
def trace4():
    return toy_trace()
