import numpy as np
import pytest

from svcuep.errors import ValidationError
from svcuep.video import (Frame, LayeredVideo, downsample2, frame_from_luma, gray_frame,
                          read_yuv420, synth_video, upsample, write_yuv420)


def test_frame_plane_checks():
    with pytest.raises(ValidationError):
        Frame(np.zeros((4, 4), np.uint8), np.zeros((3, 2), np.uint8), np.zeros((2, 2), np.uint8))
    with pytest.raises(ValidationError):
        Frame(np.full((4, 4), 300), np.zeros((2, 2)), np.zeros((2, 2)))


def test_frames_are_read_only():
    f = gray_frame(8, 8)
    with pytest.raises(ValueError):
        f.y[0, 0] = 1


def test_yuv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    frames = [Frame(rng.integers(0, 256, (6, 8)), rng.integers(0, 256, (3, 4)),
                    rng.integers(0, 256, (3, 4))) for _ in range(3)]
    path = tmp_path / "v.yuv"
    write_yuv420(path, frames)
    assert path.stat().st_size == 3 * 8 * 6 * 3 // 2
    back = read_yuv420(path, 8, 6)
    assert len(back) == 3
    assert all(a.equals(b) for a, b in zip(frames, back))
    assert len(read_yuv420(path, 8, 6, n_frames=2)) == 2


def test_yuv_partial_frame(tmp_path):
    path = tmp_path / "v.yuv"
    path.write_bytes(b"\0" * 100)
    with pytest.raises(ValidationError):
        read_yuv420(path, 8, 6)


def test_bilinear_upsample_hand_computed():
    base = frame_from_luma(np.array([[0, 16], [32, 48]], np.uint8))
    up = upsample(base, 4, 4)
    assert up.y.tolist() == [
        [0, 4, 12, 16],
        [8, 12, 20, 24],
        [24, 28, 36, 40],
        [32, 36, 44, 48],
    ]
    assert up.u.tolist() == [[128, 128], [128, 128]]


def test_upsample_rounds_half_up():
    # 0.75 * 0 + 0.25 * 2 = 0.5 -> 1
    up = upsample(frame_from_luma(np.array([[0, 2], [0, 2]], np.uint8)), 4, 4)
    assert up.y[0].tolist() == [0, 1, 2, 2]


def test_upsample_identity_and_bad_factor():
    f = gray_frame(8, 8)
    assert upsample(f, 8, 8) is f
    with pytest.raises(ValidationError):
        upsample(f, 12, 10)


def test_downsample_box():
    f = frame_from_luma(np.array([[0, 2, 4, 4], [2, 4, 4, 4], [0, 0, 9, 9], [0, 1, 9, 9]], np.uint8))
    assert downsample2(f).y.tolist() == [[2, 4], [0, 9]]


def test_synth_video_layout():
    v = synth_video(5, seed=3, enh_dims=(64, 48))
    assert len(v.ref_frames) == len(v.enh_frames) == 5
    assert len(v.base_frames) == 3
    assert v.base_dims == (32, 24) and v.enh_dims == (64, 48)
    again = synth_video(5, seed=3, enh_dims=(64, 48))
    assert all(a.equals(b) for a, b in zip(v.ref_frames, again.ref_frames))


def test_layered_video_validation():
    a = gray_frame(8, 8)
    with pytest.raises(ValidationError):
        LayeredVideo((gray_frame(4, 4),), (a, a), (a,))
    with pytest.raises(ValidationError):
        LayeredVideo((gray_frame(4, 4),), (a, gray_frame(16, 16)), (a, a))
