"""Closed-form link math for a zero-forcing massive-MIMO downlink.

Powers are linear inside every formula; dB only appears at the edges
(``db_to_linear`` / ``linear_to_db`` and :class:`PowerSplit`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import DomainError, InvalidArgumentError

SUPPORTED_MOD_ORDERS = (2, 4, 16, 64)
BUDGET_RTOL = 1e-9


@dataclass(frozen=True)
class ChannelConfig:
    """Base station with ``n_tx`` antennas serving ``n_users`` users that
    each have ``n_rx`` receive antennas, one stream per receive antenna."""

    n_tx: int
    n_users: int
    n_rx: int
    mod_order: int

    def __post_init__(self):
        for name in ("n_tx", "n_users", "n_rx", "mod_order"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise InvalidArgumentError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise InvalidArgumentError(f"{name} must be >= 1, got {value}")
        if self.mod_order not in SUPPORTED_MOD_ORDERS:
            raise InvalidArgumentError(
                f"mod_order must be one of {SUPPORTED_MOD_ORDERS}, got {self.mod_order}"
            )
        _check_regime(self)

    @property
    def streams(self) -> int:
        return self.n_users * self.n_rx

    @property
    def excess_antennas(self) -> int:
        return self.n_tx - self.streams

    def __str__(self):
        return (
            f"N_t={self.n_tx} K={self.n_users} N_r={self.n_rx} M={self.mod_order}"
        )


def _check_regime(cfg):
    if cfg.n_tx <= cfg.n_users * cfg.n_rx:
        raise DomainError(
            f"n_tx={cfg.n_tx} must exceed n_users*n_rx={cfg.n_users * cfg.n_rx}"
        )


def _finite(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} must be finite, got {x!r}")
    return arr


def _out(arr):
    return float(arr) if arr.ndim == 0 else arr


def db_to_linear(p_db):
    """10 ** (p_db / 10). Accepts scalars or arrays."""
    arr = _finite(p_db, "p_db")
    return _out(np.power(10.0, arr / 10.0))


def linear_to_db(p_lin):
    arr = _finite(p_lin, "p_lin")
    if np.any(arr <= 0):
        raise InvalidArgumentError(f"p_lin must be > 0, got {p_lin!r}")
    return _out(10.0 * np.log10(arr))


@dataclass(frozen=True)
class PowerSplit:
    """A total per-user budget and its division into per-layer powers.

    ``layer_db[0]`` is the base layer, ``layer_db[1]`` the enhancement layer.
    """

    total_db: float
    layer_db: tuple

    def __post_init__(self):
        _finite(self.total_db, "total_db")
        object.__setattr__(self, "layer_db", tuple(float(p) for p in self.layer_db))
        if not self.layer_db:
            raise InvalidArgumentError("layer_db must not be empty")
        _finite(self.layer_db, "layer_db")
        total = db_to_linear(self.total_db)
        used = math.fsum(db_to_linear(p) for p in self.layer_db)
        if abs(used - total) > BUDGET_RTOL * total:
            raise InvalidArgumentError(
                f"layer powers sum to {used!r} (linear) but the budget is {total!r}"
            )

    @classmethod
    def from_base_db(cls, total_db, base_db):
        """Two-layer split: the enhancement layer gets the linear remainder."""
        total = db_to_linear(total_db)
        base = db_to_linear(base_db)
        if base >= total:
            raise InvalidArgumentError(
                f"base power {base_db} dB leaves nothing of the {total_db} dB budget"
            )
        return cls(float(total_db), (float(base_db), linear_to_db(total - base)))

    @classmethod
    def equal(cls, total_db, n_layers=2):
        share = linear_to_db(db_to_linear(total_db) / n_layers)
        return cls(float(total_db), (share,) * n_layers)

    @property
    def layer_linear(self):
        return tuple(db_to_linear(p) for p in self.layer_db)


def stream_snr(p_lin, cfg: ChannelConfig):
    """Per-stream received SNR under ZF precoding, P * (N_t - K N_r)."""
    _check_regime(cfg)
    arr = _finite(p_lin, "p_lin")
    if np.any(arr <= 0):
        raise InvalidArgumentError(f"p_lin must be > 0, got {p_lin!r}")
    return _out(arr * cfg.excess_antennas)


def erfc_argument(p_lin, cfg: ChannelConfig):
    arr = _finite(p_lin, "p_lin")
    if np.any(arr < 0):
        raise InvalidArgumentError(f"p_lin must be >= 0, got {p_lin!r}")
    scale = cfg.excess_antennas / cfg.streams
    return np.sqrt(arr * scale) * math.sin(math.pi / cfg.mod_order)


def bit_error_prob(p_lin, cfg: ChannelConfig):
    """Bit-error probability of one stream.

    erfc(sqrt(P (N_t - K N_r) / (K N_r)) sin(pi / M)) / log2(M)

    Note the 1/(K N_r) inside the root, which ``stream_snr`` does not carry.
    """
    _check_regime(cfg)
    arg = erfc_argument(p_lin, cfg)
    return _out(erfc(arg) / math.log2(cfg.mod_order))


def packet_error_rate(pb, length_bits):
    """1 - (1 - pb) ** L, evaluated as -expm1(L * log1p(-pb)).

    Broadcasts over arrays of ``pb`` and ``length_bits``.
    """
    p = _finite(pb, "pb")
    if np.any((p < 0) | (p > 1)):
        raise InvalidArgumentError(f"pb must lie in [0, 1], got {pb!r}")
    length = np.asarray(length_bits)
    if length.dtype.kind not in "iuf" or np.any(length < 1) or np.any(length != np.floor(length)):
        raise InvalidArgumentError(f"length_bits must be integers >= 1, got {length_bits!r}")
    length = length.astype(np.float64)
    with np.errstate(divide="ignore"):
        per = -np.expm1(length * np.log1p(-p))
    per = np.where(p == 1.0, 1.0, per)
    per = np.where(length == 1.0, p, per)
    return _out(np.clip(per, 0.0, 1.0))
