"""Disc geometry, Rayleigh fading and the composite link gain.

Every node sits uniformly in a disc of radius ``D`` around the relay.  A link
is summarised by ``x = |h|^2 / (1 + d^alpha)`` with ``|h|^2 ~ Exp(1)``.  For
``alpha = 2`` the distribution of ``x`` has the closed forms implemented by
:func:`cdf_x` and :func:`pdf_x`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Below this value of (1 + D^2) z the closed forms are replaced by their
# Taylor series; the closed forms cancel catastrophically near zero.
_SERIES_CUTOFF = 0.25
_SERIES_TERMS = 30


@dataclass(frozen=True)
class NetworkConfig:
    """Parameters of one cooperative network.

    ``tx_power`` is the per-source transmit SNR (noise normalised to 1).
    ``frame_duration`` cancels out of every harvested-power expression and is
    kept only so a config fully describes the physical setup.
    """

    num_pairs: int = 1
    disc_radius: float = 1.0
    path_loss_alpha: float = 2.0
    tx_power: float = 1000.0
    target_rate: float = 0.5
    harvest_efficiency: float = 1.0
    frame_duration: float = 1.0

    def __post_init__(self):
        if int(self.num_pairs) != self.num_pairs or self.num_pairs < 1:
            raise ValueError(f"num_pairs must be a positive integer, got {self.num_pairs}")
        if not self.disc_radius > 0:
            raise ValueError(f"disc_radius must be positive, got {self.disc_radius}")
        if not self.path_loss_alpha >= 2:
            raise ValueError(f"path_loss_alpha must be >= 2, got {self.path_loss_alpha}")
        if not self.tx_power > 0:
            raise ValueError(f"tx_power must be positive, got {self.tx_power}")
        if not self.target_rate > 0:
            raise ValueError(f"target_rate must be positive, got {self.target_rate}")
        if not 0 < self.harvest_efficiency <= 1:
            raise ValueError(f"harvest_efficiency must lie in (0, 1], got {self.harvest_efficiency}")
        if not self.frame_duration > 0:
            raise ValueError(f"frame_duration must be positive, got {self.frame_duration}")

    @property
    def threshold(self) -> float:
        """Decoding SNR threshold ``2^(2R) - 1``."""
        return 2.0 ** (2.0 * self.target_rate) - 1.0

    @classmethod
    def from_snr_db(cls, snr_db: float, **kwargs) -> "NetworkConfig":
        return cls(tx_power=10.0 ** (snr_db / 10.0), **kwargs)


@dataclass(frozen=True)
class LinkDraw:
    fading_gain: np.ndarray
    distance: np.ndarray
    composite: np.ndarray


def sample_link(config: NetworkConfig, rng: np.random.Generator, size=None) -> LinkDraw:
    """Draw links for nodes placed uniformly in the disc.

    The radius is ``D * sqrt(U)``, which has density ``2r/D^2`` on ``[0, D]``.
    Fading is drawn before the radius; simulations rely on that order.
    """
    gain = rng.standard_exponential(size)
    distance = config.disc_radius * np.sqrt(rng.random(size))
    if config.path_loss_alpha == 2:
        loss = 1.0 + distance * distance
    else:
        loss = 1.0 + distance**config.path_loss_alpha
    return LinkDraw(fading_gain=gain, distance=distance, composite=gain / loss)


def _check_radius(D):
    if not D > 0:
        raise ValueError(f"disc radius must be positive, got {D}")


def _series_coefficients(D: float) -> np.ndarray:
    # c_k = (-1)^k ((1 + D^2)^k - 1) / k!  for k = 2 .. _SERIES_TERMS + 1
    k = np.arange(2, _SERIES_TERMS + 2)
    log_fact = np.cumsum(np.log(np.arange(1, _SERIES_TERMS + 2)))[k - 1]
    mag = np.exp(k * np.log1p(D * D) - log_fact) * -np.expm1(-k * np.log1p(D * D))
    return np.where(k % 2 == 0, mag, -mag)


def cdf_x(z, D: float = 1.0):
    """CDF of ``x = |h|^2 / (1 + d^2)`` for a node uniform in a disc of radius ``D``.

    ``F(z) = 1 - e^{-z}/(D^2 z) + e^{-(1+D^2) z}/(D^2 z)``.  Near zero the
    Taylor series is used instead, whose leading term is ``z (D^2 + 2) / 2``.
    Accepts scalars or arrays.
    """
    _check_radius(D)
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0) or np.any(np.isnan(z_arr)):
        raise ValueError("cdf_x is defined for z >= 0")
    d2 = D * D
    small = (1.0 + d2) * z_arr < _SERIES_CUTOFF

    out = np.empty_like(z_arr)
    zs = z_arr[small]
    if zs.size:
        coef = _series_coefficients(D)  # F = sum_k c_k z^(k-1) / D^2
        out[small] = zs * np.polynomial.polynomial.polyval(zs, coef) / d2
    zl = z_arr[~small]
    if zl.size:
        with np.errstate(over="ignore", invalid="ignore"):
            val = 1.0 + np.exp(-zl) * np.expm1(-d2 * zl) / (d2 * zl)
        val[np.isinf(zl)] = 1.0
        out[~small] = val
    np.clip(out, 0.0, 1.0, out=out)
    return out if out.ndim else float(out)


def pdf_x(z, D: float = 1.0):
    """Density of ``x``: ``[(1+z)e^{-z} - (1+z+zD^2)e^{-(1+D^2)z}] / (D^2 z^2)``.

    Requires ``z > 0``; tends to ``D^2/2 + 1`` as ``z -> 0``.
    """
    _check_radius(D)
    z_arr = np.asarray(z, dtype=float)
    if np.any(~(z_arr > 0)):
        raise ValueError("pdf_x is defined for z > 0")
    d2 = D * D
    small = (1.0 + d2) * z_arr < _SERIES_CUTOFF

    out = np.empty_like(z_arr)
    zs = z_arr[small]
    if zs.size:
        coef = _series_coefficients(D)
        # derivative of sum_k c_k z^(k-1): sum_k (k-1) c_k z^(k-2)
        dcoef = coef * np.arange(1, coef.size + 1)
        out[small] = np.polynomial.polynomial.polyval(zs, dcoef) / d2
    zl = z_arr[~small]
    if zl.size:
        with np.errstate(over="ignore", invalid="ignore"):
            num = (1.0 + zl) * np.exp(-zl) - (1.0 + zl + zl * d2) * np.exp(-(1.0 + d2) * zl)
            val = num / (d2 * zl * zl)
        val[np.isinf(zl)] = 0.0
        out[~small] = val
    np.maximum(out, 0.0, out=out)
    return out if out.ndim else float(out)


def exponential_rate(D: float) -> float:
    """Rate ``a = (D^2 + 2) / 2`` of the exponential fit to ``pdf_x`` near zero."""
    return 0.5 * (D * D + 2.0)


def pdf_x_exp_approx(z, D: float = 1.0):
    """Exponential surrogate ``a e^{-a z}`` matching ``pdf_x`` at ``z = 0``."""
    _check_radius(D)
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0):
        raise ValueError("pdf_x_exp_approx is defined for z >= 0")
    a = exponential_rate(D)
    out = a * np.exp(-a * z_arr)
    return out if out.ndim else float(out)
