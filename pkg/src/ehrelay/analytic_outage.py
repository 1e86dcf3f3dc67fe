"""High-SNR outage approximations for a pair inside a coalition of size ``m``.

The per-pair outage is the first-hop failure probability ``F(eps/P)`` plus the
second-hop failure, conditioned on how many coalition members reached the
relay::

    P_m ~ F(eps/P) + sum_{n=1}^{m} (n/m) Q2(n) C(m, n) F^(m-n) (1-F)^n

``Q2(n)`` is the destination-side failure probability when ``n`` messages
were decoded, evaluated in closed form with ``K_{n+1}``.  The asymptotic
expressions (``1/P`` for ``m >= 2``, ``ln P / P`` for singletons) are in
:func:`outage_asymptotic`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate

from .channel_model import NetworkConfig, cdf_x, exponential_rate
from .special_functions import EULER_GAMMA, bessel_k

C0 = EULER_GAMMA - 0.75

# Switch from the cancellation-free expansion of Q2 to the direct Bessel form
# once (1 + D^2) a varpi exceeds this.
_DIRECT_BESSEL_ABOVE = 1.0


class ApproximationWarning(UserWarning):
    """A high-SNR approximation left its range of validity."""


class Flagged(NamedTuple):
    value: float
    valid: bool
    raw: float


class AsymptoticOutage(NamedTuple):
    value: float
    valid: bool
    constant: float
    log_coefficient: float


class DecayFit(NamedTuple):
    slope: float
    intercept: float
    log_coefficient: float

    @property
    def relative_slope(self) -> float:
        return self.slope / self.intercept


@dataclass(frozen=True)
class AnalyticContext:
    """Inputs of the closed forms for one coalition size (``alpha = 2`` only)."""

    disc_radius: float
    threshold: float
    efficiency: float
    tx_power: float
    size: int = 1

    def __post_init__(self):
        if not self.disc_radius > 0:
            raise ValueError("disc_radius must be positive")
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")
        if not self.tx_power > 0:
            raise ValueError("tx_power must be positive")
        if int(self.size) != self.size or self.size < 1:
            raise ValueError("coalition size must be a positive integer")

    @classmethod
    def from_config(cls, config: NetworkConfig, size: int | None = None) -> "AnalyticContext":
        if config.path_loss_alpha != 2:
            raise ValueError("closed-form outage requires path_loss_alpha == 2")
        return cls(
            disc_radius=config.disc_radius,
            threshold=config.threshold,
            efficiency=config.harvest_efficiency,
            tx_power=config.tx_power,
            size=config.num_pairs if size is None else size,
        )

    def with_size(self, size: int) -> "AnalyticContext":
        return replace(self, size=size)

    def with_tx_power(self, tx_power: float) -> "AnalyticContext":
        return replace(self, tx_power=tx_power)

    @property
    def a(self) -> float:
        return exponential_rate(self.disc_radius)

    @property
    def p_fail(self) -> float:
        return cdf_x(self.threshold / self.tx_power, self.disc_radius)

    def varpi(self, n: int) -> float:
        return n * self.threshold / (self.efficiency * self.tx_power)


def prob_decode_set_size(m: int, n: int, p_fail: float) -> float:
    """Probability that exactly ``n`` of ``m`` i.i.d. first hops succeed."""
    if not 0 <= n <= m:
        raise ValueError(f"need 0 <= n <= m, got n={n}, m={m}")
    if not 0.0 <= p_fail <= 1.0:
        raise ValueError(f"p_fail must be a probability, got {p_fail}")
    return math.comb(m, n) * p_fail ** (m - n) * (1.0 - p_fail) ** n


def _clamp(raw: float, what: str) -> Flagged:
    if 0.0 <= raw <= 1.0:
        return Flagged(raw, True, raw)
    warnings.warn(f"{what} = {raw:.6g} outside [0, 1]; clamped", ApproximationWarning, stacklevel=3)
    return Flagged(min(max(raw, 0.0), 1.0), False, raw)


def _q2n_bessel(n: int, a: float, d2: float, varpi: float) -> float:
    def term(b):
        return 2.0 / (d2 * varpi) * (b / a) ** ((n + 1) / 2) * bessel_k(n + 1, 2.0 * math.sqrt(a * b))

    bracket = math.factorial(n - 1) * a ** (-n) - term(varpi) + term((1.0 + d2) * varpi)
    return a**n / math.factorial(n - 1) * bracket


def _log_tail(n: int, s: float) -> float:
    # s^(n+1) sum_j [psi(j+1) + psi(n+j+2) - ln s] s^j / (j! (n+1+j)!)
    psi_a = -EULER_GAMMA
    psi_b = -EULER_GAMMA + sum(1.0 / k for k in range(1, n + 2))
    log_s = math.log(s)
    t = 1.0 / math.factorial(n + 1)
    total = 0.0
    for j in range(200):
        if j:
            psi_a += 1.0 / j
            psi_b += 1.0 / (n + 1 + j)
            t *= s / (j * (n + 1 + j))
        piece = (psi_a + psi_b - log_s) * t
        total += piece
        if abs(piece) <= 1e-17 * abs(total):
            break
    return s ** (n + 1) * total


def _q2n_expanded(n: int, a: float, d2: float, varpi: float) -> float:
    # Same expression with K_{n+1} replaced by its ascending series; the
    # constant term and the (n-1)! a^-n term cancel analytically.
    s1 = a * varpi
    grow = 1.0 + d2
    poly = 0.0
    for k in range(2, n + 1):
        poly += (-1) ** k * math.factorial(n - k) / math.factorial(k) * s1**k * -math.expm1(k * math.log1p(d2))
    logs = _log_tail(n, s1) - _log_tail(n, grow * s1)
    return -(poly + (-1) ** (n + 1) * logs) / (math.factorial(n - 1) * d2 * s1)


def q2n_closed_form(ctx: AnalyticContext, n: int) -> Flagged:
    """Second-hop outage given ``n`` decoded messages, closed form.

    Evaluates::

        a^n/(n-1)! [ (n-1)! a^-n
                     - 2/(D^2 w) (w/a)^((n+1)/2) K_{n+1}(2 sqrt(w a))
                     + 2/(D^2 w) ((1+D^2) w/a)^((n+1)/2) K_{n+1}(2 sqrt((1+D^2) w a)) ]

    with ``w = n eps / (eta P)``.  At high SNR the three terms are ``O(1/w)``
    and cancel to ``O(w)``, so for small ``(1+D^2) a w`` the Bessel functions
    are expanded and the cancelling terms removed before summation.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    a = ctx.a
    d2 = ctx.disc_radius**2
    varpi = ctx.varpi(n)
    if (1.0 + d2) * a * varpi > _DIRECT_BESSEL_ABOVE:
        raw = _q2n_bessel(n, a, d2, varpi)
    else:
        raw = _q2n_expanded(n, a, d2, varpi)
    return _clamp(raw, f"Q2(n={n})")


def q2n_quadrature(ctx: AnalyticContext, n: int) -> float:
    """Quadrature of ``a^n/(n-1)! int_0^inf F(w/t) e^{-a t} t^{n-1} dt``.

    Independent of the Bessel algebra; used to check :func:`q2n_closed_form`.
    """
    a = ctx.a
    D = ctx.disc_radius
    varpi = ctx.varpi(n)
    log_norm = n * math.log(a) - math.lgamma(n)

    def integrand(u):
        t = math.exp(u)
        return cdf_x(varpi / t, D) * math.exp(log_norm - a * t + n * u)

    t_lo = varpi * 1e-12
    t_hi = (80.0 + 2.0 * n * math.log(n + 10.0)) / a
    knots = sorted({math.log(t_lo), math.log(varpi), math.log(1.0 / a), math.log(t_hi)})
    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        piece, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-12, limit=400)
        total += piece
    return total


def outage_theorem1(ctx: AnalyticContext) -> Flagged:
    """High-SNR outage of one pair in a coalition of ``ctx.size`` pairs."""
    m = ctx.size
    p_fail = ctx.p_fail
    valid = True
    total = p_fail
    for n in range(1, m + 1):
        q = q2n_closed_form(ctx, n)
        valid &= q.valid
        total += n / m * q.value * prob_decode_set_size(m, n, p_fail)
    out = _clamp(total, f"outage(m={m})")
    return Flagged(out.value, valid and out.valid, total)


def outage_asymptotic(ctx: AnalyticContext) -> AsymptoticOutage:
    """Closed-form limits of the outage as ``P -> infinity``.

    ``m >= 2``: ``(eps D^2/2 + (D^2+2)^2 eps/(4 eta) * m/(m-1)) / P``.

    ``m = 1``::

        (eps D^2/2 + eps (D^2+2)/(2 eta D^2) [ ln sqrt(a eps/(eta P)) + c0
            - (1+D^2)^2 (ln sqrt((1+D^2) eps a/(eta P)) + c0) ]) / P

    Written as ``(constant + log_coefficient * ln P) / P``.  The singleton
    result is flagged invalid when the bracket is not positive.
    """
    m = ctx.size
    eps, eta, P = ctx.threshold, ctx.efficiency, ctx.tx_power
    d2 = ctx.disc_radius**2
    a = ctx.a
    first_hop = eps * d2 / 2.0

    if m >= 2:
        constant = first_hop + (d2 + 2.0) ** 2 * eps / (4.0 * eta) * m / (m - 1)
        raw = constant / P
        valid = True
        log_coefficient = 0.0
    else:
        grow2 = (1.0 + d2) ** 2
        scale = eps * (d2 + 2.0) / (2.0 * eta * d2)
        bracket_const = 0.5 * math.log(a * eps / eta) + C0 - grow2 * (0.5 * math.log((1.0 + d2) * eps * a / eta) + C0)
        log_coefficient = scale * 0.5 * (grow2 - 1.0)
        constant = first_hop + scale * bracket_const
        bracket = bracket_const + 0.5 * (grow2 - 1.0) * math.log(P)
        raw = (constant + log_coefficient * math.log(P)) / P
        valid = bracket > 0
        if not valid:
            warnings.warn(
                f"singleton asymptote bracket {bracket:.4g} <= 0 at P={P:.4g}; SNR too low",
                ApproximationWarning,
                stacklevel=2,
            )

    out = _clamp(raw, f"asymptotic outage(m={m})")
    return AsymptoticOutage(out.value, valid and out.valid, constant, log_coefficient)


def decay_rate_probe(ctx: AnalyticContext, snr_db: Sequence[float]) -> DecayFit:
    """Least-squares fit of ``P * outage`` against ``ln P`` over an SNR ladder.

    A slope near zero means pure ``1/P`` decay; a positive slope means
    ``ln P / P``.  ``log_coefficient`` is the slope predicted by
    :func:`outage_asymptotic` (zero for ``m >= 2``).
    """
    powers = 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)
    if powers.size < 2:
        raise ValueError("need at least two SNR points")
    scaled = np.array([p * outage_theorem1(ctx.with_tx_power(p)).value for p in powers])
    slope, intercept = np.polyfit(np.log(powers), scaled, 1)
    predicted = outage_asymptotic(ctx.with_tx_power(float(powers[-1]))).log_coefficient
    return DecayFit(float(slope), float(intercept), predicted)
