"""Motional heating comparisons across trap zones.

Electric-field noise with a power-law frequency spectrum heats an ion at
a rate proportional to S_E(omega); comparing two zones also requires the
usual ion-electrode distance scaling of the noise, taken here as d^-4.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class HeatingPoint:
    """One measured heating rate: quanta/s at a mode frequency and distance."""

    rate_quanta_s: float
    frequency_mhz: float
    distance_um: float

    def __post_init__(self) -> None:
        if self.rate_quanta_s < 0:
            raise ValueError("rate_quanta_s must be >= 0")
        if self.frequency_mhz <= 0:
            raise ValueError("frequency_mhz must be positive")
        if self.distance_um <= 0:
            raise ValueError("distance_um must be positive")


def scale_heating(point: HeatingPoint, target_frequency_mhz: float, alpha: float) -> float:
    """Heating rate rescaled to another mode frequency.

    Assumes S_E proportional to omega^-alpha, so the rate transforms as
    (f_target / f_source)^-alpha.
    """
    if target_frequency_mhz <= 0:
        raise ValueError("target frequency must be positive")
    return point.rate_quanta_s * (target_frequency_mhz / point.frequency_mhz) ** (-alpha)


def field_noise_ratio(
    a: HeatingPoint, b: HeatingPoint, alpha: float, distance_exponent: float = 4.0
) -> float:
    """Excess field noise at b relative to a.

    Scales a's rate to b's frequency (omega^-alpha) and to b's
    ion-electrode distance (d^-distance_exponent), then returns b's rate
    over that prediction.  A ratio of 1 means both zones share one noise
    level.  The distance exponent defaults to 4 (far-field patch noise)
    and is a parameter only so its influence can be probed.
    """
    predicted = scale_heating(a, b.frequency_mhz, alpha) * (
        a.distance_um / b.distance_um
    ) ** distance_exponent
    if predicted <= 0:
        raise ValueError("predicted rate is zero; cannot form a ratio")
    return b.rate_quanta_s / predicted


def kick_heating_rate(quanta_per_count: float, count_rate_s: float) -> float:
    """Heating from photon-detection recoil kicks: quanta per absorbed count."""
    if quanta_per_count < 0 or count_rate_s < 0:
        raise ValueError("inputs must be >= 0")
    return quanta_per_count * count_rate_s
