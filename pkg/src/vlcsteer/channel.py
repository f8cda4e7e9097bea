"""Lambertian line-of-sight channel gain and single-link achievable rate.

Gain of one user under one beam:

    h = (gamma + 1) / (2 pi) * A_r * cos^gamma(phi) * cos(theta) / d^2

with phi the irradiance angle off the beam axis, theta the incidence angle
at the receiver, d the AP-user distance and gamma the Lambertian
directivity index.  The gain is clamped to exactly 0 whenever
cos(phi) <= 0 or cos(theta) <= 0: cos^gamma is undefined for a negative
base and non-integer gamma, and physically no light is collected.

Rate of a user with gain h (DC-biased intensity modulation, AWGN):

    R = B * log2(1 + (r * p * h)^2 / (N0 * B))    [bit/s]
"""

from dataclasses import dataclass

import numpy as np

from .geometry import (
    DegenerateGeometryError,
    cos_incidence,
    cos_irradiance,
    orientation_from_angles,
)


@dataclass(frozen=True)
class PhyParams:
    """Transmit/receive constants; all strictly positive.

    p: transmit optical power [W], r: photodiode responsivity [A/W],
    B: modulation bandwidth [Hz], N0: noise spectral density [A^2/Hz],
    A_r: receiver area [m^2].
    """

    p: float = 1.0
    r: float = 1.0
    B: float = 20e6
    N0: float = 2.5e-20
    A_r: float = 1e-4

    def __post_init__(self):
        for name in ("p", "r", "B", "N0", "A_r"):
            if not getattr(self, name) > 0:
                raise ValueError(f"PhyParams.{name} must be strictly positive")


@dataclass(frozen=True)
class BeamConfig:
    """One beam: steering angles in degrees plus directivity index."""

    alpha_deg: float
    beta_deg: float
    gamma: float


@dataclass(frozen=True)
class UserPose:
    """Receiver position [m] and unit orientation vector."""

    position: np.ndarray
    orientation: np.ndarray


def los_gain(tx_pos: np.ndarray, beam: BeamConfig, user: UserPose, A_r: float) -> float:
    """LOS channel gain via the angle form (cos phi, cos theta, distance)."""
    v = user.position - tx_pos
    n_tx = orientation_from_angles(beam.alpha_deg, beam.beta_deg)
    cphi = cos_irradiance(v, n_tx)
    cthe = cos_incidence(v, user.orientation)
    if cphi <= 0.0 or cthe <= 0.0:
        return 0.0
    d2 = float(np.dot(v, v))
    return (beam.gamma + 1.0) / (2.0 * np.pi) * A_r * cphi**beam.gamma * cthe / d2


def los_gain_components(tx_pos: np.ndarray, beam: BeamConfig, user: UserPose, A_r: float) -> float:
    """LOS channel gain via expanded component arithmetic (no explicit angles).

    Same quantity as :func:`los_gain`, written directly on the vector
    components:

        h = (gamma+1)/(2 pi) * A_r * (-v.n_rx) * (v.n_tx)^gamma
            / (v.v)^((gamma+3)/2)

    Kept as an independent evaluation route for cross-checking.
    """
    v = user.position - tx_pos
    norm_sq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    if norm_sq == 0.0:
        raise DegenerateGeometryError("degenerate geometry: user co-located with AP")
    a = np.deg2rad(beam.alpha_deg)
    b = np.deg2rad(beam.beta_deg)
    proj_tx = v[0] * np.cos(b) * np.cos(a) + v[1] * np.sin(b) * np.cos(a) + v[2] * np.sin(a)
    proj_rx = -(v[0] * user.orientation[0] + v[1] * user.orientation[1] + v[2] * user.orientation[2])
    if proj_tx <= 0.0 or proj_rx <= 0.0:
        return 0.0
    g = beam.gamma
    return (g + 1.0) / (2.0 * np.pi) * A_r * proj_tx**g * proj_rx / norm_sq ** ((g + 3.0) / 2.0)


def user_rate(h: float, phy: PhyParams) -> float:
    """Achievable rate [bit/s] for channel gain h >= 0."""
    if h == 0.0:
        return 0.0
    snr = (phy.r * phy.p * h) ** 2 / (phy.N0 * phy.B)
    return phy.B * np.log2(1.0 + snr)


def rates_from_gains(h: np.ndarray, phy: PhyParams) -> np.ndarray:
    """Vectorized :func:`user_rate`; zero gain maps to zero rate."""
    h = np.asarray(h, dtype=float)
    snr = (phy.r * phy.p * h) ** 2 / (phy.N0 * phy.B)
    return phy.B * np.log2(1.0 + snr)
