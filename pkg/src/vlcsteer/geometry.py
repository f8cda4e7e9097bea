"""3D geometry for the LED downlink: steering angles, orientations, link angles.

Elevation alpha and azimuth beta are taken in degrees at every public
boundary (config files carry values like alpha_min = 200) and converted
to radians internally.  The orientation convention is

    n = [cos(beta)cos(alpha), sin(beta)cos(alpha), sin(alpha)],

so alpha = 270 deg points straight down from the ceiling.
"""

import numpy as np


class DegenerateGeometryError(ValueError):
    """Raised when a user sits exactly at the transmitter position."""


def orientation_from_angles(alpha_deg: float, beta_deg: float) -> np.ndarray:
    """Unit orientation vector for elevation/azimuth angles in degrees."""
    a = np.deg2rad(alpha_deg)
    b = np.deg2rad(beta_deg)
    ca = np.cos(a)
    return np.array([np.cos(b) * ca, np.sin(b) * ca, np.sin(a)])


def orientation_grid(alphas_deg: np.ndarray, betas_deg: np.ndarray) -> np.ndarray:
    """Orientations for the cartesian product of angle vectors.

    Returns an array of shape (len(alphas) * len(betas), 3), alpha-major,
    matching the linear ordering used by the gain grid.
    """
    a = np.deg2rad(np.asarray(alphas_deg, dtype=float))
    b = np.deg2rad(np.asarray(betas_deg, dtype=float))
    ca, sa = np.cos(a), np.sin(a)
    cb, sb = np.cos(b), np.sin(b)
    n = np.empty((a.size, b.size, 3))
    n[:, :, 0] = np.outer(ca, cb)
    n[:, :, 1] = np.outer(ca, sb)
    n[:, :, 2] = sa[:, None]
    return n.reshape(-1, 3)


def _checked_norm(v: np.ndarray) -> float:
    d = float(np.linalg.norm(v))
    if d == 0.0:
        raise DegenerateGeometryError("degenerate geometry: user co-located with AP")
    return d


def cos_irradiance(v: np.ndarray, n_tx: np.ndarray) -> float:
    """cos(phi): angle between the beam orientation and the AP->user vector v."""
    return float(np.dot(v, n_tx)) / _checked_norm(v)


def cos_incidence(v: np.ndarray, n_rx: np.ndarray) -> float:
    """cos(theta): angle between the receiver normal and the user->AP vector.

    v points AP->user, hence the sign flip.
    """
    return -float(np.dot(v, n_rx)) / _checked_norm(v)


def pointing_angles(v: np.ndarray) -> tuple[float, float]:
    """Elevation/azimuth in degrees of a beam aimed exactly along v.

    Chooses the branch with cos(alpha) >= 0 so that beta carries the full
    horizontal direction; beta in [0, 360), alpha in [270, 360] u [0, 90]
    depending on the sign of v_z.
    """
    _checked_norm(v)
    rho = float(np.hypot(v[0], v[1]))
    alpha = float(np.rad2deg(np.arctan2(v[2], rho))) % 360.0
    beta = float(np.rad2deg(np.arctan2(v[1], v[0]))) % 360.0
    return alpha, beta
