"""Photon collection geometry and detection-efficiency calibration.

An emitter sits above a rectangular single-photon detector that is
recessed below the surrounding electrode plane.  Emission follows the
angular pattern of a circularly rotating dipole perpendicular to the
in-plane quantization axis: intensity (3/16pi) (1 + cos^2 theta_q) per
steradian, where theta_q is measured from the quantization axis.

The detector plane is tiled into grid cells.  Each cell contributes its
solid angle, the dipole weight, an internal detection efficiency, and an
absorption probability (AP) that depends on incidence angle and
polarization.  The emitted field at each cell is split into TE (E-field
parallel to the detector plane) and TM components by intensity, and the
AP surfaces are blended with those weights.

Coordinates: x along the trap axis, y transverse in-plane, z up.  The
electrode top plane is z = 0; the detector plane sits at z = -recess.
Cells whose line of sight to the emitter crosses z = 0 outside the
recess opening are excluded (the electrode edge blocks them).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .rfcircuit import BiasCountCurve

DEFAULT_DECAY_RATE_S = 1.0 / 8.850e-9  # excited-state decay rate, 1/s


class APCoverageError(ValueError):
    """An AP lookup fell outside the tabulated (theta, phi) grid."""


@dataclass(frozen=True)
class APSurface:
    """Absorption probability tables on a regular (theta, phi) grid.

    theta_deg is the incidence polar angle from the detector normal,
    phi_deg the azimuth measured from the nanowire axis.  Bilinear
    interpolation between grid points; lookups outside the grid raise
    :class:`APCoverageError`.
    """

    theta_deg: np.ndarray
    phi_deg: np.ndarray
    ap_te: np.ndarray
    ap_tm: np.ndarray

    def __post_init__(self) -> None:
        th = np.asarray(self.theta_deg, dtype=float)
        ph = np.asarray(self.phi_deg, dtype=float)
        te = np.asarray(self.ap_te, dtype=float)
        tm = np.asarray(self.ap_tm, dtype=float)
        for name, arr in (("theta_deg", th), ("phi_deg", ph)):
            if arr.ndim != 1 or arr.size < 2 or np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} must be a strictly increasing 1-D grid")
        for name, arr in (("ap_te", te), ("ap_tm", tm)):
            if arr.shape != (th.size, ph.size):
                raise ValueError(f"{name} must have shape (n_theta, n_phi)")
            if np.any(arr < 0) or np.any(arr > 1) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} values must lie in [0, 1]")
        object.__setattr__(self, "theta_deg", th)
        object.__setattr__(self, "phi_deg", ph)
        object.__setattr__(self, "ap_te", te)
        object.__setattr__(self, "ap_tm", tm)
        object.__setattr__(
            self,
            "_interp_te",
            RegularGridInterpolator((th, ph), te, method="linear", bounds_error=True),
        )
        object.__setattr__(
            self,
            "_interp_tm",
            RegularGridInterpolator((th, ph), tm, method="linear", bounds_error=True),
        )

    @classmethod
    def constant(cls, value: float) -> "APSurface":
        """Angle- and polarization-independent AP."""
        grid_t = np.array([0.0, 90.0])
        grid_p = np.array([0.0, 360.0])
        table = np.full((2, 2), float(value))
        return cls(grid_t, grid_p, table, table.copy())

    @classmethod
    def synthetic_placeholder(cls) -> "APSurface":
        """Smooth stand-in surface normalized to 0.72 at normal incidence.

        For exercising the angle-dependent code path when no simulated
        tables are available.  Values decrease with incidence angle and
        carry a mild azimuthal ripple.
        """
        th = np.linspace(0.0, 90.0, 61)
        ph = np.linspace(0.0, 360.0, 73)
        tt, pp = np.meshgrid(np.radians(th), np.radians(ph), indexing="ij")
        te = 0.72 * np.cos(tt) ** 0.7 * (1 - 0.10 * np.sin(tt) ** 2 * np.sin(pp) ** 2)
        tm = 0.72 * np.cos(tt) ** 1.6 * (1 - 0.25 * np.sin(tt) ** 2 * np.cos(pp) ** 2)
        return cls(th, ph, te, tm)

    def lookup(self, theta_deg, phi_deg) -> tuple[np.ndarray, np.ndarray]:
        """AP values (TE, TM) at the given angles; phi wraps modulo 360."""
        theta = np.asarray(theta_deg, dtype=float)
        phi = np.mod(np.asarray(phi_deg, dtype=float), 360.0)
        pts = np.stack([theta, phi], axis=-1)
        try:
            return self._interp_te(pts), self._interp_tm(pts)
        except ValueError as exc:
            raise APCoverageError(
                f"AP surface does not cover a requested incidence angle: {exc}"
            ) from exc


@dataclass(frozen=True)
class DetectorScene:
    """Emitter/detector geometry (lengths in um, angles in degrees).

    ``opening_margin_um`` sets how far the recess opening extends past
    the active area on each side; sight lines crossing the electrode
    plane outside that rectangle are blocked.
    """

    detector_w_um: float = 22.0
    detector_h_um: float = 20.0
    recess_um: float = 6.0
    ion_height_um: float = 29.0
    lateral_um: float = 0.0
    quant_axis_deg: float = 45.0
    nanowire_axis_deg: float = 0.0
    grid_pitch_um: float = 1.0
    opening_margin_um: float = 30.0

    def __post_init__(self) -> None:
        if self.detector_w_um < 0 or self.detector_h_um < 0:
            raise ValueError("detector dimensions must be >= 0")
        if self.recess_um < 0:
            raise ValueError("recess_um must be >= 0")
        if self.ion_height_um + self.recess_um <= 0:
            raise ValueError("ion must sit strictly above the detector plane")
        if self.grid_pitch_um <= 0:
            raise ValueError("grid_pitch_um must be positive")
        if self.opening_margin_um < 0:
            raise ValueError("opening_margin_um must be >= 0")


@dataclass(frozen=True)
class CalibrationInputs:
    """Constants tying geometry to absolute detection rates."""

    decay_rate_s: float = DEFAULT_DECAY_RATE_S
    internal_efficiency: float = 1.0
    measured_rate_s: float | None = None

    def __post_init__(self) -> None:
        if self.decay_rate_s <= 0:
            raise ValueError("decay_rate_s must be positive")
        if not (0 <= self.internal_efficiency <= 1):
            raise ValueError("internal_efficiency must lie in [0, 1]")


def dipole_intensity(theta_q) -> np.ndarray:
    """Angular emission density (1/sr) of the rotating dipole.

    Normalized so the integral over the full sphere is 1.
    """
    return 3.0 / (16.0 * np.pi) * (1.0 + np.cos(theta_q) ** 2)


@dataclass(frozen=True)
class _CellGeometry:
    n_hat: np.ndarray      # (N, 3) unit vectors, emitter -> cell
    d_omega: np.ndarray    # (N,) solid angle per cell
    visible: np.ndarray    # (N,) bool


def _cell_geometry(scene: DetectorScene) -> _CellGeometry:
    nx = int(round(scene.detector_w_um / scene.grid_pitch_um))
    ny = int(round(scene.detector_h_um / scene.grid_pitch_um))
    if nx == 0 or ny == 0:
        empty = np.empty((0, 3))
        return _CellGeometry(empty, np.empty(0), np.empty(0, dtype=bool))
    dx = scene.detector_w_um / nx
    dy = scene.detector_h_um / ny
    cx = -scene.detector_w_um / 2 + (np.arange(nx) + 0.5) * dx
    cy = -scene.detector_h_um / 2 + (np.arange(ny) + 0.5) * dy
    xx, yy = np.meshgrid(cx, cy, indexing="ij")
    cells = np.stack(
        [xx.ravel(), yy.ravel(), np.full(xx.size, -scene.recess_um)], axis=1
    )
    ion = np.array([scene.lateral_um, 0.0, scene.ion_height_um])
    d = cells - ion
    r = np.linalg.norm(d, axis=1)
    n_hat = d / r[:, None]
    cos_inc = np.abs(d[:, 2]) / r
    d_omega = dx * dy * cos_inc / r**2

    if scene.ion_height_um > 0 and scene.recess_um > 0:
        # where each sight line pierces the electrode top plane
        f = scene.ion_height_um / (scene.ion_height_um + scene.recess_um)
        cross = ion[None, :2] + f * (cells[:, :2] - ion[None, :2])
        half_w = scene.detector_w_um / 2 + scene.opening_margin_um
        half_h = scene.detector_h_um / 2 + scene.opening_margin_um
        visible = (np.abs(cross[:, 0]) <= half_w) & (np.abs(cross[:, 1]) <= half_h)
    else:
        visible = np.ones(cells.shape[0], dtype=bool)
    return _CellGeometry(n_hat, d_omega, visible)


def obscured_fraction(scene: DetectorScene) -> float:
    """Fraction of detector cells blocked by the electrode-plane edge."""
    geo = _cell_geometry(scene)
    if geo.visible.size == 0:
        return 0.0
    return 1.0 - float(np.count_nonzero(geo.visible)) / geo.visible.size


def _quant_axis(scene: DetectorScene) -> np.ndarray:
    a = np.radians(scene.quant_axis_deg)
    return np.array([np.cos(a), np.sin(a), 0.0])


def collection_fraction(scene: DetectorScene) -> float:
    """Probability that an emitted photon lands on the visible detector."""
    geo = _cell_geometry(scene)
    if geo.visible.size == 0:
        return 0.0
    q = _quant_axis(scene)
    cos_tq = geo.n_hat @ q
    weight = 3.0 / (16.0 * np.pi) * (1.0 + cos_tq**2)
    return float(np.sum(weight[geo.visible] * geo.d_omega[geo.visible]))


def _polarization_weights(
    n_hat: np.ndarray, scene: DetectorScene
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-cell (w_te, w_tm, theta_deg, phi_deg) for the rotating dipole.

    The complex far field of the dipole is projected onto the TE unit
    vector (horizontal, perpendicular to the plane of incidence) and the
    TM unit vector (in the plane of incidence); weights are intensity
    fractions and sum to 1.
    """
    a = np.radians(scene.quant_axis_deg)
    e1 = np.array([-np.sin(a), np.cos(a), 0.0])
    e2 = np.array([0.0, 0.0, 1.0])
    d_vec = (e1 + 1j * e2) / np.sqrt(2.0)

    n_dot_d = n_hat @ d_vec
    e_field = d_vec[None, :] - n_dot_d[:, None] * n_hat

    w = np.radians(scene.nanowire_axis_deg)
    x_w = np.array([np.cos(w), np.sin(w), 0.0])
    y_w = np.array([-np.sin(w), np.cos(w), 0.0])

    s_raw = np.stack([n_hat[:, 1], -n_hat[:, 0], np.zeros(n_hat.shape[0])], axis=1)
    s_norm = np.linalg.norm(s_raw, axis=1)
    degenerate = s_norm < 1e-12
    s_hat = np.where(degenerate[:, None], y_w[None, :], s_raw / np.where(s_norm, s_norm, 1.0)[:, None])
    p_hat = np.cross(s_hat, n_hat)

    w_te_raw = np.abs(np.sum(e_field * s_hat, axis=1)) ** 2
    w_tm_raw = np.abs(np.sum(e_field * p_hat, axis=1)) ** 2
    total = w_te_raw + w_tm_raw
    w_te = w_te_raw / total
    w_tm = w_tm_raw / total

    theta_deg = np.degrees(np.arccos(np.clip(np.abs(n_hat[:, 2]), 0.0, 1.0)))
    phi_deg = np.degrees(np.arctan2(n_hat @ y_w, n_hat @ x_w))
    return w_te, w_tm, theta_deg, phi_deg


def expected_rate(
    scene: DetectorScene, ap: APSurface, cal: CalibrationInputs
) -> float:
    """Saturated detection rate (1/s) implied by geometry, AP and IDE.

    Sums (decay_rate/2) * d_omega * dipole weight * IDE * blended AP
    over visible cells, with AP blended from its TE/TM tables by the
    emitted intensity fractions.
    """
    geo = _cell_geometry(scene)
    if geo.visible.size == 0 or not np.any(geo.visible):
        return 0.0
    keep = geo.visible
    n_hat = geo.n_hat[keep]
    d_omega = geo.d_omega[keep]
    q = _quant_axis(scene)
    cos_tq = n_hat @ q
    dipole = 3.0 / (16.0 * np.pi) * (1.0 + cos_tq**2)
    w_te, w_tm, theta_deg, phi_deg = _polarization_weights(n_hat, scene)
    ap_te, ap_tm = ap.lookup(theta_deg, phi_deg)
    blended = w_te * ap_te + w_tm * ap_tm
    total = np.sum(d_omega * dipole * blended)
    return float(0.5 * cal.decay_rate_s * cal.internal_efficiency * total)


@dataclass(frozen=True)
class PositionSweep:
    """Detection rate versus lateral emitter offset, normalized to the first point."""

    lateral_um: np.ndarray
    rel_rate: np.ndarray
    rel_rate_const_ap: np.ndarray


def rate_vs_position(
    scene: DetectorScene,
    ap: APSurface,
    lateral_offsets_um,
    cal: CalibrationInputs | None = None,
) -> PositionSweep:
    """Sweep the emitter along the trap axis.

    Returns the normalized angle-dependent-AP curve together with a
    constant-AP reference computed from the same geometry.
    """
    offsets = np.asarray(lateral_offsets_um, dtype=float)
    if offsets.ndim != 1 or offsets.size < 1:
        raise ValueError("need at least one lateral offset")
    cal = cal or CalibrationInputs()
    flat = APSurface.constant(1.0)
    rates = np.empty(offsets.size)
    rates_flat = np.empty(offsets.size)
    for i, off in enumerate(offsets):
        sc = replace(scene, lateral_um=float(off))
        rates[i] = expected_rate(sc, ap, cal)
        rates_flat[i] = expected_rate(sc, flat, cal)
    if rates[0] <= 0 or rates_flat[0] <= 0:
        raise ValueError("rate at the first offset is zero; cannot normalize")
    return PositionSweep(
        lateral_um=offsets,
        rel_rate=rates / rates[0],
        rel_rate_const_ap=rates_flat / rates_flat[0],
    )


def saturation_extrapolate(points) -> tuple[float, float]:
    """Fit rate(s) = R_inf * s / (1 + s) and return (R_inf, 1-sigma error).

    ``points`` is a sequence of (saturation parameter, rate) pairs; the
    model is linear in R_inf, so the fit is closed-form least squares.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two (s, rate) points")
    s = pts[:, 0]
    y = pts[:, 1]
    if np.any(s < 0):
        raise ValueError("saturation parameters must be >= 0")
    if np.unique(s).size < 2:
        raise ValueError("need at least two distinct saturation parameters")
    x = s / (1.0 + s)
    sxx = float(np.sum(x * x))
    if sxx == 0:
        raise ValueError("all points sit at s = 0")
    r_inf = float(np.sum(x * y) / sxx)
    resid = y - r_inf * x
    dof = max(pts.shape[0] - 1, 1)
    err = float(np.sqrt(np.sum(resid**2) / dof / sxx))
    return r_inf, err


def sde_calibrate(
    measured_rate_s: float, scene: DetectorScene, cal: CalibrationInputs
) -> float:
    """System detection efficiency from a measured saturated count rate.

    SDE = rate / ((decay_rate/2) * collection_fraction): the fraction of
    photons headed at the detector that produce a count.
    """
    if measured_rate_s < 0:
        raise ValueError("measured rate must be >= 0")
    frac = collection_fraction(scene)
    if frac <= 0:
        raise ValueError("collection fraction is zero for this scene")
    return measured_rate_s / (0.5 * cal.decay_rate_s * frac)


def extrapolate_sde_no_rf(
    sde_rf_on: float,
    curve_rf_off: BiasCountCurve,
    curve_rf_on: BiasCountCurve,
    i_m_ua: float,
    margin_ua: float = 0.8,
    ap_normal_bound: float | None = None,
) -> float:
    """Scale an rf-on SDE to the drive-off operating point.

    Multiplies by the ratio of rf-off counts at the highest tabulated
    bias to rf-on counts at (i_m_ua - margin_ua).  If a normal-incidence
    AP bound is supplied, the result is capped there: the efficiency
    cannot exceed the absorption probability itself.
    """
    if sde_rf_on < 0:
        raise ValueError("sde_rf_on must be >= 0")
    numerator = float(curve_rf_off.counts[-1])
    denominator = float(curve_rf_on(i_m_ua - margin_ua))
    if denominator <= 0:
        raise ValueError("rf-on counts vanish at the requested bias point")
    sde = sde_rf_on * numerator / denominator
    if ap_normal_bound is not None:
        sde = min(sde, ap_normal_bound)
    return sde
