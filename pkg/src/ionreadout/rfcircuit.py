"""Radio-frequency pickup in a biased nanowire photon counter.

The nanowire is modeled as a lumped LC ladder: K+1 series inductors
L_nw joined at internal nodes that each carry a capacitance C_ground to
ground and C_drive to the rf drive electrode.  The wire ends connect to
leads (series L_lead + R_lead into a termination impedance) which also
couple capacitively to the drive through C_lead.  One lead is grounded,
the other terminated in 50 ohm, and that asymmetry is what lets the
drive push a spatially uniform current through the wire.

Solving the single-frequency nodal equations gives the complex current
in every segment.  In the regime where the coupling capacitor impedances
dwarf the wire inductance the solution collapses onto a two-term form:

    I(k, t) = I0 sin(wt) + I1 * (k - K/2)/(K/2) * cos(wt)

with the uniform term in phase with the drive and the position-linear
term in quadrature.  ``PickupModel`` captures that reduced description;
``predict_counts`` pushes it through a measured counts-versus-bias curve
to predict detector response with the drive on.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * np.pi
DEFAULT_OMEGA_RF = TWO_PI * 67.03e6  # rad/s


@dataclass(frozen=True)
class NanowireNetwork:
    """Lumped-element description of the biased nanowire and its leads.

    All values SI.  ``k_segments`` is K: the wire has K+1 inductors and
    K internal nodes.  ``z_term_left`` / ``z_term_right`` are complex
    termination impedances at the far side of each lead.
    """

    k_segments: int = 40
    l_wire_total: float = 2.2e-6
    c_ground: float = 10.5e-15
    c_drive: float = 4.635e-17
    c_lead: float = 3.587e-15
    l_lead: float = 5e-9
    r_lead: float = 5.0
    z_term_left: complex = 0.0
    z_term_right: complex = 50.0
    omega_rf: float = DEFAULT_OMEGA_RF
    v_rf: float = 8.8

    def __post_init__(self) -> None:
        if self.k_segments < 2 or self.k_segments % 2 != 0:
            raise ValueError("k_segments must be an even integer >= 2")
        for name in ("l_wire_total", "c_ground", "c_drive", "c_lead", "l_lead", "r_lead"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.l_wire_total <= 0:
            raise ValueError("l_wire_total must be positive")
        if self.omega_rf <= 0:
            raise ValueError("omega_rf must be positive")
        if self.v_rf < 0:
            raise ValueError("v_rf must be >= 0")

    @property
    def l_segment(self) -> float:
        return self.l_wire_total / (self.k_segments + 1)


@dataclass(frozen=True)
class InducedCurrentSolution:
    """Complex segment currents at the drive frequency.

    ``currents[k]`` is the phasor current through inductor k (rightward
    positive) with the drive voltage as the real phase reference.
    ``residual`` is the relative nodal current imbalance of the solve.
    """

    network: NanowireNetwork
    node_voltages: np.ndarray
    currents: np.ndarray
    residual: float


def solve_network(net: NanowireNetwork) -> InducedCurrentSolution:
    """Single-frequency complex nodal analysis of the pickup network."""
    k = net.k_segments
    n_nodes = k + 2
    omega = net.omega_rf
    y_l = 1.0 / (1j * omega * net.l_segment)

    y = np.zeros((n_nodes, n_nodes), dtype=complex)
    rhs = np.zeros(n_nodes, dtype=complex)

    for seg in range(k + 1):
        a, b = seg, seg + 1
        y[a, a] += y_l
        y[b, b] += y_l
        y[a, b] -= y_l
        y[b, a] -= y_l

    for node in range(1, k + 1):
        y[node, node] += 1j * omega * net.c_ground
        y_cd = 1j * omega * net.c_drive
        y[node, node] += y_cd
        rhs[node] += y_cd * net.v_rf

    for node, z_term in ((0, net.z_term_left), (n_nodes - 1, net.z_term_right)):
        y_cl = 1j * omega * net.c_lead
        y[node, node] += y_cl
        rhs[node] += y_cl * net.v_rf
        z_lead = net.r_lead + 1j * omega * net.l_lead + z_term
        if z_lead == 0:
            raise ValueError("lead branch impedance is zero; network is ill-posed")
        y[node, node] += 1.0 / z_lead

    try:
        v = np.linalg.solve(y, rhs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"singular pickup network: {exc}") from exc

    currents = (v[:-1] - v[1:]) * y_l
    imbalance = y @ v - rhs
    scale = np.abs(rhs).max()
    residual = float(np.abs(imbalance).max() / scale) if scale > 0 else float(
        np.abs(imbalance).max()
    )
    return InducedCurrentSolution(
        network=net, node_voltages=v, currents=currents, residual=residual
    )


@dataclass(frozen=True)
class PickupDecomposition:
    """Least-squares split of segment currents into uniform + linear parts."""

    uniform: complex
    linear: complex
    r_squared: float


def decompose_currents(sol: InducedCurrentSolution) -> PickupDecomposition:
    """Fit I(k) = a + b * (k - K/2)/(K/2) to the solved segment currents."""
    k = sol.network.k_segments
    u = (np.arange(k + 1) - k / 2) / (k / 2)
    a = sol.currents.mean()  # u averages to zero on the symmetric grid
    b = (sol.currents * u).sum() / (u * u).sum()
    fit = a + b * u
    ss_res = float(np.sum(np.abs(sol.currents - fit) ** 2))
    ss_tot = float(np.sum(np.abs(sol.currents - sol.currents.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return PickupDecomposition(uniform=complex(a), linear=complex(b), r_squared=r2)


@dataclass(frozen=True)
class PickupModel:
    """Reduced two-term pickup current (amplitudes in uA).

    i0_ua multiplies sin(wt) uniformly along the wire; i1_ua multiplies
    cos(wt) with a linear spatial profile (k - K/2)/(K/2).
    """

    i0_ua: float
    i1_ua: float
    k_segments: int = 40
    omega_rf: float = DEFAULT_OMEGA_RF

    def __post_init__(self) -> None:
        if self.i0_ua < 0 or self.i1_ua < 0:
            raise ValueError("pickup amplitudes must be >= 0")
        if self.k_segments < 2 or self.k_segments % 2 != 0:
            raise ValueError("k_segments must be an even integer >= 2")
        if self.omega_rf <= 0:
            raise ValueError("omega_rf must be positive")


def pickup_from_solution(sol: InducedCurrentSolution) -> PickupModel:
    """Build the reduced model from a full network solution."""
    dec = decompose_currents(sol)
    return PickupModel(
        i0_ua=float(np.abs(dec.uniform)) * 1e6,
        i1_ua=float(np.abs(dec.linear)) * 1e6,
        k_segments=sol.network.k_segments,
        omega_rf=sol.network.omega_rf,
    )


def reduced_current(model: PickupModel, k: int, t_s: float) -> float:
    """Pickup current (uA) in segment k at time t."""
    if not (0 <= k <= model.k_segments):
        raise ValueError(f"segment index must lie in [0, {model.k_segments}]")
    u = (k - model.k_segments / 2) / (model.k_segments / 2)
    wt = model.omega_rf * t_s
    return model.i0_ua * np.sin(wt) + model.i1_ua * u * np.cos(wt)


def max_induced(model: PickupModel) -> float:
    """Largest instantaneous pickup amplitude over segments and phase (uA).

    The two terms are in quadrature, so the per-segment amplitude is
    sqrt(i0^2 + (i1 u)^2), maximal at the wire ends where |u| = 1.
    """
    return float(np.hypot(model.i0_ua, model.i1_ua))


@dataclass(frozen=True)
class BiasCountCurve:
    """Tabulated counts versus bias current (uA).

    Evaluation interpolates linearly between samples.  Outside the
    tabulated domain the detector either does not respond (below) or is
    driven normal (above), so both sides evaluate to zero counts.
    """

    bias_ua: np.ndarray
    counts: np.ndarray

    def __post_init__(self) -> None:
        bias = np.asarray(self.bias_ua, dtype=float)
        counts = np.asarray(self.counts, dtype=float)
        object.__setattr__(self, "bias_ua", bias)
        object.__setattr__(self, "counts", counts)
        if bias.ndim != 1 or bias.size < 2 or bias.shape != counts.shape:
            raise ValueError("need matching 1-D arrays with at least two samples")
        if np.any(np.diff(bias) <= 0):
            raise ValueError("bias_ua must be strictly increasing")
        if np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise ValueError("counts must be finite and >= 0")

    def __call__(self, bias_ua) -> np.ndarray:
        return np.interp(bias_ua, self.bias_ua, self.counts, left=0.0, right=0.0)


def predict_counts(
    model: PickupModel,
    rf_off_curve: BiasCountCurve,
    bias_ua: float,
    n_phase: int = 256,
) -> float:
    """Mean counts with the drive on, at dc bias bias_ua.

    Averages rf_off_curve(|bias + I(k, t)|) over n_phase equally spaced
    drive phases and all K+1 segments: each patch of wire sees the dc
    bias plus its local instantaneous pickup current.
    """
    if n_phase < 8:
        raise ValueError("n_phase must be >= 8")
    phases = (np.arange(n_phase) + 0.5) * (TWO_PI / n_phase)
    u = (np.arange(model.k_segments + 1) - model.k_segments / 2) / (model.k_segments / 2)
    inst = model.i0_ua * np.sin(phases)[None, :] + (
        model.i1_ua * u[:, None] * np.cos(phases)[None, :]
    )
    return float(np.mean(rf_off_curve(np.abs(bias_ua + inst))))


@dataclass(frozen=True)
class PickupFit:
    model: PickupModel
    i0_err_ua: float
    i1_err_ua: float
    residual_norm: float
    n_points: int


def fit_pickup(
    rf_on_curve: BiasCountCurve,
    rf_off_curve: BiasCountCurve,
    delta_im_ua: float,
    k_segments: int = 40,
    omega_rf: float = DEFAULT_OMEGA_RF,
    n_phase: int = 256,
) -> PickupFit:
    """Fit (I0, I1) to an rf-on bias curve, given the rf-off curve.

    The amplitudes are constrained to the circle sqrt(I0^2 + I1^2) =
    delta_im_ua (the observed shift of the response edge), leaving one
    angle psi with I0 = delta * cos(psi), I1 = delta * sin(psi).  The
    angle is located by a coarse scan and polished by golden-section
    search; uncertainties follow from the residual curvature at the
    minimum.
    """
    from scipy.optimize import minimize_scalar

    if delta_im_ua < 0:
        raise ValueError("delta_im_ua must be >= 0")
    if delta_im_ua == 0:
        return PickupFit(
            model=PickupModel(0.0, 0.0, k_segments, omega_rf),
            i0_err_ua=0.0,
            i1_err_ua=0.0,
            residual_norm=0.0,
            n_points=rf_on_curve.bias_ua.size,
        )
    if np.ptp(rf_off_curve.counts) == 0 or np.ptp(rf_on_curve.counts) == 0:
        raise ValueError("flat count curves cannot constrain the pickup fit")

    bias = rf_on_curve.bias_ua
    target = rf_on_curve.counts

    def sse(psi: float) -> float:
        model = PickupModel(
            delta_im_ua * np.cos(psi), delta_im_ua * np.sin(psi), k_segments, omega_rf
        )
        pred = np.array([predict_counts(model, rf_off_curve, b, n_phase) for b in bias])
        return float(np.sum((pred - target) ** 2))

    psis = np.linspace(0.0, np.pi / 2, 65)
    costs = np.array([sse(p) for p in psis])
    i_best = int(np.argmin(costs))
    lo = psis[max(0, i_best - 1)]
    hi = psis[min(psis.size - 1, i_best + 1)]
    if lo == hi:
        psi_hat = float(psis[i_best])
    else:
        res = minimize_scalar(sse, bracket=None, bounds=(lo, hi), method="bounded")
        psi_hat = float(res.x)
        if sse(psi_hat) > costs[i_best]:
            psi_hat = float(psis[i_best])

    sse_min = sse(psi_hat)
    h = np.pi / 2 / 256
    p_lo = np.clip(psi_hat - h, 0.0, np.pi / 2)
    p_hi = np.clip(psi_hat + h, 0.0, np.pi / 2)
    curv = (sse(p_lo) - 2 * sse_min + sse(p_hi)) / ((p_hi - psi_hat) * (psi_hat - p_lo) + 1e-30)
    dof = max(bias.size - 1, 1)
    s2 = sse_min / dof
    psi_err = float(np.sqrt(2 * s2 / curv)) if curv > 0 else float("inf")

    model = PickupModel(
        delta_im_ua * np.cos(psi_hat),
        delta_im_ua * np.sin(psi_hat),
        k_segments,
        omega_rf,
    )
    return PickupFit(
        model=model,
        i0_err_ua=abs(delta_im_ua * np.sin(psi_hat)) * psi_err,
        i1_err_ua=abs(delta_im_ua * np.cos(psi_hat)) * psi_err,
        residual_norm=float(np.sqrt(sse_min)),
        n_points=bias.size,
    )
