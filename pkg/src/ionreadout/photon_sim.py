"""Synthetic photon-count records from a two-state blinking emitter.

The emitter is a hidden two-state Markov process.  In the bright state it
scatters photons at rate gamma_b, in the dark state at gamma_d (both in
counts per ms).  Spontaneous bright->dark decay happens at rate gamma_dp
and dark->bright at gamma_rp.  Detected counts are binned into windows of
width t0 (in us).

Two transition models are provided:

* ``"exact"`` (default): the hidden state follows a continuous-time Markov
  chain; each bin's count is Poisson with mean given by the time-weighted
  rate integral across the bin.
* ``"bin-boundary"``: state changes may only occur between bins, with
  per-boundary probabilities gamma_dp * t0 and gamma_rp * t0.  Cheap and
  adequate when those products are tiny.

Reproducibility contract: every trial draws from its own generator seeded
by ``(master_seed, trial_index)``, so datasets are independent of
evaluation order and can be generated in parallel without changing the
result.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Literal, Sequence

import numpy as np

from .timing import TimeTagStream

StateLabel = Literal["bright", "dark"]
TransitionMode = Literal["exact", "bin-boundary"]

_MS_PER_US = 1e-3

BRIGHT: StateLabel = "bright"
DARK: StateLabel = "dark"


@dataclass(frozen=True)
class RateParams:
    """Emitter rates, all in 1/ms.

    gamma_b / gamma_d are the bright / dark photon count rates; gamma_dp
    and gamma_rp are the bright->dark and dark->bright transition rates.
    """

    gamma_b: float
    gamma_d: float
    gamma_dp: float = 0.0
    gamma_rp: float = 0.0

    def __post_init__(self) -> None:
        for name in ("gamma_b", "gamma_d", "gamma_dp", "gamma_rp"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.gamma_b < self.gamma_d:
            raise ValueError("gamma_b must be >= gamma_d")

    def count_rate(self, state: StateLabel) -> float:
        return self.gamma_b if state == BRIGHT else self.gamma_d

    def exit_rate(self, state: StateLabel) -> float:
        return self.gamma_dp if state == BRIGHT else self.gamma_rp


@dataclass(frozen=True)
class ReadoutConfig:
    """Binning and heralding parameters (times in us)."""

    bin_width_us: float = 1.0
    n_bins: int = 500
    herald_duration_us: float = 50.0
    herald_bright_min: int = 8

    def __post_init__(self) -> None:
        if self.bin_width_us <= 0:
            raise ValueError("bin_width_us must be positive")
        if self.n_bins < 1:
            raise ValueError("n_bins must be >= 1")
        if self.herald_duration_us < 0:
            raise ValueError("herald_duration_us must be >= 0")
        if self.herald_bright_min < 1:
            raise ValueError("herald_bright_min must be >= 1")

    @property
    def duration_us(self) -> float:
        return self.n_bins * self.bin_width_us

    @property
    def herald_bins(self) -> int:
        nb = self.herald_duration_us / self.bin_width_us
        if abs(nb - round(nb)) > 1e-9:
            raise ValueError("herald_duration_us must be a whole number of bins")
        return int(round(nb))


@dataclass(frozen=True)
class Trajectory:
    """Binned counts for one trial.

    ``prepared`` is the preparation label ('bright' or 'dark'); after
    heralding it is the herald-assigned label.  ``state_path`` optionally
    records the hidden state at the start of each bin (ground truth).
    """

    prepared: StateLabel
    bins: np.ndarray
    bin_width_us: float = 1.0
    state_path: np.ndarray | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.bins)
        if arr.ndim != 1:
            raise ValueError("bins must be one-dimensional")
        if arr.size and (np.any(arr < 0) or not np.issubdtype(arr.dtype, np.integer)):
            raise ValueError("bins must be non-negative integers")
        object.__setattr__(self, "bins", arr.astype(np.int16, copy=False))
        if self.prepared not in (BRIGHT, DARK):
            raise ValueError(f"prepared must be 'bright' or 'dark', got {self.prepared!r}")
        if self.bin_width_us <= 0:
            raise ValueError("bin_width_us must be positive")
        if self.state_path is not None and len(self.state_path) != arr.size:
            raise ValueError("state_path length must match bins")

    @property
    def total_counts(self) -> int:
        return int(self.bins.sum())


class HeraldOutcome(Enum):
    RETAINED_BRIGHT = "retained-as-bright"
    RETAINED_DARK = "retained-as-dark"
    DISCARDED = "discarded"


@dataclass(frozen=True)
class EmitterStreamConfig:
    """Renewal-process emitter feeding two detection channels (SI units).

    Each emission waits dead_time_s plus an exponential interval at
    emission_rate_s.  An emission is routed to channel A with probability
    route_prob_a, to channel B with route_prob_b, else lost.  Channel B's
    detection chain delays its tags by delay_offset_b_s.  Independent
    Poisson backgrounds are added per channel.  Tags are rounded to
    integer nanoseconds.
    """

    emission_rate_s: float
    dead_time_s: float
    route_prob_a: float
    route_prob_b: float
    background_rate_a_s: float = 0.0
    background_rate_b_s: float = 0.0
    delay_offset_b_s: float = 0.0
    duration_s: float = 1.0

    def __post_init__(self) -> None:
        if self.emission_rate_s < 0 or self.dead_time_s < 0:
            raise ValueError("rates and dead time must be >= 0")
        if not (0 <= self.route_prob_a <= 1 and 0 <= self.route_prob_b <= 1):
            raise ValueError("routing probabilities must lie in [0, 1]")
        if self.route_prob_a + self.route_prob_b > 1 + 1e-12:
            raise ValueError("route_prob_a + route_prob_b must not exceed 1")
        if self.background_rate_a_s < 0 or self.background_rate_b_s < 0:
            raise ValueError("background rates must be >= 0")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")


SeedLike = "int | Sequence[int]"


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def _check_slow_pumping(rates: RateParams, bin_width_us: float) -> None:
    p = bin_width_us * _MS_PER_US * max(rates.gamma_dp, rates.gamma_rp)
    if p > 0.01:
        warnings.warn(
            f"bin width times pumping rate = {p:.3g} is not small; "
            "bin-resolution artifacts likely",
            stacklevel=3,
        )


def _switch_times_exact(
    rng: np.random.Generator, rates: RateParams, prepared: StateLabel, duration_us: float
) -> list[float]:
    """Times (us) of successive hidden-state flips inside the record."""
    t = 0.0
    state = prepared
    flips: list[float] = []
    while True:
        exit_per_us = rates.exit_rate(state) * _MS_PER_US
        if exit_per_us <= 0:
            break
        t += rng.exponential(1.0 / exit_per_us)
        if t >= duration_us:
            break
        flips.append(t)
        state = DARK if state == BRIGHT else BRIGHT
    return flips


def _switch_bins_boundary(
    rng: np.random.Generator, rates: RateParams, prepared: StateLabel, n_bins: int,
    bin_width_us: float,
) -> list[int]:
    """Bin indices at whose leading boundary the state flips."""
    i = 0
    state = prepared
    flips: list[int] = []
    while True:
        p = rates.exit_rate(state) * bin_width_us * _MS_PER_US
        if p <= 0:
            break
        i += int(rng.geometric(p))
        if i >= n_bins:
            break
        flips.append(i)
        state = DARK if state == BRIGHT else BRIGHT
    return flips


def _bright_time_per_bin(
    flips_us: list[float], prepared: StateLabel, n_bins: int, t0: float
) -> np.ndarray:
    """Time (us) spent in the bright state inside each bin."""
    bounds = [0.0, *flips_us, n_bins * t0]
    state = prepared
    edges_lo = np.arange(n_bins) * t0
    edges_hi = edges_lo + t0
    bright = np.zeros(n_bins)
    for a, b in zip(bounds[:-1], bounds[1:]):
        if state == BRIGHT and b > a:
            bright += np.clip(np.minimum(edges_hi, b) - np.maximum(edges_lo, a), 0.0, None)
        state = DARK if state == BRIGHT else BRIGHT
    return bright


def simulate_trial(
    rates: RateParams,
    cfg: ReadoutConfig,
    prepared: StateLabel,
    seed,
    mode: TransitionMode = "exact",
    record_states: bool = False,
) -> Trajectory:
    """Simulate one trial and return its binned counts.

    ``seed`` may be an int or a sequence of ints (the dataset generator
    passes ``(master_seed, trial_index)``).
    """
    if prepared not in (BRIGHT, DARK):
        raise ValueError(f"prepared must be 'bright' or 'dark', got {prepared!r}")
    if mode not in ("exact", "bin-boundary"):
        raise ValueError(f"unknown transition mode {mode!r}")
    _check_slow_pumping(rates, cfg.bin_width_us)
    rng = _rng(seed)
    t0 = cfg.bin_width_us
    n = cfg.n_bins

    if mode == "exact":
        flips = _switch_times_exact(rng, rates, prepared, n * t0)
        bright_us = _bright_time_per_bin(flips, prepared, n, t0)
        flip_arr = np.asarray(flips)
        starts = np.arange(n) * t0
    else:
        flip_bins = _switch_bins_boundary(rng, rates, prepared, n, t0)
        flip_arr = np.asarray(flip_bins, dtype=float)
        starts = np.arange(n, dtype=float)
        n_flips_before = np.searchsorted(flip_arr, starts, side="right")
        in_bright = (n_flips_before % 2 == 0) == (prepared == BRIGHT)
        bright_us = np.where(in_bright, t0, 0.0)

    mean_counts = (rates.gamma_b * bright_us + rates.gamma_d * (t0 - bright_us)) * _MS_PER_US
    counts = rng.poisson(mean_counts).astype(np.int16)

    path = None
    if record_states:
        n_before = np.searchsorted(flip_arr, starts, side="right")
        bright_at_start = (n_before % 2 == 0) == (prepared == BRIGHT)
        path = np.where(bright_at_start, BRIGHT, DARK)
    return Trajectory(prepared=prepared, bins=counts, bin_width_us=t0, state_path=path)


def simulate_dataset(
    rates: RateParams,
    cfg: ReadoutConfig,
    trials_per_state: int,
    seed: int,
    mode: TransitionMode = "exact",
    record_states: bool = False,
) -> list[Trajectory]:
    """Simulate trials_per_state bright then trials_per_state dark trials.

    Trial i uses the sub-seed (seed, i); calling :func:`simulate_trial`
    with that sub-seed reproduces the trial exactly.
    """
    if trials_per_state < 1:
        raise ValueError("trials_per_state must be >= 1")
    out: list[Trajectory] = []
    for idx in range(2 * trials_per_state):
        prepared = BRIGHT if idx < trials_per_state else DARK
        out.append(
            simulate_trial(rates, cfg, prepared, (seed, idx), mode=mode,
                           record_states=record_states)
        )
    return out


def apply_herald(traj: Trajectory, cfg: ReadoutConfig) -> tuple[HeraldOutcome, Trajectory | None]:
    """Classify the herald window and strip it from the trajectory.

    Zero counts in the herald window keep the trial as dark; at least
    cfg.herald_bright_min counts keep it as bright; anything in between
    discards the trial (returned trajectory is None).  The retained
    trajectory carries the herald-assigned label and only post-herald
    bins.  A zero-length herald window retains every trial unchanged.
    """
    hb = cfg.herald_bins
    if hb > traj.bins.size:
        raise ValueError("herald window longer than trajectory")
    if hb == 0:
        outcome = (
            HeraldOutcome.RETAINED_BRIGHT if traj.prepared == BRIGHT
            else HeraldOutcome.RETAINED_DARK
        )
        return outcome, traj

    herald_counts = int(traj.bins[:hb].sum())
    if herald_counts == 0:
        outcome, label = HeraldOutcome.RETAINED_DARK, DARK
    elif herald_counts >= cfg.herald_bright_min:
        outcome, label = HeraldOutcome.RETAINED_BRIGHT, BRIGHT
    else:
        return HeraldOutcome.DISCARDED, None
    path = None if traj.state_path is None else traj.state_path[hb:]
    rest = Trajectory(
        prepared=label,
        bins=traj.bins[hb:],
        bin_width_us=traj.bin_width_us,
        state_path=path,
    )
    return outcome, rest


def apply_herald_dataset(
    trajs: Sequence[Trajectory], cfg: ReadoutConfig
) -> tuple[list[Trajectory], dict[HeraldOutcome, int]]:
    """Herald every trial; return retained trajectories and outcome tallies."""
    retained: list[Trajectory] = []
    tally = {o: 0 for o in HeraldOutcome}
    for traj in trajs:
        outcome, rest = apply_herald(traj, cfg)
        tally[outcome] += 1
        if rest is not None:
            retained.append(rest)
    return retained, tally


def _renewal_times_s(rng: np.random.Generator, cfg: EmitterStreamConfig) -> np.ndarray:
    """Emission times (s) of the renewal process inside the window."""
    lam = cfg.emission_rate_s
    if lam <= 0:
        return np.empty(0)
    mean_gap = cfg.dead_time_s + 1.0 / lam
    times: list[np.ndarray] = []
    t_last = 0.0
    remaining = cfg.duration_s
    while remaining > 0:
        n_draw = int(remaining / mean_gap * 1.05) + int(4 * np.sqrt(remaining / mean_gap)) + 16
        gaps = cfg.dead_time_s + rng.exponential(1.0 / lam, size=n_draw)
        chunk = t_last + np.cumsum(gaps)
        inside = chunk < cfg.duration_s
        times.append(chunk[inside])
        if not inside.all():
            break
        t_last = chunk[-1]
        remaining = cfg.duration_s - t_last
    return np.concatenate(times) if times else np.empty(0)


def simulate_timetag_streams(
    cfg: EmitterStreamConfig, seed
) -> tuple[TimeTagStream, TimeTagStream]:
    """Simulate two time-tag channels from one emitter plus backgrounds.

    Routing is exclusive, so a single emission never produces a tag in
    both channels; with no background and dead time tau_d, no A-B pair
    can have |delay - offset| < tau_d.
    """
    rng = _rng(seed)
    emissions = _renewal_times_s(rng, cfg)
    u = rng.random(emissions.size)
    to_a = u < cfg.route_prob_a
    to_b = (~to_a) & (u < cfg.route_prob_a + cfg.route_prob_b)

    duration_ns = int(round(cfg.duration_s * 1e9))
    streams = []
    for channel, routed, bg_rate, offset in (
        ("A", emissions[to_a], cfg.background_rate_a_s, 0.0),
        ("B", emissions[to_b], cfg.background_rate_b_s, cfg.delay_offset_b_s),
    ):
        n_bg = rng.poisson(bg_rate * cfg.duration_s)
        bg = rng.random(n_bg) * cfg.duration_s
        t_s = np.concatenate([routed + offset, bg])
        ticks = np.rint(t_s * 1e9).astype(np.int64)
        ticks = np.sort(ticks[(ticks >= 0) & (ticks < duration_ns)])
        streams.append(TimeTagStream(channel=channel, t_ns=ticks, duration_ns=duration_ns))
    return streams[0], streams[1]
