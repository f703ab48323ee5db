"""State classification and rate calibration for binned photon counts.

Two discriminators are provided.  The fixed-duration threshold method
sums counts over a window and compares against an integer threshold.
The adaptive method updates a two-hypothesis posterior bin by bin,
accounting for state transitions during the readout, and stops as soon
as either posterior reaches a requested confidence level, so easy trials
finish early.

All posterior arithmetic is carried out on log-probabilities: per-bin
likelihood ratios can span hundreds of orders of magnitude over a long
record, and the mixed add/multiply recursion is only stable via
logaddexp.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .photon_sim import BRIGHT, DARK, RateParams, StateLabel, Trajectory, _MS_PER_US

_NEG_INF = float("-inf")


def poisson_log_pmf(n, gamma_per_ms: float, bin_width_us: float):
    """log P(n counts) for rate gamma_per_ms over a bin of bin_width_us.

    Vectorized in n.  Stable for n up to at least 1e4.
    """
    if gamma_per_ms < 0:
        raise ValueError("rate must be >= 0")
    if bin_width_us <= 0:
        raise ValueError("bin width must be positive")
    n_arr = np.asarray(n)
    if np.any(n_arr < 0) or not np.issubdtype(n_arr.dtype, np.integer):
        raise ValueError("counts must be non-negative integers")
    mu = gamma_per_ms * bin_width_us * _MS_PER_US
    if mu == 0:
        return np.where(n_arr == 0, 0.0, _NEG_INF) if n_arr.ndim else (0.0 if n == 0 else _NEG_INF)
    out = n_arr * np.log(mu) - mu - gammaln(n_arr + 1.0)
    return out if n_arr.ndim else float(out)


def poisson_pmf(n, gamma_per_ms: float, bin_width_us: float):
    """P(n counts) in one bin; see :func:`poisson_log_pmf`."""
    return np.exp(poisson_log_pmf(n, gamma_per_ms, bin_width_us))


@dataclass(frozen=True)
class Posterior:
    """Two-hypothesis state probabilities."""

    p_bright: float
    p_dark: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.p_bright) and np.isfinite(self.p_dark)):
            raise ValueError("posterior probabilities must be finite")
        if self.p_bright < 0 or self.p_dark < 0:
            raise ValueError("posterior probabilities must be >= 0")
        if abs(self.p_bright + self.p_dark - 1.0) > 1e-9:
            raise ValueError("posterior must sum to 1")

    @classmethod
    def uniform(cls) -> "Posterior":
        return cls(0.5, 0.5)


def _transition_probs(rates: RateParams, bin_width_us: float) -> tuple[float, float]:
    p_dp = rates.gamma_dp * bin_width_us * _MS_PER_US
    p_rp = rates.gamma_rp * bin_width_us * _MS_PER_US
    if p_dp >= 1 or p_rp >= 1:
        raise ValueError("bin width times pumping rate must be < 1")
    return p_dp, p_rp


def _log_bayes_update(log_pb, log_pd, log_like_b, log_like_d, p_dp: float, p_rp: float):
    """One recursion step on log-posteriors (vectorized over trials).

    Prior is first propagated through the transition matrix, then
    reweighted by the per-state count likelihoods and renormalized.
    """
    log_stay_b = np.log1p(-p_dp)
    log_stay_d = np.log1p(-p_rp)
    log_dp = np.log(p_dp) if p_dp > 0 else _NEG_INF
    log_rp = np.log(p_rp) if p_rp > 0 else _NEG_INF
    lb = np.logaddexp(log_stay_b + log_pb, log_rp + log_pd) + log_like_b
    ld = np.logaddexp(log_stay_d + log_pd, log_dp + log_pb) + log_like_d
    norm = np.logaddexp(lb, ld)
    return lb - norm, ld - norm


def bayes_step(
    prior: Posterior, n: int, rates: RateParams, bin_width_us: float
) -> Posterior:
    """Advance the posterior by one observed bin of n counts."""
    p_dp, p_rp = _transition_probs(rates, bin_width_us)
    with np.errstate(divide="ignore"):
        log_pb = np.log(prior.p_bright)
        log_pd = np.log(prior.p_dark)
    lb, ld = _log_bayes_update(
        log_pb,
        log_pd,
        poisson_log_pmf(int(n), rates.gamma_b, bin_width_us),
        poisson_log_pmf(int(n), rates.gamma_d, bin_width_us),
        p_dp,
        p_rp,
    )
    return Posterior(float(np.exp(lb)), float(np.exp(ld)))


@dataclass(frozen=True)
class ClassifierResult:
    decision: StateLabel
    duration_us: float
    confidence: float
    bins_consumed: int
    converged: bool = True


def adaptive_classify(
    traj: Trajectory,
    rates: RateParams,
    bin_width_us: float,
    confidence_level: float,
) -> ClassifierResult:
    """Classify one trajectory, stopping at the requested confidence.

    Starts from a uniform prior.  If the record is exhausted before
    either posterior reaches the level, the larger posterior decides and
    ``converged`` is False.
    """
    if not (0.5 < confidence_level < 1.0):
        raise ValueError("confidence_level must lie in (0.5, 1)")
    if traj.bins.size == 0:
        raise ValueError("empty trajectory")
    p_dp, p_rp = _transition_probs(rates, bin_width_us)
    log_level = np.log(confidence_level)
    log_pb = np.log(0.5)
    log_pd = np.log(0.5)
    counts = traj.bins.astype(np.int64)
    log_mu_b = poisson_log_pmf(counts, rates.gamma_b, bin_width_us)
    log_mu_d = poisson_log_pmf(counts, rates.gamma_d, bin_width_us)
    for i in range(counts.size):
        log_pb, log_pd = _log_bayes_update(
            log_pb, log_pd, log_mu_b[i], log_mu_d[i], p_dp, p_rp
        )
        best = max(log_pb, log_pd)
        if best >= log_level:
            return ClassifierResult(
                decision=BRIGHT if log_pb >= log_pd else DARK,
                duration_us=(i + 1) * bin_width_us,
                confidence=float(np.exp(best)),
                bins_consumed=i + 1,
            )
    best = max(log_pb, log_pd)
    return ClassifierResult(
        decision=BRIGHT if log_pb >= log_pd else DARK,
        duration_us=counts.size * bin_width_us,
        confidence=float(np.exp(best)),
        bins_consumed=counts.size,
        converged=False,
    )


@dataclass
class AdaptiveBatchResult:
    """Vectorized adaptive classification at one confidence level."""

    confidence_level: float
    decisions: np.ndarray  # bool, True = bright
    bins_consumed: np.ndarray
    confidence: np.ndarray
    converged: np.ndarray


def adaptive_classify_batch(
    trajs: Sequence[Trajectory],
    rates: RateParams,
    bin_width_us: float,
    confidence_levels: Sequence[float],
) -> list[AdaptiveBatchResult]:
    """Classify many trajectories at several stopping levels in one pass.

    Equivalent to calling :func:`adaptive_classify` per trajectory and
    per level, but iterates bins across the whole batch at once.
    """
    levels = [float(l) for l in confidence_levels]
    if not levels:
        raise ValueError("need at least one confidence level")
    for l in levels:
        if not (0.5 < l < 1.0):
            raise ValueError("confidence levels must lie in (0.5, 1)")
    if not trajs:
        raise ValueError("empty dataset")
    n_bins = trajs[0].bins.size
    if any(t.bins.size != n_bins for t in trajs):
        raise ValueError("all trajectories must have equal length")
    p_dp, p_rp = _transition_probs(rates, bin_width_us)

    counts = np.stack([t.bins for t in trajs]).astype(np.int16)
    n_trials = counts.shape[0]
    max_n = int(counts.max())
    log_fact = gammaln(np.arange(max_n + 1) + 1.0)
    mu_b = rates.gamma_b * bin_width_us * _MS_PER_US
    mu_d = rates.gamma_d * bin_width_us * _MS_PER_US
    log_mu_b = np.log(mu_b) if mu_b > 0 else _NEG_INF
    log_mu_d = np.log(mu_d) if mu_d > 0 else _NEG_INF

    log_pb = np.full(n_trials, np.log(0.5))
    log_pd = np.full(n_trials, np.log(0.5))
    log_levels = np.log(levels)
    stop_bin = np.full((n_trials, len(levels)), -1, dtype=np.int32)
    stop_bright = np.zeros((n_trials, len(levels)), dtype=bool)
    stop_conf = np.zeros((n_trials, len(levels)))

    for i in range(n_bins):
        n_i = counts[:, i].astype(np.int64)
        lf = log_fact[n_i]
        like_b = n_i * log_mu_b - mu_b - lf if mu_b > 0 else np.where(n_i == 0, 0.0, _NEG_INF)
        like_d = n_i * log_mu_d - mu_d - lf if mu_d > 0 else np.where(n_i == 0, 0.0, _NEG_INF)
        log_pb, log_pd = _log_bayes_update(log_pb, log_pd, like_b, like_d, p_dp, p_rp)
        best = np.maximum(log_pb, log_pd)
        bright_now = log_pb >= log_pd
        done_any = True
        for j, log_level in enumerate(log_levels):
            open_ = stop_bin[:, j] < 0
            hit = open_ & (best >= log_level)
            if np.any(hit):
                stop_bin[hit, j] = i + 1
                stop_bright[hit, j] = bright_now[hit]
                stop_conf[hit, j] = np.exp(best[hit])
            if np.any(stop_bin[:, j] < 0):
                done_any = False
        if done_any:
            break

    results = []
    final_bright = log_pb >= log_pd
    final_conf = np.exp(np.maximum(log_pb, log_pd))
    for j, level in enumerate(levels):
        open_ = stop_bin[:, j] < 0
        bins_used = np.where(open_, n_bins, stop_bin[:, j])
        decisions = np.where(open_, final_bright, stop_bright[:, j])
        conf = np.where(open_, final_conf, stop_conf[:, j])
        results.append(
            AdaptiveBatchResult(
                confidence_level=level,
                decisions=decisions,
                bins_consumed=bins_used.astype(np.int64),
                confidence=conf,
                converged=~open_,
            )
        )
    return results


def threshold_classify(traj: Trajectory, threshold: int, duration_us: float) -> StateLabel:
    """Bright iff the first duration_us of the record holds >= threshold counts."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    nb = duration_us / traj.bin_width_us
    if abs(nb - round(nb)) > 1e-9:
        raise ValueError("duration_us must be a whole number of bins")
    nb = int(round(nb))
    if nb < 1 or nb > traj.bins.size:
        raise ValueError("duration must cover between 1 bin and the whole record")
    total = int(traj.bins[:nb].sum())
    return BRIGHT if total >= threshold else DARK


def _wilson_interval(k: int, n: int, z: float = 1.0) -> tuple[float, float]:
    """Wilson score interval; z = 1 gives a 68% band."""
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class ErrorStats:
    """Classification error fractions with 68% Wilson intervals."""

    eps_bright: float
    eps_dark: float
    fidelity: float
    eps_bright_ci: tuple[float, float]
    eps_dark_ci: tuple[float, float]
    n_bright: int
    n_dark: int
    mean_duration_bright_us: float
    mean_duration_dark_us: float

    @property
    def mean_error(self) -> float:
        return 1.0 - self.fidelity

    @property
    def mean_duration_us(self) -> float:
        n = self.n_bright + self.n_dark
        return (
            self.n_bright * self.mean_duration_bright_us
            + self.n_dark * self.mean_duration_dark_us
        ) / n


def error_stats(
    truths: Sequence[StateLabel],
    decisions: Sequence[StateLabel],
    durations_us: Sequence[float] | None = None,
) -> ErrorStats:
    """Per-state error fractions; fidelity is 1 - (eps_b + eps_d)/2."""
    truths = np.asarray(truths)
    decisions = np.asarray(decisions)
    if truths.shape != decisions.shape or truths.ndim != 1:
        raise ValueError("truths and decisions must be equal-length 1-D sequences")
    if truths.size == 0:
        raise ValueError("empty inputs")
    is_bright = truths == BRIGHT
    n_b = int(is_bright.sum())
    n_d = int(truths.size - n_b)
    if n_b == 0 or n_d == 0:
        raise ValueError("need at least one trial of each state")
    wrong = truths != decisions
    k_b = int(np.count_nonzero(wrong & is_bright))
    k_d = int(np.count_nonzero(wrong & ~is_bright))
    eps_b = k_b / n_b
    eps_d = k_d / n_d
    if durations_us is None:
        dur_b = dur_d = float("nan")
    else:
        durations_us = np.asarray(durations_us, dtype=float)
        dur_b = float(durations_us[is_bright].mean())
        dur_d = float(durations_us[~is_bright].mean())
    return ErrorStats(
        eps_bright=eps_b,
        eps_dark=eps_d,
        fidelity=1.0 - 0.5 * (eps_b + eps_d),
        eps_bright_ci=_wilson_interval(k_b, n_b),
        eps_dark_ci=_wilson_interval(k_d, n_d),
        n_bright=n_b,
        n_dark=n_d,
        mean_duration_bright_us=dur_b,
        mean_duration_dark_us=dur_d,
    )


def _counts_at_duration(trajs: Sequence[Trajectory], duration_us: float) -> np.ndarray:
    t0 = trajs[0].bin_width_us
    nb = duration_us / t0
    if abs(nb - round(nb)) > 1e-9:
        raise ValueError("duration_us must be a whole number of bins")
    nb = int(round(nb))
    if nb < 1 or any(t.bins.size < nb for t in trajs):
        raise ValueError("duration must cover between 1 bin and the whole record")
    return np.stack([t.bins[:nb].sum() for t in trajs])


def optimize_threshold(
    trajs: Sequence[Trajectory], duration_us: float
) -> tuple[int, ErrorStats]:
    """Exhaustively scan integer thresholds and return the fidelity maximizer.

    Ties are broken toward the smallest threshold.  Labels are taken from
    each trajectory's ``prepared`` field.
    """
    if not trajs:
        raise ValueError("empty dataset")
    labels = np.asarray([t.prepared for t in trajs])
    totals = _counts_at_duration(trajs, duration_us)
    is_bright = labels == BRIGHT
    n_b = int(is_bright.sum())
    n_d = int(labels.size - n_b)
    if n_b == 0 or n_d == 0:
        raise ValueError("need both bright and dark trials to optimize a threshold")
    m = int(totals.max())
    hist_b = np.bincount(totals[is_bright], minlength=m + 1)
    hist_d = np.bincount(totals[~is_bright], minlength=m + 1)
    # eps_b(thr) = P(bright counts < thr), eps_d(thr) = P(dark counts >= thr)
    cum_b = np.concatenate([[0], np.cumsum(hist_b)])[: m + 1]
    cum_d_ge = n_d - np.concatenate([[0], np.cumsum(hist_d)])[: m + 1]
    fidelity = 1.0 - 0.5 * (cum_b / n_b + cum_d_ge / n_d)
    best = int(np.argmax(fidelity))  # first max = smallest threshold
    decisions = np.where(totals >= best, BRIGHT, DARK)
    stats = error_stats(labels, decisions, np.full(labels.size, float(duration_us)))
    return best, stats


def threshold_error_vs_duration(
    trajs: Sequence[Trajectory], durations_us: Sequence[float]
) -> list[tuple[float, int, ErrorStats]]:
    """Optimal-threshold error at each requested duration."""
    return [(d, *optimize_threshold(trajs, d)) for d in durations_us]


@dataclass(frozen=True)
class CalibratedRates:
    """Point estimates and one-sigma uncertainties, all in 1/ms."""

    gamma_b: float
    gamma_b_err: float
    gamma_d: float
    gamma_d_err: float
    gamma_dp: float
    gamma_dp_err: float
    gamma_rp: float
    gamma_rp_err: float

    def to_rate_params(self) -> RateParams:
        return RateParams(
            gamma_b=self.gamma_b,
            gamma_d=self.gamma_d,
            gamma_dp=max(self.gamma_dp, 0.0),
            gamma_rp=max(self.gamma_rp, 0.0),
        )


def _fit_poisson_peak(totals: np.ndarray) -> float:
    """Mean of the dominant Poisson peak of an integer sample.

    Least-squares fit of amplitude * pmf(n; mu) to the histogram over a
    window around the mode, so that pumping tails (trials that switched
    state mid-record) do not drag the estimate.
    """
    from scipy.optimize import OptimizeWarning, curve_fit
    from scipy.stats import poisson as _poisson

    m = int(totals.max())
    hist = np.bincount(totals, minlength=m + 1).astype(float)
    mode = int(np.argmax(hist))
    half = int(np.ceil(4 * np.sqrt(mode + 1)))
    lo, hi = max(0, mode - half), min(m, mode + half)
    ns = np.arange(lo, hi + 1)
    obs = hist[lo : hi + 1]

    def model(n, amp, mu):
        return amp * _poisson.pmf(n, mu)

    p0 = (float(totals.size), max(float(mode), 0.3))
    with warnings.catch_warnings():
        # only the point estimate is used; a singular covariance is fine
        warnings.simplefilter("ignore", OptimizeWarning)
        popt, _ = curve_fit(model, ns, obs, p0=p0, maxfev=20000)
    return float(popt[1])


def _mean_rate_slope(
    counts: np.ndarray, bin_width_us: float
) -> tuple[float, float, float]:
    """Linear fit of ensemble mean count rate (1/ms) vs time (ms).

    Returns (intercept, slope, slope_err).  Per-bin variances are equal
    under the Poisson model, so an unweighted fit is the weighted one.
    """
    n_trials, n_bins = counts.shape
    t0_ms = bin_width_us * _MS_PER_US
    t_ms = (np.arange(n_bins) + 0.5) * t0_ms
    rate = counts.mean(axis=0) / t0_ms
    coef, cov = np.polyfit(t_ms, rate, 1, cov=True)
    return float(coef[1]), float(coef[0]), float(np.sqrt(cov[0, 0]))


def calibrate_rates(
    trajs: Sequence[Trajectory],
    duration_fractions: Sequence[float] = (0.25, 0.5, 0.75, 1.0),
    min_trials: int = 100,
) -> CalibratedRates:
    """Recover emitter rates from a labeled dataset.

    Count rates come from Poisson fits to the dominant histogram peak at
    several record durations; pumping rates come from the linear decay
    (growth) of the instantaneous ensemble mean rate of bright (dark)
    prepared trials over the full record.
    """
    bright = [t for t in trajs if t.prepared == BRIGHT]
    dark = [t for t in trajs if t.prepared == DARK]
    if len(bright) < min_trials or len(dark) < min_trials:
        raise ValueError(
            f"calibration needs at least {min_trials} trials per state; "
            f"got {len(bright)} bright / {len(dark)} dark"
        )
    t0 = trajs[0].bin_width_us
    n_bins = trajs[0].bins.size
    counts_b = np.stack([t.bins for t in bright]).astype(np.int64)
    counts_d = np.stack([t.bins for t in dark]).astype(np.int64)

    def peak_rate(counts: np.ndarray) -> tuple[float, float]:
        estimates = []
        for frac in duration_fractions:
            nb = max(1, int(round(frac * n_bins)))
            mu = _fit_poisson_peak(counts[:, :nb].sum(axis=1))
            estimates.append(mu / (nb * t0 * _MS_PER_US))
        est = np.asarray(estimates)
        err = est.std(ddof=1) / np.sqrt(est.size) if est.size > 1 else float("nan")
        return float(est.mean()), float(err)

    gamma_b, gamma_b_err = peak_rate(counts_b)
    gamma_d, gamma_d_err = peak_rate(counts_d)
    spread = gamma_b - gamma_d
    if spread <= 0:
        raise ValueError("bright rate did not exceed dark rate; cannot calibrate pumping")

    _, slope_b, slope_b_err = _mean_rate_slope(counts_b, t0)
    _, slope_d, slope_d_err = _mean_rate_slope(counts_d, t0)
    return CalibratedRates(
        gamma_b=gamma_b,
        gamma_b_err=gamma_b_err,
        gamma_d=gamma_d,
        gamma_d_err=gamma_d_err,
        gamma_dp=-slope_b / spread,
        gamma_dp_err=slope_b_err / spread,
        gamma_rp=slope_d / spread,
        gamma_rp_err=slope_d_err / spread,
    )
