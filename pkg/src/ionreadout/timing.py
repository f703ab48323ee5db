"""Second-order intensity correlation analysis of time-tagged photon streams.

Works on integer-nanosecond time tags from two detection channels.  The
normalized coincidence histogram g2(tau) is estimated from all pairwise
delays t_b - t_a that fall inside a +/- max_delay window, using a sorted
two-pointer sweep so the cost is linear in the number of qualifying pairs
rather than quadratic in the number of tags.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TimeTagStream:
    """One channel of detection time tags.

    :param channel: channel label, e.g. ``"A"``.
    :param t_ns: integer nanosecond timestamps, sorted ascending.
    :param duration_ns: total observation time; tags must lie in [0, duration_ns).
    """

    channel: str
    t_ns: np.ndarray
    duration_ns: int

    def __post_init__(self) -> None:
        tags = np.asarray(self.t_ns, dtype=np.int64)
        object.__setattr__(self, "t_ns", tags)
        if self.duration_ns <= 0:
            raise ValueError("duration_ns must be positive")
        if tags.ndim != 1:
            raise ValueError("t_ns must be one-dimensional")
        if tags.size and np.any(np.diff(tags) < 0):
            raise ValueError(f"channel {self.channel!r}: tags must be sorted ascending")
        if tags.size and (tags[0] < 0 or tags[-1] >= self.duration_ns):
            raise ValueError(
                f"channel {self.channel!r}: tags must lie within [0, duration_ns)"
            )

    @property
    def rate_per_ns(self) -> float:
        return self.t_ns.size / self.duration_ns


@dataclass(frozen=True)
class G2Estimate:
    """Normalized delay histogram with Poisson counting errors.

    ``masked`` marks bins inside a user-supplied exclusion window (for
    instance delays corrupted by electrical crosstalk); their values are
    still reported but flagged so downstream searches can skip them.
    """

    delay_ns: np.ndarray
    g2: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    masked: np.ndarray
    n_pairs: np.ndarray
    bin_width_ns: float


@dataclass(frozen=True)
class DipResult:
    delay_ns: float
    g2_min: float
    excluded_bins: int


def _pair_delays(a: np.ndarray, b: np.ndarray, max_delay: int, block: int = 1 << 16):
    """Yield arrays of delays t_b - t_a with |delay| <= max_delay.

    Both inputs must be sorted.  Tags are processed in blocks so peak
    memory stays bounded for long streams.
    """
    lo_all = np.searchsorted(b, a - max_delay, side="left")
    hi_all = np.searchsorted(b, a + max_delay, side="right")
    for start in range(0, a.size, block):
        stop = min(start + block, a.size)
        lo = lo_all[start:stop]
        hi = hi_all[start:stop]
        lens = hi - lo
        total = int(lens.sum())
        if total == 0:
            continue
        # flat index construction: for each a-tag, the run b[lo:hi]
        offsets = np.repeat(np.cumsum(lens) - lens, lens)
        b_idx = np.arange(total, dtype=np.int64) - offsets + np.repeat(lo, lens)
        yield b[b_idx] - np.repeat(a[start:stop], lens)


def g2_estimate(
    stream_a: TimeTagStream,
    stream_b: TimeTagStream,
    bin_width_ns: int = 1,
    max_delay_ns: int = 500,
    exclude_ns: tuple[float, float] | None = None,
) -> G2Estimate:
    """Estimate g2(tau) from two tag streams.

    Delays are histogrammed into bins of ``bin_width_ns`` centered on
    integer multiples of the bin width, covering +/- max_delay_ns.  Each
    bin is normalized by rate_a * rate_b * T * bin_width, the expected
    pair count for independent Poisson streams, so an uncorrelated pair
    of channels gives g2 = 1.  Counting errors are Poisson: the 68%
    interval half-width is sqrt(max(N, 1)) in pair counts.
    """
    if bin_width_ns < 1:
        raise ValueError("bin_width_ns must be >= 1 ns")
    if max_delay_ns < bin_width_ns:
        raise ValueError("max_delay_ns must be at least one bin width")
    if stream_a.t_ns.size == 0 or stream_b.t_ns.size == 0:
        raise ValueError("empty tag stream")
    if stream_a.duration_ns != stream_b.duration_ns:
        raise ValueError("streams must share one observation window")
    if exclude_ns is not None and exclude_ns[0] > exclude_ns[1]:
        raise ValueError("exclusion window must satisfy lo <= hi")

    n_side = int(max_delay_ns // bin_width_ns)
    centers = np.arange(-n_side, n_side + 1, dtype=np.int64) * bin_width_ns
    edges = (np.arange(-n_side, n_side + 2) - 0.5) * bin_width_ns

    hist = np.zeros(centers.size, dtype=np.int64)
    span = int(n_side * bin_width_ns + bin_width_ns)  # cover outermost edges
    for delays in _pair_delays(stream_a.t_ns, stream_b.t_ns, span):
        hist += np.histogram(delays, bins=edges)[0]

    duration = stream_a.duration_ns
    expected = (
        stream_a.t_ns.size * stream_b.t_ns.size * bin_width_ns / duration
    )
    g2 = hist / expected
    sigma = np.sqrt(np.maximum(hist, 1)) / expected
    if exclude_ns is None:
        masked = np.zeros(centers.size, dtype=bool)
    else:
        masked = (centers >= exclude_ns[0]) & (centers <= exclude_ns[1])
    return G2Estimate(
        delay_ns=centers.astype(float),
        g2=g2,
        ci_low=g2 - sigma,
        ci_high=g2 + sigma,
        masked=masked,
        n_pairs=hist,
        bin_width_ns=float(bin_width_ns),
    )


def find_dip(estimate: G2Estimate) -> DipResult:
    """Locate the minimum unmasked g2 bin.

    Ties are broken toward the smallest |delay| (and toward the negative
    delay if both signs tie).  Raises if every bin is masked.
    """
    keep = ~estimate.masked
    if not np.any(keep):
        raise ValueError("all delay bins are masked; cannot locate a dip")
    g2 = estimate.g2[keep]
    delays = estimate.delay_ns[keep]
    g2_min = g2.min()
    at_min = np.flatnonzero(g2 == g2_min)
    order = np.lexsort((delays[at_min], np.abs(delays[at_min])))
    pick = at_min[order[0]]
    return DipResult(
        delay_ns=float(delays[pick]),
        g2_min=float(g2_min),
        excluded_bins=int(np.count_nonzero(estimate.masked)),
    )
