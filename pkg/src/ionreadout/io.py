"""CSV interchange formats shared by the CLI, scripts and tests.

All writers emit deterministic bytes for identical inputs: plain comma
separation, '\n' line endings, floats via repr so values round-trip.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .optics import APSurface
from .photon_sim import Trajectory
from .rfcircuit import BiasCountCurve
from .timing import G2Estimate, TimeTagStream


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_rows(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_trajectories_csv(path, trajs: Sequence[Trajectory]) -> None:
    """Long-format dump: one row per (trial, bin)."""
    def rows():
        for trial_id, traj in enumerate(trajs):
            for bin_index, counts in enumerate(traj.bins):
                yield trial_id, traj.prepared, bin_index, int(counts)

    _write_rows(path, ["trial_id", "prepared", "bin_index", "counts"], rows())


def read_trajectories_csv(path, bin_width_us: float = 1.0) -> list[Trajectory]:
    by_trial: dict[int, tuple[str, list[tuple[int, int]]]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"trial_id", "prepared", "bin_index", "counts"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(required)}")
        for row in reader:
            tid = int(row["trial_id"])
            entry = by_trial.setdefault(tid, (row["prepared"], []))
            if entry[0] != row["prepared"]:
                raise ValueError(f"{path}: trial {tid} has inconsistent labels")
            entry[1].append((int(row["bin_index"]), int(row["counts"])))
    trajs = []
    for tid in sorted(by_trial):
        prepared, pairs = by_trial[tid]
        pairs.sort()
        if [p[0] for p in pairs] != list(range(len(pairs))):
            raise ValueError(f"{path}: trial {tid} has missing or duplicate bins")
        bins = np.array([p[1] for p in pairs], dtype=np.int16)
        trajs.append(Trajectory(prepared=prepared, bins=bins, bin_width_us=bin_width_us))
    return trajs


def write_timetags_csv(path, streams: Sequence[TimeTagStream]) -> None:
    def rows():
        for stream in streams:
            for t in stream.t_ns:
                yield stream.channel, int(t)

    _write_rows(path, ["channel", "t_ns"], rows())


def read_timetags_csv(path, duration_ns: int | None = None) -> list[TimeTagStream]:
    tags: dict[str, list[int]] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"channel", "t_ns"}.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected columns ['channel', 't_ns']")
        for row in reader:
            tags.setdefault(row["channel"], []).append(int(row["t_ns"]))
    if not tags:
        raise ValueError(f"{path}: no tags found")
    if duration_ns is None:
        duration_ns = max(max(v) for v in tags.values() if v) + 1
    return [
        TimeTagStream(channel=ch, t_ns=np.array(sorted(v), dtype=np.int64),
                      duration_ns=duration_ns)
        for ch, v in sorted(tags.items())
    ]


def write_results_csv(path, rows) -> None:
    """Classification results: (trial_id, truth, decision, duration_us, confidence)."""
    _write_rows(path, ["trial_id", "truth", "decision", "duration_us", "confidence"], rows)


def write_bias_curve_csv(path, curve: BiasCountCurve) -> None:
    _write_rows(path, ["bias_ua", "counts"], zip(curve.bias_ua, curve.counts))


def read_bias_curve_csv(path) -> BiasCountCurve:
    bias, counts = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"bias_ua", "counts"}.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected columns ['bias_ua', 'counts']")
        for row in reader:
            bias.append(float(row["bias_ua"]))
            counts.append(float(row["counts"]))
    return BiasCountCurve(np.asarray(bias), np.asarray(counts))


def write_ap_surface_csv(path, surface: APSurface) -> None:
    def rows():
        for pol, table in (("TE", surface.ap_te), ("TM", surface.ap_tm)):
            for i, th in enumerate(surface.theta_deg):
                for j, ph in enumerate(surface.phi_deg):
                    yield pol, th, ph, table[i, j]

    _write_rows(path, ["polarization", "theta_deg", "phi_deg", "ap"], rows())


def read_ap_surface_csv(path) -> APSurface:
    data: dict[str, dict[tuple[float, float], float]] = {"TE": {}, "TM": {}}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"polarization", "theta_deg", "phi_deg", "ap"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: expected columns {sorted(required)}")
        for row in reader:
            pol = row["polarization"].upper()
            if pol not in data:
                raise ValueError(f"{path}: polarization must be TE or TM, got {pol!r}")
            data[pol][(float(row["theta_deg"]), float(row["phi_deg"]))] = float(row["ap"])
    if not data["TE"] or not data["TM"]:
        raise ValueError(f"{path}: need both TE and TM tables")
    thetas = sorted({k[0] for k in data["TE"]})
    phis = sorted({k[1] for k in data["TE"]})
    tables = {}
    for pol in ("TE", "TM"):
        table = np.empty((len(thetas), len(phis)))
        for i, th in enumerate(thetas):
            for j, ph in enumerate(phis):
                if (th, ph) not in data[pol]:
                    raise ValueError(
                        f"{path}: {pol} table is not a full regular grid "
                        f"(missing theta={th}, phi={ph})"
                    )
                table[i, j] = data[pol][(th, ph)]
        tables[pol] = table
    return APSurface(np.asarray(thetas), np.asarray(phis), tables["TE"], tables["TM"])


def write_g2_csv(path, est: G2Estimate) -> None:
    _write_rows(
        path,
        ["delay_ns", "g2", "ci_low", "ci_high", "masked"],
        zip(est.delay_ns, est.g2, est.ci_low, est.ci_high, est.masked),
    )


def write_position_sweep_csv(path, sweep) -> None:
    _write_rows(
        path,
        ["lateral_um", "rel_rate", "rel_rate_const_ap"],
        zip(sweep.lateral_um, sweep.rel_rate, sweep.rel_rate_const_ap),
    )


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
