"""Spike-train ingestion and pairwise causality scans.

Spike times are in milliseconds relative to trial start. Trains are binned
into binary series (a bin is 1 when it holds at least one spike), trials are
concatenated in session order, and UC/CC tests are run for every ordered
cross-region pair of units.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from .blocks import SymbolSeries
from .causality import TestConfig, TestResult, run_test
from .parallel import map_batches


class SpikeDataError(ValueError):
    """Malformed spike or event data."""


@dataclass(frozen=True, eq=False)
class SpikeTrain:
    unit_id: str
    region: str
    trials: tuple[np.ndarray, ...]
    durations: tuple[float, ...]

    def __post_init__(self):
        if len(self.trials) != len(self.durations):
            raise SpikeDataError(f"unit {self.unit_id}: {len(self.trials)} trials but {len(self.durations)} durations")
        trials = []
        for i, (ts, dur) in enumerate(zip(self.trials, self.durations)):
            ts = np.asarray(ts, dtype=float).ravel()
            _check_timestamps(ts, dur, f"unit {self.unit_id} trial {i}")
            trials.append(ts)
        object.__setattr__(self, "trials", tuple(trials))
        object.__setattr__(self, "durations", tuple(float(d) for d in self.durations))


def _check_timestamps(ts: np.ndarray, duration: float, where: str) -> None:
    if duration <= 0:
        raise SpikeDataError(f"{where}: duration must be positive")
    if ts.size and (np.any(np.diff(ts) <= 0)):
        raise SpikeDataError(f"{where}: spike times are not strictly increasing")
    if ts.size and (ts[0] < 0 or ts[-1] >= duration):
        raise SpikeDataError(f"{where}: spike time outside [0, {duration})")


def bin_spikes(train, bin_ms: float = 1.0, trial_duration_ms: float | None = None) -> SymbolSeries:
    """Binary series with bin b = 1 iff some spike t has b*bin_ms <= t < (b+1)*bin_ms.

    ``train`` is either one trial's timestamps (``trial_duration_ms`` required)
    or a ``SpikeTrain``, whose trials are binned with their own durations and
    concatenated. Each trial contributes ceil(duration / bin_ms) bins.
    """
    if bin_ms <= 0:
        raise SpikeDataError("bin width must be positive")
    if isinstance(train, SpikeTrain):
        return concat_trials([bin_spikes(ts, bin_ms, d) for ts, d in zip(train.trials, train.durations)])[0]
    ts = np.asarray(train, dtype=float).ravel()
    if trial_duration_ms is None:
        raise SpikeDataError("trial duration is required")
    _check_timestamps(ts, trial_duration_ms, "spike train")
    n_bins = math.ceil(trial_duration_ms / bin_ms)
    out = np.zeros(n_bins, dtype=np.int64)
    out[np.floor(ts / bin_ms).astype(np.int64)] = 1
    return SymbolSeries(out, 2)


def clipped_spikes(timestamps, bin_ms: float = 1.0) -> int:
    """Spikes lost when several fall in one bin."""
    ts = np.asarray(timestamps, dtype=float).ravel()
    return int(ts.size - np.unique(np.floor(ts / bin_ms)).size)


def concat_trials(trials: Sequence) -> tuple[SymbolSeries, tuple[int, ...]]:
    """Concatenate per-trial series; also returns the start index of every later trial."""
    if not trials:
        raise SpikeDataError("no trials to concatenate")
    arrays = [t.values if isinstance(t, SymbolSeries) else np.asarray(t, dtype=np.int64) for t in trials]
    cards = {t.cardinality for t in trials if isinstance(t, SymbolSeries)}
    if len(cards) > 1:
        raise SpikeDataError(f"trials use different alphabets: {sorted(cards)}")
    values = np.concatenate(arrays)
    card = cards.pop() if cards else max(2, int(values.max()) + 1)
    starts = np.cumsum([a.size for a in arrays])[:-1]
    return SymbolSeries(values, card), tuple(int(s) for s in starts)


@dataclass(frozen=True)
class EventSeries:
    """One designated task epoch as per-trial (start_ms, end_ms) intervals."""

    epoch: str
    intervals: tuple[tuple[tuple[float, float], ...], ...]
    durations: tuple[float, ...]

    def binned(self, bin_ms: float = 1.0) -> tuple[SymbolSeries, tuple[int, ...]]:
        return concat_trials(event_series(self.intervals, self.durations, bin_ms))


def event_series(intervals: Sequence[Sequence[tuple[float, float]]], durations: Sequence[float],
                 bin_ms: float = 1.0) -> list[SymbolSeries]:
    """Per-trial binary series, 1 on every bin that overlaps a designated epoch."""
    if len(intervals) != len(durations):
        raise SpikeDataError("one interval list per trial is required")
    out = []
    for spans, dur in zip(intervals, durations):
        n_bins = math.ceil(dur / bin_ms)
        s = np.zeros(n_bins, dtype=np.int64)
        for start, end in spans:
            if not 0 <= start < end <= dur:
                raise SpikeDataError(f"epoch ({start}, {end}) outside trial of {dur} ms")
            s[int(math.floor(start / bin_ms)):int(math.ceil(end / bin_ms))] = 1
        out.append(SymbolSeries(s, 2))
    return out


def shift_series(s, lag: int) -> SymbolSeries:
    """Delay ``s`` by ``lag`` bins and drop the overhang: out[i] = s[i - lag] in the
    frame of the companion series trimmed by ``trim_for_shift``."""
    v = s.values if isinstance(s, SymbolSeries) else np.asarray(s, dtype=np.int64)
    card = s.cardinality if isinstance(s, SymbolSeries) else max(2, int(v.max()) + 1)
    if abs(lag) >= v.size:
        raise SpikeDataError(f"lag {lag} must be shorter than the series ({v.size})")
    out = v[: v.size - lag] if lag >= 0 else v[-lag:]
    return SymbolSeries(out, card)


def trim_for_shift(s, lag: int) -> SymbolSeries:
    """Companion of ``shift_series``: the part of an unshifted series that stays aligned."""
    v = s.values if isinstance(s, SymbolSeries) else np.asarray(s, dtype=np.int64)
    card = s.cardinality if isinstance(s, SymbolSeries) else max(2, int(v.max()) + 1)
    if abs(lag) >= v.size:
        raise SpikeDataError(f"lag {lag} must be shorter than the series ({v.size})")
    out = v[lag:] if lag >= 0 else v[: v.size + lag]
    return SymbolSeries(out, card)


# --- sessions ---------------------------------------------------------------

@dataclass(eq=False)
class Session:
    units: list[SpikeTrain]
    events: list[list[tuple[float, float]]] | None = None
    bin_ms: float = 1.0

    def unit(self, unit_id: str) -> SpikeTrain:
        for u in self.units:
            if u.unit_id == unit_id:
                return u
        raise SpikeDataError(f"no unit {unit_id!r} in session")

    @property
    def durations(self) -> tuple[float, ...]:
        return self.units[0].durations if self.units else ()

    def binned(self, unit_id: str) -> tuple[SymbolSeries, tuple[int, ...]]:
        u = self.unit(unit_id)
        return concat_trials([bin_spikes(ts, self.bin_ms, d) for ts, d in zip(u.trials, u.durations)])

    def event_track(self) -> tuple[SymbolSeries, tuple[int, ...]]:
        if self.events is None:
            raise SpikeDataError("session has no event series")
        return EventSeries("epoch", tuple(map(tuple, self.events)), self.durations).binned(self.bin_ms)


@dataclass
class ScanRow:
    source: str
    target: str
    confounder: str | None
    direction: str
    length: int
    result: TestResult
    shifted: TestResult | None = None

    def to_record(self) -> dict:
        rec = {
            "source": self.source,
            "target": self.target,
            "confounder": self.confounder,
            "direction": self.direction,
            "length": self.length,
        }
        rec.update(self.result.to_record())
        if self.shifted is not None:
            rec["shifted_p_value"] = self.shifted.p_value
            rec["shifted_reject"] = self.shifted.reject
        return rec


@dataclass
class ScanReport:
    rows: list[ScanRow]
    significance: float
    policy: str
    shift_bins: int | None = None
    clipped_spikes: dict[str, int] = field(default_factory=dict)

    @property
    def n_tests(self) -> int:
        return len(self.rows)

    @property
    def n_rejected(self) -> int:
        return sum(r.result.reject for r in self.rows)

    @property
    def rejection_fraction(self) -> float:
        return self.n_rejected / self.n_tests if self.rows else 0.0

    @property
    def n_persisting(self) -> int:
        return sum(1 for r in self.rows if r.shifted is not None and r.shifted.reject)

    def summary(self) -> dict:
        return {
            "schema": "ccdi.scan_summary/1",
            "policy": self.policy,
            "significance": self.significance,
            "tests": self.n_tests,
            "rejected": self.n_rejected,
            "rejection_fraction": self.rejection_fraction,
            "shift_bins": self.shift_bins,
            "persisting_after_shift": self.n_persisting,
            "clipped_spikes": dict(sorted(self.clipped_spikes.items())),
        }

    def to_lines(self) -> list[str]:
        lines = [json.dumps({"schema": "ccdi.scan_row/1", **r.to_record()}, sort_keys=True) for r in self.rows]
        lines.append(json.dumps(self.summary(), sort_keys=True))
        return lines

    def table(self) -> str:
        head = f"{'source':>10} {'target':>10} {'direction':>12} {'n':>9} {'stat':>12} {'dof':>6} {'p':>10} reject"
        out = [head, "-" * len(head)]
        for r in self.rows:
            res = r.result
            out.append(
                f"{r.source:>10} {r.target:>10} {r.direction:>12} {res.n:>9d} {res.statistic:>12.4g} "
                f"{res.dof:>6d} {res.p_value:>10.3g} {'yes' if res.reject else 'no'}"
            )
        out.append(f"rejected {self.n_rejected}/{self.n_tests} ({100 * self.rejection_fraction:.1f}%) "
                   f"at alpha={self.significance}")
        if self.shift_bins is not None:
            out.append(f"persisting after a {self.shift_bins}-bin shift: {self.n_persisting}/{self.n_rejected}")
        return "\n".join(out)


def _pair_test(job, cfg: TestConfig, exclude_boundaries: bool, shift_bins: int | None):
    x, y, z, boundaries = job
    res = run_test(x, y, z, cfg, boundaries=boundaries if exclude_boundaries else None)
    shifted = None
    if shift_bins is not None and res.reject:
        # boundaries no longer line up after the shift; plain concatenation only
        ys = shift_series(y, shift_bins)
        xs = trim_for_shift(x, shift_bins)
        zs = None if z is None else trim_for_shift(z, shift_bins)
        shifted = run_test(xs, ys, zs, cfg)
    return res, shifted


def scan_pairs(session: Session, cfg: TestConfig, confounder: str = "none",
               exclude_boundaries: bool = False, shift_bins: int | None = None,
               cross_region_only: bool = True, workers: int = 1) -> ScanReport:
    """Run the test on every ordered (source, target) unit pair.

    ``confounder`` is "none" (UC), "events" (the session's event track) or
    "unit:<id>" (another unit's train, excluded from the pairs). Rows come back
    sorted by (source, target). With ``shift_bins`` set, rejected pairs are
    re-tested with the target delayed by that many bins.
    """
    if len(session.units) < 2:
        raise SpikeDataError("a scan needs at least two units")
    z_series, z_id = None, None
    if confounder == "none":
        cfg = TestConfig(cfg.k, cfg.alphabet, cfg.significance, "uc")
    elif confounder == "events":
        z_series, _ = session.event_track()
        cfg = TestConfig(cfg.k, cfg.alphabet.__class__(cfg.alphabet.m, cfg.alphabet.ell, 2), cfg.significance, "cc")
    elif confounder.startswith("unit:"):
        z_id = confounder[5:]
        z_series, _ = session.binned(z_id)
        cfg = TestConfig(cfg.k, cfg.alphabet.__class__(cfg.alphabet.m, cfg.alphabet.ell, 2), cfg.significance, "cc")
    else:
        raise SpikeDataError(f"unknown confounder policy {confounder!r}")

    binned = {u.unit_id: session.binned(u.unit_id) for u in session.units}
    clipped = {u.unit_id: sum(clipped_spikes(ts, session.bin_ms) for ts in u.trials) for u in session.units}
    regions = {u.unit_id: u.region for u in session.units}
    ids = sorted(i for i in binned if i != z_id)
    pairs = [(s, t) for s in ids for t in ids
             if s != t and (not cross_region_only or regions[s] != regions[t])]
    jobs = [(binned[s][0], binned[t][0], z_series, binned[s][1]) for s, t in pairs]
    fn = partial(_pair_test, cfg=cfg, exclude_boundaries=exclude_boundaries, shift_bins=shift_bins)
    outcomes = map_batches(fn, jobs, workers)
    rows = [
        ScanRow(s, t, z_id if z_id else (confounder if confounder == "events" else None),
                f"{regions[s]}->{regions[t]}", len(binned[s][0]), res, shifted)
        for (s, t), (res, shifted) in zip(pairs, outcomes)
    ]
    return ScanReport(rows, cfg.significance, confounder, shift_bins, clipped)


# --- file formats -------------------------------------------------------------

def _header(lines: list[str], path) -> tuple[dict[str, str], list[tuple[int, str]]]:
    head, body = {}, []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if ":" in line:
                key, val = line[1:].split(":", 1)
                head[key.strip()] = val.strip()
            continue
        body.append((lineno, line))
    return head, body


def _trial_lines(body, n_trials: int, path) -> dict[int, str]:
    out: dict[int, str] = {}
    for lineno, line in body:
        if ":" not in line:
            raise SpikeDataError(f"{path}:{lineno}: expected '<trial>: values'")
        idx, rest = line.split(":", 1)
        try:
            i = int(idx)
        except ValueError:
            raise SpikeDataError(f"{path}:{lineno}: bad trial index {idx!r}") from None
        if not 0 <= i < n_trials or i in out:
            raise SpikeDataError(f"{path}:{lineno}: trial index {i} out of range or repeated")
        out[i] = rest
    return out


def _durations(head: dict[str, str], n_trials: int, path) -> list[float]:
    if "durations" in head:
        d = [float(v) for v in head["durations"].split()]
    elif "duration" in head:
        d = [float(head["duration"])] * n_trials
    else:
        raise SpikeDataError(f"{path}: header needs 'duration' or 'durations'")
    if len(d) != n_trials:
        raise SpikeDataError(f"{path}: {len(d)} durations for {n_trials} trials")
    return d


def read_spike_file(path) -> SpikeTrain:
    path = Path(path)
    head, body = _header(path.read_text().splitlines(), path)
    for key in ("unit", "region", "trials"):
        if key not in head:
            raise SpikeDataError(f"{path}: missing header '# {key}: ...'")
    n = int(head["trials"])
    durations = _durations(head, n, path)
    lines = _trial_lines(body, n, path)
    trials = []
    for i in range(n):
        try:
            trials.append(np.array([float(v) for v in lines.get(i, "").split()]))
        except ValueError:
            raise SpikeDataError(f"{path}: trial {i} has a non-numeric spike time") from None
    return SpikeTrain(head["unit"], head["region"], tuple(trials), tuple(durations))


def write_spike_file(path, train: SpikeTrain) -> None:
    lines = [f"# unit: {train.unit_id}", f"# region: {train.region}", f"# trials: {len(train.trials)}",
             "# durations: " + " ".join(repr(d) for d in train.durations)]
    for i, ts in enumerate(train.trials):
        lines.append(f"{i}: " + " ".join(repr(float(t)) for t in ts))
    Path(path).write_text("\n".join(lines) + "\n")


def read_event_file(path, n_trials: int | None = None) -> list[list[tuple[float, float]]]:
    path = Path(path)
    head, body = _header(path.read_text().splitlines(), path)
    n = int(head.get("trials", n_trials if n_trials is not None else -1))
    if n < 0:
        raise SpikeDataError(f"{path}: missing '# trials: ...'")
    lines = _trial_lines(body, n, path)
    out = []
    for i in range(n):
        vals = [float(v) for v in lines.get(i, "").split()]
        if len(vals) % 2:
            raise SpikeDataError(f"{path}: trial {i} needs (start, end) pairs")
        out.append(list(zip(vals[0::2], vals[1::2])))
    return out


def write_event_file(path, intervals, epoch: str = "cue") -> None:
    lines = [f"# epoch: {epoch}", f"# trials: {len(intervals)}"]
    for i, spans in enumerate(intervals):
        lines.append(f"{i}: " + " ".join(f"{s!r} {e!r}" for s, e in spans))
    Path(path).write_text("\n".join(lines) + "\n")


def load_session(directory, bin_ms: float = 1.0) -> Session:
    """All ``*.spk`` unit files in a directory, plus ``events.evt`` when present."""
    directory = Path(directory)
    units = [read_spike_file(p) for p in sorted(directory.glob("*.spk"))]
    if not units:
        raise SpikeDataError(f"{directory}: no .spk files")
    durations = units[0].durations
    for u in units[1:]:
        if u.durations != durations:
            raise SpikeDataError(f"unit {u.unit_id} has trial durations differing from {units[0].unit_id}")
    ev = directory / "events.evt"
    events = read_event_file(ev, len(durations)) if ev.exists() else None
    return Session(units, events, bin_ms)


def write_session(directory, session: Session, epoch: str = "cue") -> None:
    """Inverse of ``load_session``: one ``<unit>.spk`` per unit plus ``events.evt``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for u in session.units:
        write_spike_file(directory / f"{u.unit_id}.spk", u)
    if session.events is not None:
        write_event_file(directory / "events.evt", session.events, epoch)


# --- synthetic fixtures -------------------------------------------------------

def _train_from_bins(unit_id: str, region: str, bins: np.ndarray, n_trials: int, bin_ms: float) -> SpikeTrain:
    per = bins.size // n_trials
    trials = tuple((np.flatnonzero(bins[i * per:(i + 1) * per]) + 0.5) * bin_ms for i in range(n_trials))
    return SpikeTrain(unit_id, region, trials, (per * bin_ms,) * n_trials)


def planted_session(length: int = 100_000, delay: int = 1, flip: float = 0.01, rate: float = 0.1,
                    n_trials: int = 10, seed=0) -> Session:
    """Two units: A fires iid at ``rate`` per bin; B copies A ``delay`` bins later with flips.

    A sits in region "R1" and B in "R2"; influence runs from A to B only.
    """
    rng = np.random.default_rng(seed)
    a = (rng.random(length) < rate).astype(np.int64)
    b = np.zeros(length, dtype=np.int64)
    b[delay:] = a[:-delay] if delay else a
    b ^= (rng.random(length) < flip).astype(np.int64)
    return Session([_train_from_bins("A", "R1", a, n_trials, 1.0), _train_from_bins("B", "R2", b, n_trials, 1.0)])


def independent_session(length: int = 100_000, n_per_region: int = 3, rate: float = 0.1,
                        n_trials: int = 10, seed=0) -> Session:
    """Units with mutually independent iid firing, split over regions "R1" and "R2"."""
    rng = np.random.default_rng(seed)
    units = []
    for region in ("R1", "R2"):
        for j in range(n_per_region):
            bins = (rng.random(length) < rate).astype(np.int64)
            units.append(_train_from_bins(f"{region}u{j}", region, bins, n_trials, 1.0))
    return Session(units)
