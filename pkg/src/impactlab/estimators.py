"""Estimators of the stationary density of the price modulo one, built from
normalized trade-event files.

The book imbalance vb / (vb + va) proxies the fractional part of the
fundamental price at large-tick assets.  Three estimators bin it over [0, 1]:
a volume-weighted two-sided histogram, a trade-count-weighted variant, and a
continuous estimator that spreads each trade's volume along the imbalance
path traced while the trade eats the opposite queue.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptySampleError

__all__ = [
    "LobEvent",
    "EventStream",
    "BinnedDensity",
    "load_events",
    "filter_events",
    "estimate_weighted",
    "estimate_weighted_uniform",
    "estimate_continuous",
    "DEFAULT_SESSION",
]

# 09:30:00 to 16:00:00 as nanoseconds since midnight
DEFAULT_SESSION = (34_200_000_000_000, 57_600_000_000_000)

CSV_COLUMNS = [
    "ts_ns",
    "side",
    "size",
    "bid_px_pre",
    "ask_px_pre",
    "vb_pre",
    "va_pre",
    "bid_px_post",
    "ask_px_post",
    "vb_post",
    "va_post",
    "tick",
]


@dataclass(frozen=True)
class LobEvent:
    """One trade with its level-1 book state before and after."""

    ts_ns: int
    side: str
    size: float
    bid_px_pre: int
    ask_px_pre: int
    vb_pre: float
    va_pre: float
    bid_px_post: int
    ask_px_post: int
    vb_post: float
    va_post: float
    tick: int

    @property
    def imbalance_pre(self) -> float:
        return self.vb_pre / (self.vb_pre + self.va_pre)

    @property
    def imbalance_post(self) -> float:
        tot = self.vb_post + self.va_post
        if tot <= 0.0:
            # emptied book side: imbalance pinned at the hit side's boundary
            return 1.0 if self.side == "buy" else 0.0
        return self.vb_post / tot

    def validate(self) -> str | None:
        """Returns a rejection code, or None when the event is consistent."""
        if self.side not in ("buy", "sell"):
            return "bad_side"
        if not self.size > 0:
            return "nonpositive_size"
        if min(self.vb_pre, self.va_pre, self.vb_post, self.va_post) < 0:
            return "negative_volume"
        if self.vb_pre + self.va_pre <= 0:
            return "undefined_imbalance"
        if self.side == "buy" and self.va_post > self.va_pre:
            return "ask_volume_grew_on_buy"
        if self.side == "sell" and self.vb_post > self.vb_pre:
            return "bid_volume_grew_on_sell"
        return None


@dataclass
class EventStream:
    """A sequence of validated events plus bookkeeping about its origin."""

    events: list
    rejected: list = field(default_factory=list)  # (line_no, code) pairs
    warnings: list = field(default_factory=list)
    filter_report: dict | None = None
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def total_volume(self) -> float:
        return float(sum(e.size for e in self.events))


_INT_FIELDS = {"ts_ns", "bid_px_pre", "ask_px_pre", "bid_px_post", "ask_px_post", "tick"}


def load_events(path: str | Path) -> EventStream:
    """Parse a headered trade-event CSV into an EventStream.

    Malformed rows (wrong field count, unparseable numbers, invariant
    violations) are collected as (line_number, code) pairs rather than
    aborting the load.  Non-monotone timestamps produce a warning only.
    """
    path = Path(path)
    events: list[LobEvent] = []
    rejected: list[tuple[int, str]] = []
    warnings: list[str] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != CSV_COLUMNS:
            raise ValueError(
                f"{path}: header must be exactly {','.join(CSV_COLUMNS)}"
            )
        last_ts = None
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_COLUMNS):
                rejected.append((line_no, "field_count"))
                continue
            try:
                kwargs = {}
                for name, raw in zip(CSV_COLUMNS, row):
                    if name == "side":
                        kwargs[name] = raw.strip()
                    elif name in _INT_FIELDS:
                        kwargs[name] = int(raw)
                    else:
                        kwargs[name] = float(raw)
                ev = LobEvent(**kwargs)
            except (ValueError, TypeError):
                rejected.append((line_no, "parse_error"))
                continue
            code = ev.validate()
            if code is not None:
                rejected.append((line_no, code))
                continue
            if last_ts is not None and ev.ts_ns < last_ts:
                warnings.append(f"line {line_no}: timestamp decreased")
            last_ts = ev.ts_ns
            events.append(ev)
    return EventStream(events=events, rejected=rejected, warnings=warnings)


def filter_events(stream: EventStream, session: tuple[int, int] = DEFAULT_SESSION) -> EventStream:
    """Apply the sample-selection rules used before estimation.

    Keeps trades inside the session window, with a one-tick pre-trade spread,
    whose size does not exceed the opposite-side pre-trade volume (a proxy
    for executing level 1 only).  If a kept trade still widens the spread,
    the hit side's post volume is forced to zero so the post imbalance sits
    at the boundary.  The report counts drops per reason and the fraction of
    volume retained, measured both before and after the session cut.
    """
    open_ns, close_ns = session
    kept: list[LobEvent] = []
    reasons = {"session": 0, "spread": 0, "depth": 0}
    vol_all = 0.0
    vol_in_session = 0.0
    vol_kept = 0.0
    for ev in stream:
        vol_all += ev.size
        if not open_ns <= ev.ts_ns <= close_ns:
            reasons["session"] += 1
            continue
        vol_in_session += ev.size
        if ev.ask_px_pre - ev.bid_px_pre != ev.tick:
            reasons["spread"] += 1
            continue
        opposite = ev.va_pre if ev.side == "buy" else ev.vb_pre
        if ev.size > opposite:
            reasons["depth"] += 1
            continue
        if ev.ask_px_post - ev.bid_px_post > ev.tick:
            if ev.side == "buy":
                ev = dataclasses.replace(ev, va_post=0.0)
            else:
                ev = dataclasses.replace(ev, vb_post=0.0)
        vol_kept += ev.size
        kept.append(ev)
    report = {
        "input_events": len(stream),
        "kept_events": len(kept),
        "dropped": reasons,
        "volume_total": vol_all,
        "volume_in_session": vol_in_session,
        "volume_kept": vol_kept,
        "volume_fraction_of_total": vol_kept / vol_all if vol_all else 0.0,
        "volume_fraction_of_session": vol_kept / vol_in_session if vol_in_session else 0.0,
    }
    return EventStream(
        events=kept,
        rejected=list(stream.rejected),
        warnings=list(stream.warnings),
        filter_report=report,
    )


@dataclass(frozen=True)
class BinnedDensity:
    """A K-bin histogram density on [0, 1]; (1/K) * sum(values) = 1."""

    values: np.ndarray
    estimator: str
    used_events: int
    filtered_events: int
    volume_used: float
    skipped: int = 0

    @property
    def K(self) -> int:
        return self.values.size

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.K + 1)

    def l1_distance(self, other_values: np.ndarray, other_x=None) -> float:
        """L1 distance to another density, given either as K bin values or as
        nodal values on a grid other_x (then averaged into the bins)."""
        other_values = np.asarray(other_values, dtype=float)
        if other_x is None:
            ov = other_values
        else:
            ov = np.empty(self.K)
            for k in range(self.K):
                xs = np.linspace(k / self.K, (k + 1) / self.K, 64)
                ov[k] = np.trapezoid(np.interp(xs, other_x, other_values), xs) * self.K
        return float(np.sum(np.abs(self.values - ov)) / self.K)

    def to_csv(self, path: str | Path) -> None:
        e = self.edges
        arr = np.column_stack([e[:-1], e[1:], self.values])
        np.savetxt(path, arr, delimiter=",", header="bin_lo,bin_hi,value", comments="")

    def to_json(self, path: str | Path, extra: dict | None = None) -> None:
        meta = {
            "estimator": self.estimator,
            "bins": self.K,
            "values": self.values.tolist(),
            "used_events": self.used_events,
            "filtered_events": self.filtered_events,
            "volume_used": self.volume_used,
            "skipped": self.skipped,
        }
        if extra:
            meta.update(extra)
        Path(path).write_text(json.dumps(meta))


def _bin_index(x: float, K: int) -> int:
    """Bins [(k-1)/K, k/K) for k = 1..K, with the last bin closed at 1."""
    if x >= 1.0:
        return K - 1
    k = int(x * K)
    return min(max(k, 0), K - 1)


def _require_events(stream: EventStream) -> None:
    if len(stream) == 0:
        raise EmptySampleError("no events to estimate from")


def estimate_weighted(stream: EventStream, w: float = 0.5, K: int = 10) -> BinnedDensity:
    """Volume-weighted two-sided histogram of the book imbalance.

    Each trade contributes its volume split w : (1 - w) between the bins of
    its pre- and post-trade imbalance, normalized to integrate to one.
    """
    _require_events(stream)
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w must lie in [0, 1], got {w}")
    mass = np.zeros(K)
    total = 0.0
    for ev in stream:
        mass[_bin_index(ev.imbalance_pre, K)] += w * ev.size
        mass[_bin_index(ev.imbalance_post, K)] += (1.0 - w) * ev.size
        total += ev.size
    return BinnedDensity(
        values=mass * K / total,
        estimator=f"weighted(w={w})",
        used_events=len(stream),
        filtered_events=len(stream.rejected),
        volume_used=total,
    )


def estimate_weighted_uniform(stream: EventStream, w: float = 0.5, K: int = 10) -> BinnedDensity:
    """As estimate_weighted but every trade counts once regardless of size."""
    _require_events(stream)
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w must lie in [0, 1], got {w}")
    mass = np.zeros(K)
    for ev in stream:
        mass[_bin_index(ev.imbalance_pre, K)] += w
        mass[_bin_index(ev.imbalance_post, K)] += 1.0 - w
    return BinnedDensity(
        values=mass * K / len(stream),
        estimator=f"weighted_uniform(w={w})",
        used_events=len(stream),
        filtered_events=len(stream.rejected),
        volume_used=stream.total_volume(),
    )


def continuous_bin_masses(ev: LobEvent, K: int) -> np.ndarray | None:
    """Volume received by each bin along one trade's depletion path.

    A buy eats the ask queue: the imbalance vb / (vb + va - v) increases in
    the executed amount v, from vb/(vb+va) toward vb/(vb+va-dV).  A sell
    eats the bid: (vb - v)/(vb + va - v) decreases.  Both maps are monotone
    rational functions of v, so the volume landing in bin [c0, c1) is the
    length of an interval found by inverting the map at the bin edges.
    Returns None when the path is degenerate (buy clearing the whole book
    with an empty bid: the imbalance is 1 throughout but the map's
    denominator vanishes at the endpoint).
    """
    vb, va, dV = ev.vb_pre, ev.va_pre, ev.size
    tot = vb + va
    edges = np.arange(K + 1) / K
    if ev.side == "buy":
        if tot - dV <= 0.0 and vb <= 0.0:
            return None
        # v(c) = tot - vb / c, clipped to the executed range
        with np.errstate(divide="ignore"):
            v_at = tot - np.divide(vb, edges, out=np.full(K + 1, np.inf), where=edges > 0)
        v_at = np.clip(v_at, 0.0, dV)
        masses = np.diff(v_at)
        if tot - dV <= 0.0:
            # path ends exactly at imbalance 1: leftover volume to the top bin
            masses[-1] += dV - v_at[-1]
    else:
        # c(v) = (vb - v)/(tot - v) decreasing; v(c) = (vb - c*tot)/(1 - c)
        with np.errstate(divide="ignore", invalid="ignore"):
            v_at = np.divide(
                vb - edges * tot, 1.0 - edges, out=np.full(K + 1, -np.inf), where=edges < 1.0
            )
        v_at = np.clip(v_at, 0.0, dV)
        masses = -np.diff(v_at)
        if vb - dV <= 0.0 and tot - dV > 0.0:
            pass  # path reaches 0 inside the bottom bin; clip already handles it
    return masses


def estimate_continuous(stream: EventStream, K: int = 10) -> BinnedDensity:
    """Distribute each trade's volume along its depletion path's imbalance."""
    _require_events(stream)
    mass = np.zeros(K)
    total = 0.0
    skipped = 0
    for ev in stream:
        m = continuous_bin_masses(ev, K)
        if m is None:
            skipped += 1
            continue
        mass += m
        total += ev.size
    if total <= 0.0:
        raise EmptySampleError("all events were degenerate; nothing to estimate")
    return BinnedDensity(
        values=mass * K / total,
        estimator="continuous",
        used_events=len(stream) - skipped,
        filtered_events=len(stream.rejected),
        volume_used=total,
        skipped=skipped,
    )


def events_to_csv(events, path: str | Path) -> None:
    """Write events in the input CSV schema (floats kept at full precision)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for ev in events:
            row = []
            for c in CSV_COLUMNS:
                v = getattr(ev, c)
                row.append(repr(float(v)) if isinstance(v, float) else v)
            writer.writerow(row)
