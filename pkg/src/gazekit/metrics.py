"""Behavior metrics computed from a trace.

Everything here is derivable from the persisted records alone, so a
report recomputed from a trace file equals the live one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from .core import Direction, GazeKitError, TargetKind, angular_distance
from .simulator import FRAME_MS, TraceRecord

METRICS_SCHEMA_VERSION = 1
REFERENCE_SEARCH_MS = 2000  # how far before a word to look for the lead fixation


class EmptyTraceError(GazeKitError, ValueError):
    """Metrics need at least one tick."""


@dataclass
class MetricsReport:
    gaze_shift_count: int
    total_head_rotation_deg: float
    fixations_by_kind: Dict[str, Dict[str, float]]
    time_share: Dict[str, float]
    aversion_episode_count: int
    aversion_mean_ms: Optional[float]
    referential_leads: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": METRICS_SCHEMA_VERSION,
            "gaze_shift_count": self.gaze_shift_count,
            "total_head_rotation_deg": self.total_head_rotation_deg,
            "fixations_by_kind": self.fixations_by_kind,
            "time_share": self.time_share,
            "aversion_episode_count": self.aversion_episode_count,
            "aversion_mean_ms": self.aversion_mean_ms,
            "referential_leads": self.referential_leads,
        }


def _segments(records: Sequence[TraceRecord]) -> List[Dict[str, Any]]:
    """Run-length encode the current target over the trace."""
    segs: List[Dict[str, Any]] = []
    for r in records:
        if segs and segs[-1]["target"] == r.current_target:
            segs[-1]["ticks"] += 1
        else:
            segs.append({"target": r.current_target, "kind": r.current_kind, "ticks": 1})
    return segs


def compute_metrics(records: Sequence[TraceRecord]) -> MetricsReport:
    if not records:
        raise EmptyTraceError("empty trace")

    shifts = sum(
        1 for prev, cur in zip(records, records[1:]) if prev.current_target != cur.current_target
    )

    rotation = 0.0
    for prev, cur in zip(records, records[1:]):
        rotation += angular_distance(
            Direction(*prev.head_direction), Direction(*cur.head_direction)
        )

    segs = _segments(records)
    by_kind: Dict[str, Dict[str, float]] = {}
    for seg in segs:
        stats = by_kind.setdefault(seg["kind"], {"count": 0, "mean_ms": 0.0, "max_ms": 0.0})
        dur = seg["ticks"] * FRAME_MS
        stats["count"] += 1
        stats["mean_ms"] += dur  # running sum; divided below
        stats["max_ms"] = max(stats["max_ms"], dur)
    for stats in by_kind.values():
        stats["mean_ms"] = stats["mean_ms"] / stats["count"]

    counts: Dict[str, int] = {}
    for r in records:
        counts[r.current_target] = counts.get(r.current_target, 0) + 1
    total = len(records)
    time_share = {t: c / total for t, c in sorted(counts.items())}

    # aversion episodes: environment runs with gaze on something else on both sides
    env = TargetKind.ENVIRONMENT.value
    aversions = [
        seg for i, seg in enumerate(segs)
        if seg["kind"] == env and 0 < i < len(segs) - 1
    ]
    aversion_mean = (
        sum(s["ticks"] for s in aversions) * FRAME_MS / len(aversions) if aversions else None
    )

    leads: List[Dict[str, Any]] = []
    for r in records:
        for ref in r.references:
            target = ref["target"]
            start = ref["word_start_ms"]
            lead: Optional[float] = None
            for rec in records:
                if rec.t_ms < start - REFERENCE_SEARCH_MS:
                    continue
                if rec.t_ms > ref["word_end_ms"]:
                    break
                if rec.current_target == target:
                    lead = float(start - rec.t_ms)
                    break
            leads.append({"target": target, "word_start_ms": start, "lead_ms": lead})

    return MetricsReport(
        gaze_shift_count=shifts,
        total_head_rotation_deg=rotation,
        fixations_by_kind=by_kind,
        time_share=time_share,
        aversion_episode_count=len(aversions),
        aversion_mean_ms=aversion_mean,
        referential_leads=leads,
    )
