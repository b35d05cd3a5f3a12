"""Deployment statistics, co-attendance structure, and mixed-attendance
("bridge prompt") ranking.

All functions are pure and read-only over snapshots. "Attended" means a
recorded RSVP of going or checked_in; unregistered walk-ins are invisible
here by construction.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .model import Event, EventState, Role, TimeInterval
from .participation import ParticipationRecord, ParticipationState

ATTENDING_STATES = (ParticipationState.going, ParticipationState.checked_in)
LIVE_STATES = (EventState.published, EventState.rescheduled)

STATS_CSV_HEADER = "Comm.,Dur.,Evts,Self-Org.,Hosts,Parts.,Part.-Instances"


@dataclass(frozen=True)
class DeploymentStats:
    duration_days: int
    events_total: int
    self_organized_count: int
    self_organized_ratio: float
    unique_hosts: int
    unique_participants: int
    participation_instances: int

    def csv_row(self, community_name: str) -> str:
        return ",".join(
            str(v)
            for v in (
                community_name,
                self.duration_days,
                self.events_total,
                self.self_organized_count,
                self.unique_hosts,
                self.unique_participants,
                self.participation_instances,
            )
        )


def classify_self_organized(event: Event) -> bool:
    """Member-initiated: the host held no official organizer role when the
    event was created. Uses the immutable creation-time snapshot, so later
    promotions never reclassify old events."""
    return event.created_by_role_snapshot < Role.facilitator


def compute_deployment_stats(
    events: Iterable[Event],
    records: Iterable[ParticipationRecord],
    window: TimeInterval,
    include_co_hosts: bool = False,
) -> DeploymentStats:
    """Aggregate a deployment window into the seven standard columns.

    Participation instance = one (person, event) attending pair; re-scans of
    the same person at the same event never add instances.
    """
    in_window = [
        e
        for e in events
        if e.state in LIVE_STATES
        and e.interval is not None
        and window.contains(e.interval.start)
    ]
    event_ids = {e.id for e in in_window}
    self_organized = sum(1 for e in in_window if classify_self_organized(e))
    hosts = {e.host_id for e in in_window}
    if include_co_hosts:
        for e in in_window:
            hosts |= e.co_hosts
    attending = [
        r for r in records if r.event_id in event_ids and r.state in ATTENDING_STATES
    ]
    participants = {r.person_id for r in attending}
    total = len(in_window)
    return DeploymentStats(
        duration_days=math.ceil(window.duration.total_seconds() / 86400),
        events_total=total,
        self_organized_count=self_organized,
        self_organized_ratio=self_organized / total if total else 0.0,
        unique_hosts=len(hosts),
        unique_participants=len(participants),
        participation_instances=len(attending),
    )


@dataclass(frozen=True)
class CoAttendanceGraph:
    nodes: frozenset[str]
    edges: tuple[tuple[str, str, int], ...]  # (a, b, shared events), a < b


def co_attendance_graph(records: Iterable[ParticipationRecord]) -> CoAttendanceGraph:
    """Undirected weighted graph: edge weight = number of events both people
    attended. People attending alone appear as isolated nodes."""
    by_event: dict[str, set[str]] = {}
    nodes: set[str] = set()
    for r in records:
        if r.state in ATTENDING_STATES:
            by_event.setdefault(r.event_id, set()).add(r.person_id)
            nodes.add(r.person_id)
    weights: Counter[tuple[str, str]] = Counter()
    for attendees in by_event.values():
        ordered = sorted(attendees)
        for i, a in enumerate(ordered):
            for b in ordered[i + 1 :]:
                weights[(a, b)] += 1
    edges = tuple((a, b, w) for (a, b), w in sorted(weights.items()))
    return CoAttendanceGraph(nodes=frozenset(nodes), edges=edges)


def mixed_attendance_score(
    attendees: Iterable[str],
    grouping: Mapping[str, str],
    group_count: Optional[int] = None,
) -> float:
    """Normalized Shannon entropy of the attendee group distribution.

    Normalization uses the community-wide number of distinct groups so
    scores compare across events. Exactly 1.0 for an even split over all
    groups, exactly 0.0 when only one group is represented.
    """
    labels = [grouping[p] for p in attendees if p in grouping]
    if not labels:
        raise ValueError("no labeled attendees")
    k = group_count if group_count is not None else len(set(grouping.values()))
    counts = Counter(labels)
    if k <= 1 or len(counts) == 1:
        return 0.0
    if len(counts) == k and len(set(counts.values())) == 1:
        return 1.0  # even split over every group: maximum by definition
    total = len(labels)
    entropy = -sum((c / total) * math.log(c / total) for c in counts.values())
    return entropy / math.log(k)


def default_grouping(
    records: Iterable[ParticipationRecord], events_by_id: Mapping[str, Event]
) -> dict[str, str]:
    """Cohort each person by the tag they RSVP to most often (alphabetical
    tie-break). Coordinators may supply explicit cohorts instead."""
    tag_counts: dict[str, Counter[str]] = {}
    for r in records:
        if r.state not in ATTENDING_STATES:
            continue
        event = events_by_id.get(r.event_id)
        if event is None or not event.tags:
            continue
        counter = tag_counts.setdefault(r.person_id, Counter())
        for tag in event.tags:
            counter[tag] += 1
    return {
        person: min(c for c, n in counter.items() if n == max(counter.values()))
        for person, counter in tag_counts.items()
        if counter
    }


def bridge_prompt_ranking(
    upcoming: Iterable[Event],
    records: Iterable[ParticipationRecord],
    grouping: Mapping[str, str],
    limit: Optional[int] = None,
) -> list[tuple[Event, float]]:
    """Rank upcoming events by predicted attendance diversity, descending;
    ties break on start time. Environmental nudge only: no per-person
    targeting happens here."""
    rsvps_by_event: dict[str, list[str]] = {}
    for r in records:
        if r.state in ATTENDING_STATES:
            rsvps_by_event.setdefault(r.event_id, []).append(r.person_id)
    k = len(set(grouping.values()))
    scored = []
    for event in upcoming:
        attendees = rsvps_by_event.get(event.id, [])
        labeled = [p for p in attendees if p in grouping]
        score = mixed_attendance_score(labeled, grouping, k) if labeled else 0.0
        scored.append((event, score))
    scored.sort(key=lambda pair: (-pair[1], pair[0].interval.start, pair[0].id))
    return scored[:limit] if limit is not None else scored
