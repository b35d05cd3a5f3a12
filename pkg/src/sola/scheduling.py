"""Venue conflict detection, openness evaluation, and schedule/map projections.

Everything here is a pure function over snapshots; the transactional
reschedule path lives in the store and calls into these checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from enum import Enum
from typing import Iterable, Mapping, Optional
from zoneinfo import ZoneInfo

from .model import DateRange, Event, EventState, TimeInterval, Venue

VENUE_ID_PREFIX = "venue-"

LIVE_STATES = (EventState.published, EventState.rescheduled)


class ConflictKind(str, Enum):
    # Declaration order is the deterministic report order.
    venue_overlap = "venue_overlap"
    outside_opening_hours = "outside_opening_hours"
    outside_availability = "outside_availability"
    program_restriction = "program_restriction"
    capacity_exceeded = "capacity_exceeded"


_KIND_ORDER = {kind: i for i, kind in enumerate(ConflictKind)}


@dataclass(frozen=True)
class Conflict:
    kind: ConflictKind
    conflicting_event_id: Optional[str] = None
    detail: str = ""

    def __post_init__(self):
        if self.kind is ConflictKind.venue_overlap and not self.conflicting_event_id:
            raise ValueError("venue_overlap conflicts must name the conflicting event")

    @property
    def sort_key(self):
        return (_KIND_ORDER[self.kind], self.conflicting_event_id or "")


def intervals_overlap(a: TimeInterval, b: TimeInterval) -> bool:
    """Half-open overlap: adjacent intervals do not collide."""
    return a.start < b.end and b.start < a.end


def _local_days(interval: TimeInterval, tz: ZoneInfo) -> list[date]:
    first = interval.start.astimezone(tz).date()
    last = (interval.end - timedelta(microseconds=1)).astimezone(tz).date()
    days = []
    day = first
    while day <= last:
        days.append(day)
        day += timedelta(days=1)
    return days


def _within_availability(venue: Venue, interval: TimeInterval, tz: ZoneInfo) -> bool:
    if not venue.availability_windows:
        return True  # no windows declared = unconstrained
    return all(
        any(w.covers(day) for w in venue.availability_windows)
        for day in _local_days(interval, tz)
    )


def _open_spans_utc(venue: Venue, interval: TimeInterval, tz: ZoneInfo) -> list[TimeInterval]:
    spans = []
    for day in _local_days(interval, tz):
        if venue.opening_hours.always_open:
            day_spans = [(time(0, 0), None)]  # None = end of local day
        else:
            day_spans = venue.opening_hours.spans_for(day.weekday())
        for start_t, end_t in day_spans:
            start = datetime.combine(day, start_t, tzinfo=tz)
            if end_t is None:
                end = datetime.combine(day + timedelta(days=1), time(0, 0), tzinfo=tz)
            else:
                end = datetime.combine(day, end_t, tzinfo=tz)
            spans.append(TimeInterval(start, end))
    return spans


def _covered_by(interval: TimeInterval, spans: list[TimeInterval]) -> bool:
    """True iff [start, end) is fully inside the union of the spans."""
    cursor = interval.start
    for span in sorted(spans):
        if span.end <= cursor:
            continue
        if span.start > cursor:
            return False
        cursor = span.end
        if cursor >= interval.end:
            return True
    return cursor >= interval.end


def _within_hours(venue: Venue, interval: TimeInterval, tz: ZoneInfo) -> bool:
    if venue.opening_hours.always_open:
        return True
    return _covered_by(interval, _open_spans_utc(venue, interval, tz))


def venue_open_during(venue: Venue, interval: TimeInterval, community_tz: str | ZoneInfo) -> bool:
    """True iff every community-local minute of the interval is inside an
    availability window and inside the weekly opening hours."""
    tz = ZoneInfo(community_tz) if isinstance(community_tz, str) else community_tz
    return _within_availability(venue, interval, tz) and _within_hours(venue, interval, tz)


def check_event_conflicts(
    draft: Event,
    existing: Iterable[Event],
    venues: Mapping[str, Venue],
    community_tz: str | ZoneInfo,
) -> list[Conflict]:
    """All conflicts the draft would create, in deterministic order.

    Free-text locations never conflict; a venue_ref that looks like a venue
    id but is not registered is a caller error.
    """
    venue = venues.get(draft.venue_ref)
    if venue is None:
        if draft.venue_ref.startswith(VENUE_ID_PREFIX):
            raise KeyError(f"unknown venue id: {draft.venue_ref}")
        return []
    assert draft.interval is not None and draft.interval.valid
    tz = ZoneInfo(community_tz) if isinstance(community_tz, str) else community_tz

    conflicts: list[Conflict] = []
    overlapping = [
        e
        for e in existing
        if e.id != draft.id
        and e.state in LIVE_STATES
        and e.venue_ref == draft.venue_ref
        and e.interval is not None
        and intervals_overlap(e.interval, draft.interval)
    ]
    if overlapping:
        if not venue.shareable:
            conflicts.extend(
                Conflict(ConflictKind.venue_overlap, e.id, f"overlaps {e.title!r}")
                for e in overlapping
            )
        elif venue.capacity is not None:
            peak = _peak_concurrency(draft, overlapping)
            if peak > venue.capacity:
                conflicts.append(
                    Conflict(
                        ConflictKind.capacity_exceeded,
                        detail=f"{peak} concurrent events exceed capacity {venue.capacity}",
                    )
                )

    if not _within_hours(venue, draft.interval, tz):
        conflicts.append(
            Conflict(ConflictKind.outside_opening_hours, detail="interval spills outside opening hours")
        )
    if not _within_availability(venue, draft.interval, tz):
        conflicts.append(
            Conflict(ConflictKind.outside_availability, detail="interval outside availability windows")
        )
    if venue.restricted_to_programs and draft.program_id not in venue.restricted_to_programs:
        conflicts.append(
            Conflict(ConflictKind.program_restriction, detail="venue restricted to other programs")
        )
    return sorted(conflicts, key=lambda c: c.sort_key)


def _peak_concurrency(draft: Event, overlapping: list[Event]) -> int:
    """Max number of simultaneously running events (draft included) at any
    instant inside the draft interval."""
    assert draft.interval is not None
    boundaries = {draft.interval.start}
    for e in overlapping:
        assert e.interval is not None
        if draft.interval.contains(e.interval.start):
            boundaries.add(e.interval.start)
    peak = 0
    for t in boundaries:
        active = 1 + sum(1 for e in overlapping if e.interval.contains(t))
        peak = max(peak, active)
    return peak


BLOCKING_KINDS_DEFAULT = frozenset({ConflictKind.venue_overlap})


class ScheduleMode(str, Enum):
    compact = "compact"
    list = "list"
    venue = "venue"
    weekly = "weekly"


@dataclass(frozen=True)
class ScheduleFilters:
    tags: frozenset[str] = frozenset()
    venue_ids: frozenset[str] = frozenset()
    program_ids: frozenset[str] = frozenset()
    date_range: Optional[DateRange] = None  # community-local dates


@dataclass(frozen=True)
class EventSummary:
    id: str
    title: str
    start: datetime
    end: datetime
    venue_ref: str
    host_id: str
    tags: frozenset[str] = frozenset()
    program_id: Optional[str] = None
    state: EventState = EventState.published

    @classmethod
    def of(cls, event: Event) -> "EventSummary":
        assert event.interval is not None
        return cls(
            id=event.id,
            title=event.title,
            start=event.interval.start,
            end=event.interval.end,
            venue_ref=event.venue_ref,
            host_id=event.host_id,
            tags=event.tags,
            program_id=event.program_id,
            state=event.state,
        )


@dataclass(frozen=True)
class ScheduleView:
    mode: ScheduleMode
    buckets: tuple[tuple[str, tuple[EventSummary, ...]], ...]
    generated_for: ScheduleFilters = field(default_factory=ScheduleFilters)


def _matches(event: Event, filters: ScheduleFilters, tz: ZoneInfo) -> bool:
    if event.state not in LIVE_STATES or event.interval is None:
        return False
    if filters.tags and not (filters.tags & event.tags):
        return False
    if filters.venue_ids and event.venue_ref not in filters.venue_ids:
        return False
    if filters.program_ids and event.program_id not in filters.program_ids:
        return False
    if filters.date_range is not None:
        if not filters.date_range.covers(event.interval.start.astimezone(tz).date()):
            return False
    return True


def project_schedule(
    events: Iterable[Event],
    filters: ScheduleFilters,
    mode: ScheduleMode,
    community_tz: str | ZoneInfo,
) -> ScheduleView:
    """Deterministic bucketed schedule; every matching event lands in exactly
    one bucket. Multi-day events bucket by their start day in weekly mode."""
    tz = ZoneInfo(community_tz) if isinstance(community_tz, str) else community_tz
    matching = sorted(
        (e for e in events if _matches(e, filters, tz)),
        key=lambda e: (e.interval.start, e.id),
    )
    if mode in (ScheduleMode.compact, ScheduleMode.list):
        buckets = [("all", tuple(EventSummary.of(e) for e in matching))]
    elif mode is ScheduleMode.venue:
        by_venue: dict[str, list[EventSummary]] = {}
        for e in matching:
            by_venue.setdefault(e.venue_ref, []).append(EventSummary.of(e))
        buckets = [(key, tuple(by_venue[key])) for key in sorted(by_venue)]
    else:  # weekly: one bucket per community-local day
        by_day: dict[date, list[EventSummary]] = {}
        for e in matching:
            day = e.interval.start.astimezone(tz).date()
            by_day.setdefault(day, []).append(EventSummary.of(e))
        days = sorted(by_day)
        if filters.date_range is not None:
            days = []
            day = filters.date_range.start
            while day <= filters.date_range.end:
                days.append(day)
                day += timedelta(days=1)
        buckets = [(day.isoformat(), tuple(by_day.get(day, []))) for day in days]
    return ScheduleView(mode=mode, buckets=tuple(buckets), generated_for=filters)


class TemporalStatus(str, Enum):
    # Declaration order is the map sort order.
    ongoing = "ongoing"
    upcoming = "upcoming"
    past = "past"


_STATUS_ORDER = {s: i for i, s in enumerate(TemporalStatus)}


@dataclass(frozen=True)
class MapPin:
    event: EventSummary
    latitude: float
    longitude: float
    status: TemporalStatus


def project_map(
    events: Iterable[Event],
    venues: Mapping[str, Venue],
    now: datetime,
    filters: ScheduleFilters = ScheduleFilters(),
    community_tz: str | ZoneInfo = "UTC",
) -> list[MapPin]:
    """Geolocated events with temporal status; venues without coordinates are
    excluded."""
    tz = ZoneInfo(community_tz) if isinstance(community_tz, str) else community_tz
    pins = []
    for e in events:
        if not _matches(e, filters, tz):
            continue
        venue = venues.get(e.venue_ref)
        if venue is None or venue.geo is None:
            continue
        assert e.interval is not None
        if e.interval.contains(now):
            status = TemporalStatus.ongoing
        elif now < e.interval.start:
            status = TemporalStatus.upcoming
        else:
            status = TemporalStatus.past
        pins.append(MapPin(EventSummary.of(e), venue.geo[0], venue.geo[1], status))
    pins.sort(key=lambda p: (_STATUS_ORDER[p.status], p.event.start, p.event.id))
    return pins
