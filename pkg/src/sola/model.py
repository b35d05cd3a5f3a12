"""Domain types shared by every module, plus their validation rules.

All instants are stored as UTC; the community timezone is applied only at
projection/display time. Time intervals are half-open [start, end) everywhere,
so back-to-back bookings at the same venue never conflict.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from decimal import Decimal
from enum import Enum, IntEnum
from typing import Optional
from zoneinfo import ZoneInfo


def new_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex}"


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


class Role(IntEnum):
    """Ordered community roles; the order backs every "minimum role" setting."""

    guest = 0
    participant = 1
    member = 2
    facilitator = 3
    coordinator = 4


class Visibility(str, Enum):
    public = "public"
    members_only = "members_only"
    unlisted = "unlisted"


class RsvpMode(str, Enum):
    open_drop_in = "open_drop_in"
    rsvp_tracked = "rsvp_tracked"
    ticketed = "ticketed"


class EventState(str, Enum):
    draft = "draft"
    published = "published"
    rescheduled = "rescheduled"
    cancelled = "cancelled"


@dataclass(frozen=True, order=True)
class TimeInterval:
    """Half-open [start, end) interval of UTC instants.

    Construction is lenient (start >= end is representable) so that invalid
    drafts can be reported as violations instead of exceptions; persistence
    only ever admits valid intervals via validate_event_draft.
    """

    start: datetime
    end: datetime

    def __post_init__(self):
        if self.start.tzinfo is None or self.end.tzinfo is None:
            raise ValueError("interval instants must be timezone-aware")
        object.__setattr__(self, "start", self.start.astimezone(timezone.utc))
        object.__setattr__(self, "end", self.end.astimezone(timezone.utc))

    @property
    def valid(self) -> bool:
        return self.start < self.end

    @property
    def duration(self) -> timedelta:
        return self.end - self.start

    def contains(self, instant: datetime) -> bool:
        return self.start <= instant < self.end


@dataclass(frozen=True, order=True)
class DateRange:
    """Inclusive range of community-local calendar dates."""

    start: date
    end: date

    def __post_init__(self):
        if self.end < self.start:
            raise ValueError(f"date range end {self.end} before start {self.start}")

    def covers(self, day: date) -> bool:
        return self.start <= day <= self.end


@dataclass(frozen=True)
class WeeklyHours:
    """Opening spans keyed by weekday (0=Monday). Empty map = always open.

    Every span lies within a single local day with start < end; spans per day
    are sorted and non-overlapping.
    """

    spans: tuple[tuple[int, time, time], ...] = ()

    def __post_init__(self):
        by_day: dict[int, list[tuple[time, time]]] = {}
        for day, start, end in self.spans:
            if not 0 <= day <= 6:
                raise ValueError(f"weekday out of range: {day}")
            if start >= end:
                raise ValueError(f"opening span must have start < end: {start}..{end}")
            by_day.setdefault(day, []).append((start, end))
        for day, spans in by_day.items():
            ordered = sorted(spans)
            for (s1, e1), (s2, _) in zip(ordered, ordered[1:]):
                if s2 < e1:
                    raise ValueError(f"overlapping opening spans on weekday {day}")
        object.__setattr__(self, "spans", tuple(sorted(self.spans)))

    @property
    def always_open(self) -> bool:
        return not self.spans

    def spans_for(self, weekday: int) -> list[tuple[time, time]]:
        return [(s, e) for d, s, e in self.spans if d == weekday]


class BoundaryMode(str, Enum):
    open_registration = "open_registration"
    invitation_token = "invitation_token"
    peer_approval = "peer_approval"
    credential_proof = "credential_proof"


@dataclass(frozen=True)
class BoundaryPolicy:
    mode: BoundaryMode = BoundaryMode.open_registration
    granted_role_on_join: Role = Role.participant
    required_approvals: int = 1
    verifier_id: Optional[str] = None

    def __post_init__(self):
        if self.required_approvals < 1:
            raise ValueError("required_approvals must be >= 1")
        if self.mode is BoundaryMode.credential_proof and not self.verifier_id:
            raise ValueError("credential_proof policy needs a verifier_id")


@dataclass(frozen=True)
class CommunitySettings:
    default_event_visibility: Visibility = Visibility.public
    who_can_create_events: Role = Role.participant
    who_can_create_venues: Role = Role.facilitator
    rsvp_required_default: bool = False
    max_event_duration_minutes: int = 0  # 0 = unlimited

    def __post_init__(self):
        if self.max_event_duration_minutes < 0:
            raise ValueError("max_event_duration_minutes must be >= 0")


@dataclass(frozen=True)
class Community:
    id: str
    name: str
    timezone: str
    boundary_policy: BoundaryPolicy = BoundaryPolicy()
    settings: CommunitySettings = CommunitySettings()
    created_at: datetime = field(default_factory=utc_now)
    forked_from: Optional[tuple[str, str]] = None  # (community id, bundle hash)

    def __post_init__(self):
        ZoneInfo(self.timezone)  # raises on unknown identifiers

    @property
    def tzinfo(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)


@dataclass(frozen=True)
class Program:
    id: str
    community_id: str
    title: str
    interval: Optional[TimeInterval] = None  # None after a fork, pending re-dating
    description: str = ""

    def __post_init__(self):
        if self.interval is not None and not self.interval.valid:
            raise ValueError("program interval must have start < end")


@dataclass(frozen=True)
class Venue:
    id: str
    community_id: str
    name: str
    description: str = ""
    geo: Optional[tuple[float, float]] = None  # (latitude, longitude)
    capacity: Optional[int] = None  # None = unlimited
    amenities: frozenset[str] = frozenset()
    availability_windows: tuple[DateRange, ...] = ()
    opening_hours: WeeklyHours = WeeklyHours()
    restricted_to_programs: frozenset[str] = frozenset()  # empty = global
    shareable: bool = False

    def __post_init__(self):
        if self.geo is not None:
            lat, lon = self.geo
            if not (-90 <= lat <= 90 and -180 <= lon <= 180):
                raise ValueError(f"geo out of range: {self.geo}")
        if self.capacity is not None and self.capacity < 1:
            raise ValueError("capacity must be positive or unlimited (None)")
        object.__setattr__(
            self, "availability_windows", tuple(canonicalize_windows(self.availability_windows))
        )


@dataclass(frozen=True)
class Person:
    id: str
    display_name: str
    profile: str = ""
    credential_refs: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.display_name:
            raise ValueError("display_name must be non-empty")


@dataclass(frozen=True)
class Event:
    id: str
    community_id: str
    title: str  # "what"
    interval: Optional[TimeInterval]  # "when"
    venue_ref: str  # "where": registered venue id OR free-text location
    host_id: str
    co_hosts: frozenset[str] = frozenset()
    speakers: tuple[str, ...] = ()
    tags: frozenset[str] = frozenset()
    program_id: Optional[str] = None
    visibility: Visibility = Visibility.public
    rsvp_mode: RsvpMode = RsvpMode.open_drop_in
    checkin_enabled: bool = False
    state: EventState = EventState.draft
    revision: int = 1
    created_at: datetime = field(default_factory=utc_now)
    created_by_role_snapshot: Role = Role.participant


@dataclass(frozen=True)
class Ticket:
    id: str
    event_id: str
    price: Decimal = Decimal(0)
    currency: str = "USD"
    required_badge: Optional[str] = None
    quantity: Optional[int] = None  # None = unlimited

    def __post_init__(self):
        if self.price < 0:
            raise ValueError("ticket price cannot be negative")
        if self.quantity is not None and self.quantity < 1:
            raise ValueError("ticket quantity must be positive or unlimited (None)")


@dataclass(frozen=True)
class Badge:
    id: str
    community_id: str
    name: str
    issued_to: str
    issued_for: Optional[str] = None
    issued_at: datetime = field(default_factory=utc_now)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_event_draft(draft: Event, community: Community) -> ValidationReport:
    """Check the minimal event schema ("what", "where", "when") plus limits.

    Violations are data, not failures; a draft from outside the community is
    a caller bug and raises.
    """
    if draft.community_id != community.id:
        raise ValueError("draft does not belong to this community")
    violations: list[str] = []
    if not draft.title.strip():
        violations.append('missing "what": title is empty')
    if draft.interval is None:
        violations.append('missing "when": no interval')
    elif not draft.interval.valid:
        violations.append('empty "when": interval start must precede end')
    else:
        limit = community.settings.max_event_duration_minutes
        if limit and draft.interval.duration > timedelta(minutes=limit):
            violations.append(f"duration exceeds community maximum of {limit} minutes")
    if not draft.venue_ref.strip():
        violations.append('missing "where": no venue or location')
    if not isinstance(draft.visibility, Visibility):
        violations.append(f"visibility not allowed: {draft.visibility!r}")
    return ValidationReport(tuple(violations))


def canonicalize_windows(windows) -> list[DateRange]:
    """Sort date ranges and merge overlapping or adjacent ones.

    Output is pairwise disjoint and idempotent under re-canonicalization.
    """
    merged: list[DateRange] = []
    for window in sorted(windows):
        if merged and window.start <= merged[-1].end + timedelta(days=1):
            last = merged[-1]
            if window.end > last.end:
                merged[-1] = DateRange(last.start, window.end)
        else:
            merged.append(window)
    return merged
