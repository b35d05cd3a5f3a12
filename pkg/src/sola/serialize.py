"""Plain-data decoders for every domain type.

Encoding is handled generically by canonical.to_plain; decoding is explicit
per type so that bundles and persisted snapshots fail loudly on unknown or
malformed fields.
"""

from __future__ import annotations

from datetime import date, time
from decimal import Decimal
from typing import Any, Optional

from .access import Invitation, JoinedVia, Membership
from .canonical import parse_instant
from .model import (
    Badge,
    BoundaryMode,
    BoundaryPolicy,
    Community,
    CommunitySettings,
    DateRange,
    Event,
    EventState,
    Person,
    Program,
    Role,
    RsvpMode,
    Ticket,
    TimeInterval,
    Venue,
    Visibility,
    WeeklyHours,
)
from .participation import ParticipationRecord, ParticipationState


def interval_from(obj: Optional[dict]) -> Optional[TimeInterval]:
    if obj is None:
        return None
    return TimeInterval(parse_instant(obj["start"]), parse_instant(obj["end"]))


def date_range_from(obj: dict) -> DateRange:
    return DateRange(date.fromisoformat(obj["start"]), date.fromisoformat(obj["end"]))


def weekly_hours_from(obj: dict) -> WeeklyHours:
    return WeeklyHours(
        spans=tuple(
            (day, time.fromisoformat(start), time.fromisoformat(end))
            for day, start, end in obj["spans"]
        )
    )


def settings_from(obj: dict) -> CommunitySettings:
    return CommunitySettings(
        default_event_visibility=Visibility(obj["default_event_visibility"]),
        who_can_create_events=Role[obj["who_can_create_events"]],
        who_can_create_venues=Role[obj["who_can_create_venues"]],
        rsvp_required_default=obj["rsvp_required_default"],
        max_event_duration_minutes=obj["max_event_duration_minutes"],
    )


def policy_from(obj: dict) -> BoundaryPolicy:
    return BoundaryPolicy(
        mode=BoundaryMode(obj["mode"]),
        granted_role_on_join=Role[obj["granted_role_on_join"]],
        required_approvals=obj["required_approvals"],
        verifier_id=obj.get("verifier_id"),
    )


def community_from(obj: dict) -> Community:
    forked = obj.get("forked_from")
    return Community(
        id=obj["id"],
        name=obj["name"],
        timezone=obj["timezone"],
        boundary_policy=policy_from(obj["boundary_policy"]),
        settings=settings_from(obj["settings"]),
        created_at=parse_instant(obj["created_at"]),
        forked_from=(forked[0], forked[1]) if forked else None,
    )


def program_from(obj: dict) -> Program:
    return Program(
        id=obj["id"],
        community_id=obj["community_id"],
        title=obj["title"],
        interval=interval_from(obj.get("interval")),
        description=obj.get("description", ""),
    )


def venue_from(obj: dict) -> Venue:
    geo = obj.get("geo")
    return Venue(
        id=obj["id"],
        community_id=obj["community_id"],
        name=obj["name"],
        description=obj.get("description", ""),
        geo=(geo[0], geo[1]) if geo else None,
        capacity=obj.get("capacity"),
        amenities=frozenset(obj.get("amenities", ())),
        availability_windows=tuple(date_range_from(w) for w in obj.get("availability_windows", ())),
        opening_hours=weekly_hours_from(obj["opening_hours"]),
        restricted_to_programs=frozenset(obj.get("restricted_to_programs", ())),
        shareable=obj.get("shareable", False),
    )


def event_from(obj: dict) -> Event:
    return Event(
        id=obj["id"],
        community_id=obj["community_id"],
        title=obj["title"],
        interval=interval_from(obj.get("interval")),
        venue_ref=obj["venue_ref"],
        host_id=obj["host_id"],
        co_hosts=frozenset(obj.get("co_hosts", ())),
        speakers=tuple(obj.get("speakers", ())),
        tags=frozenset(obj.get("tags", ())),
        program_id=obj.get("program_id"),
        visibility=Visibility(obj["visibility"]),
        rsvp_mode=RsvpMode(obj["rsvp_mode"]),
        checkin_enabled=obj.get("checkin_enabled", False),
        state=EventState(obj["state"]),
        revision=obj["revision"],
        created_at=parse_instant(obj["created_at"]),
        created_by_role_snapshot=Role[obj["created_by_role_snapshot"]],
    )


def person_from(obj: dict) -> Person:
    return Person(
        id=obj["id"],
        display_name=obj["display_name"],
        profile=obj.get("profile", ""),
        credential_refs=tuple(obj.get("credential_refs", ())),
    )


def ticket_from(obj: dict) -> Ticket:
    return Ticket(
        id=obj["id"],
        event_id=obj["event_id"],
        price=Decimal(obj["price"]),
        currency=obj["currency"],
        required_badge=obj.get("required_badge"),
        quantity=obj.get("quantity"),
    )


def badge_from(obj: dict) -> Badge:
    return Badge(
        id=obj["id"],
        community_id=obj["community_id"],
        name=obj["name"],
        issued_to=obj["issued_to"],
        issued_for=obj.get("issued_for"),
        issued_at=parse_instant(obj["issued_at"]),
    )


def membership_from(obj: dict) -> Membership:
    return Membership(
        person_id=obj["person_id"],
        community_id=obj["community_id"],
        role=Role[obj["role"]],
        program_overrides={k: Role[v] for k, v in obj.get("program_overrides", {}).items()},
        joined_at=parse_instant(obj["joined_at"]),
        joined_via=JoinedVia(obj["joined_via"]),
    )


def invitation_from(obj: dict) -> Invitation:
    expires = obj.get("expires_at")
    return Invitation(
        id=obj["id"],
        community_id=obj["community_id"],
        token_hash=obj["token_hash"],
        salt=obj["salt"],
        issued_by=obj["issued_by"],
        max_uses=obj.get("max_uses"),
        uses=obj.get("uses", 0),
        expires_at=parse_instant(expires) if expires else None,
        issued_at=parse_instant(obj["issued_at"]),
    )


def record_from(obj: dict) -> ParticipationRecord:
    updated = obj.get("updated_at")
    return ParticipationRecord(
        person_id=obj["person_id"],
        event_id=obj["event_id"],
        state=ParticipationState(obj["state"]),
        ticket_id=obj.get("ticket_id"),
        updated_at=parse_instant(updated) if updated else None,
        state_history=tuple(
            (ParticipationState(s), parse_instant(at)) for s, at in obj.get("state_history", ())
        ),
    )
