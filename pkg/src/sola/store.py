"""In-process transactional store: the sole mutation path.

All writes serialize through one lock, which makes every committed
transaction trivially serializable; the venue conflict check and the write
it guards always happen inside the same critical section, so no two
committed events can double-book a non-shareable venue.

Domain objects are immutable snapshots; reads return them directly.
Optional persistence snapshots the full state to a JSON file after each
commit (atomic rename), so a restart loses no committed data.
"""

from __future__ import annotations

import json
import os
import secrets as _secrets
import tempfile
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from enum import Enum
from typing import Iterable, Optional

from . import serialize
from .access import (
    Action,
    Invitation,
    JoinedVia,
    Membership,
    VerifierRegistry,
    can,
    mint_invitation,
)
from .canonical import format_instant, parse_instant, to_plain
from .model import (
    Badge,
    BoundaryMode,
    Community,
    CommunitySettings,
    BoundaryPolicy,
    Event,
    EventState,
    Person,
    Program,
    Role,
    RsvpMode,
    Ticket,
    TimeInterval,
    Venue,
    ValidationReport,
    new_id,
    utc_now,
    validate_event_draft,
)
from .participation import (
    CHECKIN_GRACE_DEFAULT,
    ParticipationRecord,
    ParticipationState,
    PresenceSummary,
    apply_transition,
    generate_checkin_token,
    revoke_checkin,
    summarize_presence,
    token_valid_at,
    verify_checkin_token,
    TokenError,
)
from .scheduling import (
    BLOCKING_KINDS_DEFAULT,
    Conflict,
    ConflictKind,
    check_event_conflicts,
)


class StoreError(Exception):
    pass


class NotFound(StoreError):
    pass


class PermissionDenied(StoreError):
    pass


class ValidationFailed(StoreError):
    def __init__(self, report: ValidationReport):
        super().__init__("; ".join(report.violations))
        self.report = report


class SchedulingConflict(StoreError):
    def __init__(self, conflicts: list[Conflict]):
        super().__init__(f"{len(conflicts)} blocking conflict(s)")
        self.conflicts = conflicts


class StaleRevision(StoreError):
    pass


class JoinError(StoreError):
    pass


class TicketError(StoreError):
    pass


class FeedKind(str, Enum):
    created = "created"
    rescheduled = "rescheduled"
    cancelled = "cancelled"
    rsvp_delta = "rsvp_delta"


@dataclass(frozen=True)
class FeedEntry:
    sequence: int
    event_id: str
    kind: FeedKind
    at: datetime


class CommunityStore:
    def __init__(self, persistence_path: Optional[str] = None):
        self._lock = threading.RLock()
        self.persistence_path = persistence_path
        self.verifiers = VerifierRegistry()
        self.communities: dict[str, Community] = {}
        self.people: dict[str, Person] = {}
        self.programs: dict[str, Program] = {}
        self.venues: dict[str, Venue] = {}
        self.events: dict[str, Event] = {}
        self.memberships: dict[tuple[str, str], Membership] = {}  # (community, person)
        self.participation: dict[tuple[str, str], ParticipationRecord] = {}  # (person, event)
        self.tickets: dict[str, Ticket] = {}
        self.ticket_claims: dict[str, list[str]] = {}
        self.badges: dict[str, Badge] = {}
        self.invitations: dict[str, Invitation] = {}
        self.pending_approvals: dict[tuple[str, str], set[str]] = {}
        self.feeds: dict[str, list[FeedEntry]] = {}
        self.secrets: dict[str, bytes] = {}
        self.event_history: dict[str, list[dict]] = {}
        self.archives: dict[str, list[dict]] = {}  # read-only fork archives

    # --- helpers -------------------------------------------------------------

    def _persist(self) -> None:
        if not self.persistence_path:
            return
        snapshot = self.to_snapshot()
        directory = os.path.dirname(os.path.abspath(self.persistence_path))
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(snapshot, f)
            os.replace(tmp, self.persistence_path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def _community(self, community_id: str) -> Community:
        if community_id not in self.communities:
            raise NotFound(f"community {community_id}")
        return self.communities[community_id]

    def _event(self, event_id: str) -> Event:
        if event_id not in self.events:
            raise NotFound(f"event {event_id}")
        return self.events[event_id]

    def membership_of(self, community_id: str, person_id: Optional[str]) -> Optional[Membership]:
        if person_id is None:
            return None
        return self.memberships.get((community_id, person_id))

    def events_of(self, community_id: str) -> list[Event]:
        return [e for e in self.events.values() if e.community_id == community_id]

    def venues_of(self, community_id: str) -> dict[str, Venue]:
        return {v.id: v for v in self.venues.values() if v.community_id == community_id}

    def programs_of(self, community_id: str) -> list[Program]:
        return [p for p in self.programs.values() if p.community_id == community_id]

    def records_of(self, community_id: str) -> list[ParticipationRecord]:
        event_ids = {e.id for e in self.events_of(community_id)}
        return [r for r in self.participation.values() if r.event_id in event_ids]

    def _append_feed(self, community_id: str, event_id: str, kind: FeedKind, at: datetime) -> None:
        feed = self.feeds.setdefault(community_id, [])
        feed.append(FeedEntry(sequence=len(feed) + 1, event_id=event_id, kind=kind, at=at))

    def feed_since(self, community_id: str, since: int) -> list[FeedEntry]:
        return [e for e in self.feeds.get(community_id, []) if e.sequence > since]

    # --- community / people ---------------------------------------------------

    def add_person(self, display_name: str, profile: str = "",
                   credential_refs: tuple[str, ...] = ()) -> Person:
        with self._lock:
            person = Person(new_id("person"), display_name, profile, credential_refs)
            self.people[person.id] = person
            self._persist()
            return person

    def create_community(
        self,
        name: str,
        timezone: str,
        creator_id: str,
        boundary_policy: Optional[BoundaryPolicy] = None,
        settings: Optional[CommunitySettings] = None,
        now: Optional[datetime] = None,
    ) -> Community:
        now = now or utc_now()
        with self._lock:
            if creator_id not in self.people:
                raise NotFound(f"person {creator_id}")
            community = Community(
                id=new_id("community"),
                name=name,
                timezone=timezone,
                boundary_policy=boundary_policy or BoundaryPolicy(),
                settings=settings or CommunitySettings(),
                created_at=now,
            )
            self.communities[community.id] = community
            self.secrets[community.id] = _secrets.token_bytes(32)
            self.memberships[(community.id, creator_id)] = Membership(
                person_id=creator_id,
                community_id=community.id,
                role=Role.coordinator,
                joined_at=now,
            )
            self._persist()
            return community

    def rotate_secret(self, actor_id: str, community_id: str) -> None:
        """Invalidates every outstanding check-in token for the community."""
        with self._lock:
            community = self._community(community_id)
            if not can(self.membership_of(community_id, actor_id), Action.edit_settings, community):
                raise PermissionDenied("edit_settings required")
            self.secrets[community_id] = _secrets.token_bytes(32)
            self._persist()

    def update_settings(self, actor_id: str, community_id: str, settings: CommunitySettings) -> Community:
        with self._lock:
            community = self._community(community_id)
            if not can(self.membership_of(community_id, actor_id), Action.edit_settings, community):
                raise PermissionDenied("edit_settings required")
            updated = replace(community, settings=settings)
            self.communities[community_id] = updated
            self._persist()
            return updated

    # --- membership boundary ---------------------------------------------------

    def issue_invitation(
        self,
        issuer_id: str,
        community_id: str,
        max_uses: Optional[int] = None,
        expires_at: Optional[datetime] = None,
    ) -> tuple[Invitation, str]:
        with self._lock:
            community = self._community(community_id)
            membership = self.membership_of(community_id, issuer_id)
            allowed = can(membership, Action.edit_settings, community) or (
                membership is not None and membership.role >= Role.facilitator
            )
            if not allowed:
                raise PermissionDenied("facilitator or above required to issue invitations")
            invitation, token = mint_invitation(
                new_id("invitation"), community_id, issuer_id, max_uses, expires_at
            )
            self.invitations[invitation.id] = invitation
            self._persist()
            return invitation, token

    def join_community(
        self,
        applicant_id: str,
        community_id: str,
        token: Optional[str] = None,
        credential_descriptor: Optional[str] = None,
        credential_scheme: str = "",
        now: Optional[datetime] = None,
    ) -> Optional[Membership]:
        """Apply the community boundary policy. Returns the new membership, or
        None when a peer-approval application is now pending."""
        now = now or utc_now()
        with self._lock:
            community = self._community(community_id)
            if applicant_id not in self.people:
                raise NotFound(f"person {applicant_id}")
            if (community_id, applicant_id) in self.memberships:
                raise JoinError("already a member")
            policy = community.boundary_policy
            if policy.mode is BoundaryMode.open_registration:
                via = JoinedVia.open
            elif policy.mode is BoundaryMode.invitation_token:
                if token is None:
                    raise JoinError("invitation token required")
                invitation = next(
                    (
                        i
                        for i in self.invitations.values()
                        if i.community_id == community_id and i.matches(token)
                    ),
                    None,
                )
                if invitation is None:
                    raise JoinError("invalid invitation token")
                if not invitation.redeemable(now):
                    raise JoinError("invitation expired or exhausted")
                invitation.uses += 1
                via = JoinedVia.invitation
            elif policy.mode is BoundaryMode.peer_approval:
                approvals = self.pending_approvals.setdefault((community_id, applicant_id), set())
                if len(approvals) < policy.required_approvals:
                    self._persist()
                    return None  # pending
                del self.pending_approvals[(community_id, applicant_id)]
                via = JoinedVia.peer_approval
            else:  # credential_proof
                if credential_descriptor is None:
                    raise JoinError("credential descriptor required")
                verifier = self.verifiers.get(policy.verifier_id)
                response = verifier.verify(credential_descriptor, credential_scheme)
                if not response.accepted:
                    raise JoinError("credential rejected by verifier")
                via = JoinedVia.credential
            membership = Membership(
                person_id=applicant_id,
                community_id=community_id,
                role=policy.granted_role_on_join,
                joined_at=now,
                joined_via=via,
            )
            self.memberships[(community_id, applicant_id)] = membership
            self._persist()
            return membership

    def approve_join(
        self, approver_id: str, applicant_id: str, community_id: str, now: Optional[datetime] = None
    ) -> Optional[Membership]:
        """Record one peer approval; creates the membership once distinct
        approvals from members reach the policy threshold."""
        now = now or utc_now()
        with self._lock:
            community = self._community(community_id)
            if community.boundary_policy.mode is not BoundaryMode.peer_approval:
                raise JoinError("community does not use peer approval")
            approver = self.membership_of(community_id, approver_id)
            if approver is None or approver.role < Role.member:
                raise PermissionDenied("approvals require standing members")
            if (community_id, applicant_id) in self.memberships:
                raise JoinError("already a member")
            approvals = self.pending_approvals.setdefault((community_id, applicant_id), set())
            approvals.add(approver_id)
            if len(approvals) >= community.boundary_policy.required_approvals:
                return self.join_community(applicant_id, community_id, now=now)
            self._persist()
            return None

    def set_member_role(self, actor_id: str, community_id: str, person_id: str, role: Role,
                        program_overrides: Optional[dict[str, Role]] = None) -> Membership:
        with self._lock:
            community = self._community(community_id)
            if not can(self.membership_of(community_id, actor_id), Action.edit_settings, community):
                raise PermissionDenied("edit_settings required")
            current = self.membership_of(community_id, person_id)
            if current is None:
                raise NotFound(f"membership of {person_id}")
            overrides = program_overrides if program_overrides is not None else current.program_overrides
            updated = replace(current, role=role, program_overrides=overrides)
            self.memberships[(community_id, person_id)] = updated
            self._persist()
            return updated

    # --- venues / programs -----------------------------------------------------

    def create_venue(self, actor_id: str, venue: Venue) -> Venue:
        with self._lock:
            community = self._community(venue.community_id)
            if not can(self.membership_of(venue.community_id, actor_id), Action.create_venue, community):
                raise PermissionDenied("create_venue denied")
            self.venues[venue.id] = venue
            self._persist()
            return venue

    def create_program(self, actor_id: str, program: Program) -> Program:
        with self._lock:
            community = self._community(program.community_id)
            if not can(self.membership_of(program.community_id, actor_id), Action.create_venue, community):
                raise PermissionDenied("create_venue denied")
            self.programs[program.id] = program
            self._persist()
            return program

    # --- events ------------------------------------------------------------------

    def create_event(
        self,
        actor_id: str,
        community_id: str,
        title: str,
        interval: Optional[TimeInterval],
        venue_ref: str,
        blocking: frozenset[ConflictKind] = BLOCKING_KINDS_DEFAULT,
        now: Optional[datetime] = None,
        **fields,
    ) -> tuple[Event, list[Conflict]]:
        """Validate, conflict-check, persist, and feed — atomically.

        Raises SchedulingConflict without persisting anything when a blocking
        conflict exists; advisory conflicts come back alongside the event.
        """
        now = now or utc_now()
        with self._lock:
            community = self._community(community_id)
            membership = self.membership_of(community_id, actor_id)
            if not can(membership, Action.create_event, community,
                       program_id=fields.get("program_id")):
                raise PermissionDenied("create_event denied")
            role_snapshot = membership.effective_role(fields.get("program_id")) if membership else Role.guest
            draft = Event(
                id=new_id("event"),
                community_id=community_id,
                title=title,
                interval=interval,
                venue_ref=venue_ref,
                host_id=actor_id,
                state=EventState.published,
                revision=1,
                created_at=now,
                created_by_role_snapshot=role_snapshot,
                visibility=fields.pop("visibility", community.settings.default_event_visibility),
                **fields,
            )
            report = validate_event_draft(draft, community)
            if not report.ok:
                raise ValidationFailed(report)
            conflicts = check_event_conflicts(
                draft, self.events_of(community_id), self.venues_of(community_id), community.timezone
            )
            blocking_hits = [c for c in conflicts if c.kind in blocking]
            if blocking_hits:
                raise SchedulingConflict(blocking_hits)
            self.events[draft.id] = draft
            self.event_history[draft.id] = [
                {"kind": "created", "at": format_instant(now), "revision": 1, "detail": ""}
            ]
            self._append_feed(community_id, draft.id, FeedKind.created, now)
            self._persist()
            return draft, conflicts

    def reschedule_event(
        self,
        actor_id: str,
        event_id: str,
        new_interval: Optional[TimeInterval] = None,
        new_venue_ref: Optional[str] = None,
        expected_revision: Optional[int] = None,
        blocking: frozenset[ConflictKind] = BLOCKING_KINDS_DEFAULT,
        now: Optional[datetime] = None,
    ) -> tuple[Event, list[Conflict]]:
        """Serializable check-and-write: either the event moves and no blocking
        conflict exists at commit time, or nothing mutates and the conflicts
        are returned on the unchanged event."""
        now = now or utc_now()
        with self._lock:
            event = self._event(event_id)
            if event.state is EventState.cancelled:
                raise StoreError("cannot reschedule a cancelled event")
            community = self._community(event.community_id)
            if not can(self.membership_of(event.community_id, actor_id), Action.edit_event,
                       community, event=event):
                raise PermissionDenied("edit_event denied")
            if expected_revision is not None and expected_revision != event.revision:
                raise StaleRevision(f"expected revision {expected_revision}, at {event.revision}")
            candidate = replace(
                event,
                interval=new_interval if new_interval is not None else event.interval,
                venue_ref=new_venue_ref if new_venue_ref is not None else event.venue_ref,
            )
            report = validate_event_draft(candidate, community)
            if not report.ok:
                raise ValidationFailed(report)
            conflicts = check_event_conflicts(
                candidate,
                self.events_of(event.community_id),
                self.venues_of(event.community_id),
                community.timezone,
            )
            blocking_hits = [c for c in conflicts if c.kind in blocking]
            if blocking_hits:
                return event, blocking_hits
            updated = replace(candidate, state=EventState.rescheduled, revision=event.revision + 1)
            self.events[event_id] = updated
            self.event_history.setdefault(event_id, []).append(
                {
                    "kind": "rescheduled",
                    "at": format_instant(now),
                    "revision": updated.revision,
                    "detail": f"venue={updated.venue_ref}",
                }
            )
            self._append_feed(event.community_id, event_id, FeedKind.rescheduled, now)
            self._persist()
            return updated, conflicts

    def cancel_event(self, actor_id: str, event_id: str, now: Optional[datetime] = None) -> Event:
        """Soft delete: history retention requires cancelled events to persist."""
        now = now or utc_now()
        with self._lock:
            event = self._event(event_id)
            community = self._community(event.community_id)
            if not can(self.membership_of(event.community_id, actor_id), Action.cancel_event,
                       community, event=event):
                raise PermissionDenied("cancel_event denied")
            if event.state is EventState.cancelled:
                return event
            updated = replace(event, state=EventState.cancelled, revision=event.revision + 1)
            self.events[event_id] = updated
            self.event_history.setdefault(event_id, []).append(
                {"kind": "cancelled", "at": format_instant(now), "revision": updated.revision, "detail": ""}
            )
            self._append_feed(event.community_id, event_id, FeedKind.cancelled, now)
            self._persist()
            return updated

    # --- participation -----------------------------------------------------------

    def _viewer_can_see(self, event: Event, person_id: Optional[str]) -> bool:
        community = self._community(event.community_id)
        return can(self.membership_of(event.community_id, person_id), Action.view_event,
                   community, event=event)

    def set_rsvp(
        self,
        person_id: str,
        event_id: str,
        target: ParticipationState,
        now: Optional[datetime] = None,
    ) -> ParticipationRecord:
        now = now or utc_now()
        with self._lock:
            event = self._event(event_id)
            if not self._viewer_can_see(event, person_id):
                raise PermissionDenied("event not visible")
            record = self.participation.get(
                (person_id, event_id), ParticipationRecord(person_id, event_id)
            )
            if (
                target is ParticipationState.going
                and event.rsvp_mode is RsvpMode.ticketed
                and record.ticket_id is None
            ):
                raise TicketError("ticketed event: claim a ticket before going")
            updated = apply_transition(record, target, now)
            self.participation[(person_id, event_id)] = updated
            if updated is not record:
                self._append_feed(event.community_id, event_id, FeedKind.rsvp_delta, now)
            self._persist()
            return updated

    def make_checkin_token(
        self, event_id: str, person_id: str, now: Optional[datetime] = None
    ) -> str:
        now = now or utc_now()
        with self._lock:
            event = self._event(event_id)
            if not event.checkin_enabled:
                raise StoreError("check-in is not enabled for this event")
            record = self.participation.get((person_id, event_id))
            state = record.state if record else ParticipationState.none
            if state is ParticipationState.none and event.rsvp_mode is not RsvpMode.open_drop_in:
                raise StoreError("RSVP required before check-in token issuance")
            return generate_checkin_token(event_id, person_id, self.secrets[event.community_id], now)

    def check_in(
        self,
        scanner_id: str,
        encoded_token: str,
        now: Optional[datetime] = None,
        grace: timedelta = CHECKIN_GRACE_DEFAULT,
    ) -> tuple[ParticipationRecord, bool]:
        """Returns (record, duplicate). Re-scans are idempotent."""
        now = now or utc_now()
        with self._lock:
            # Try every community secret: the token itself names no community.
            token = None
            for community_id, secret in self.secrets.items():
                try:
                    candidate = verify_checkin_token(encoded_token, secret)
                except TokenError:
                    continue
                if candidate.event_id in self.events and \
                        self.events[candidate.event_id].community_id == community_id:
                    token = candidate
                    break
            if token is None:
                raise TokenError("bad signature")
            event = self._event(token.event_id)
            community = self._community(event.community_id)
            if not can(self.membership_of(event.community_id, scanner_id), Action.checkin_others,
                       community, event=event):
                raise PermissionDenied("checkin_others denied")
            if not token_valid_at(event, now, grace):
                raise TokenError("expired")
            key = (token.person_id, token.event_id)
            record = self.participation.get(key, ParticipationRecord(token.person_id, token.event_id))
            if record.state is ParticipationState.checked_in:
                return record, True
            if record.state is ParticipationState.none:
                if event.rsvp_mode is not RsvpMode.open_drop_in:
                    raise StoreError("no RSVP on record for a tracked event")
                record = apply_transition(record, ParticipationState.going, now)
            if record.state is ParticipationState.starred:
                record = apply_transition(record, ParticipationState.going, now)
            record = apply_transition(record, ParticipationState.checked_in, now)
            self.participation[key] = record
            self._append_feed(event.community_id, event.id, FeedKind.rsvp_delta, now)
            self._persist()
            return record, False

    def revoke_checkin(self, actor_id: str, person_id: str, event_id: str,
                       now: Optional[datetime] = None) -> ParticipationRecord:
        now = now or utc_now()
        with self._lock:
            event = self._event(event_id)
            membership = self.membership_of(event.community_id, actor_id)
            if membership is None or membership.role < Role.coordinator:
                raise PermissionDenied("revocation is coordinator-only")
            record = self.participation[(person_id, event_id)]
            updated = revoke_checkin(record, now)
            self.participation[(person_id, event_id)] = updated
            self._persist()
            return updated

    def presence_summary(self, event_id: str, viewer_id: Optional[str]) -> PresenceSummary:
        event = self._event(event_id)
        if not self._viewer_can_see(event, viewer_id):
            raise PermissionDenied("event not visible")
        membership = self.membership_of(event.community_id, viewer_id)
        viewer_is_member = membership is not None and membership.role >= Role.member
        records = [r for r in self.participation.values() if r.event_id == event_id]
        names = {p.id: p.display_name for p in self.people.values()}
        return summarize_presence(records, names, viewer_is_member)

    # --- tickets / badges ----------------------------------------------------------

    def create_ticket(self, actor_id: str, ticket: Ticket) -> Ticket:
        with self._lock:
            event = self._event(ticket.event_id)
            community = self._community(event.community_id)
            if not can(self.membership_of(event.community_id, actor_id), Action.edit_event,
                       community, event=event):
                raise PermissionDenied("only event editors may configure tickets")
            self.tickets[ticket.id] = ticket
            self.ticket_claims.setdefault(ticket.id, [])
            self._persist()
            return ticket

    def claim_ticket(self, person_id: str, ticket_id: str, now: Optional[datetime] = None) -> ParticipationRecord:
        """Atomic claim: decrements remaining quantity and links the claim to
        the person's participation record."""
        now = now or utc_now()
        with self._lock:
            if ticket_id not in self.tickets:
                raise NotFound(f"ticket {ticket_id}")
            ticket = self.tickets[ticket_id]
            claims = self.ticket_claims.setdefault(ticket_id, [])
            if person_id in claims:
                raise TicketError("already claimed")
            if ticket.quantity is not None and len(claims) >= ticket.quantity:
                raise TicketError("sold out")
            if ticket.required_badge is not None:
                held = any(
                    b.issued_to == person_id and b.name == ticket.required_badge
                    for b in self.badges.values()
                )
                if not held:
                    raise TicketError(f"qualification badge {ticket.required_badge} missing")
            claims.append(person_id)
            key = (person_id, ticket.event_id)
            record = self.participation.get(key, ParticipationRecord(person_id, ticket.event_id))
            record = replace(record, ticket_id=ticket_id, updated_at=now)
            self.participation[key] = record
            self._persist()
            return record

    def grant_badge(
        self,
        granter_id: str,
        community_id: str,
        name: str,
        issued_to: str,
        issued_for: Optional[str] = None,
        now: Optional[datetime] = None,
    ) -> Badge:
        now = now or utc_now()
        with self._lock:
            self._community(community_id)
            granter = self.membership_of(community_id, granter_id)
            if granter is None or granter.role < Role.facilitator:
                raise PermissionDenied("badge grants require facilitator or above")
            badge = Badge(new_id("badge"), community_id, name, issued_to, issued_for, now)
            self.badges[badge.id] = badge
            self._persist()
            return badge

    # --- persistence snapshot -------------------------------------------------------

    def to_snapshot(self) -> dict:
        return {
            "communities": [to_plain(c) for c in self.communities.values()],
            "people": [to_plain(p) for p in self.people.values()],
            "programs": [to_plain(p) for p in self.programs.values()],
            "venues": [to_plain(v) for v in self.venues.values()],
            "events": [to_plain(e) for e in self.events.values()],
            "memberships": [to_plain(m) for m in self.memberships.values()],
            "participation": [to_plain(r) for r in self.participation.values()],
            "tickets": [to_plain(t) for t in self.tickets.values()],
            "ticket_claims": self.ticket_claims,
            "badges": [to_plain(b) for b in self.badges.values()],
            "invitations": [to_plain(i) for i in self.invitations.values()],
            "pending_approvals": {
                f"{cid}|{pid}": sorted(approvers)
                for (cid, pid), approvers in self.pending_approvals.items()
            },
            "feeds": {
                cid: [to_plain(entry) for entry in entries] for cid, entries in self.feeds.items()
            },
            "secrets": {cid: secret.hex() for cid, secret in self.secrets.items()},
            "event_history": self.event_history,
            "archives": self.archives,
        }

    @classmethod
    def from_snapshot(cls, snapshot: dict, persistence_path: Optional[str] = None) -> "CommunityStore":
        store = cls(persistence_path=None)
        for obj in snapshot["communities"]:
            c = serialize.community_from(obj)
            store.communities[c.id] = c
        for obj in snapshot["people"]:
            p = serialize.person_from(obj)
            store.people[p.id] = p
        for obj in snapshot["programs"]:
            p = serialize.program_from(obj)
            store.programs[p.id] = p
        for obj in snapshot["venues"]:
            v = serialize.venue_from(obj)
            store.venues[v.id] = v
        for obj in snapshot["events"]:
            e = serialize.event_from(obj)
            store.events[e.id] = e
        for obj in snapshot["memberships"]:
            m = serialize.membership_from(obj)
            store.memberships[(m.community_id, m.person_id)] = m
        for obj in snapshot["participation"]:
            r = serialize.record_from(obj)
            store.participation[(r.person_id, r.event_id)] = r
        for obj in snapshot["tickets"]:
            t = serialize.ticket_from(obj)
            store.tickets[t.id] = t
        store.ticket_claims = {k: list(v) for k, v in snapshot.get("ticket_claims", {}).items()}
        for obj in snapshot["badges"]:
            b = serialize.badge_from(obj)
            store.badges[b.id] = b
        for obj in snapshot["invitations"]:
            i = serialize.invitation_from(obj)
            store.invitations[i.id] = i
        for key, approvers in snapshot.get("pending_approvals", {}).items():
            cid, pid = key.split("|", 1)
            store.pending_approvals[(cid, pid)] = set(approvers)
        for cid, entries in snapshot.get("feeds", {}).items():
            store.feeds[cid] = [
                FeedEntry(
                    sequence=e["sequence"],
                    event_id=e["event_id"],
                    kind=FeedKind(e["kind"]),
                    at=parse_instant(e["at"]),
                )
                for e in entries
            ]
        store.secrets = {cid: bytes.fromhex(s) for cid, s in snapshot.get("secrets", {}).items()}
        store.event_history = {k: list(v) for k, v in snapshot.get("event_history", {}).items()}
        store.archives = {k: list(v) for k, v in snapshot.get("archives", {}).items()}
        store.persistence_path = persistence_path
        return store

    @classmethod
    def load(cls, path: str) -> "CommunityStore":
        with open(path, encoding="utf-8") as f:
            snapshot = json.load(f)
        return cls.from_snapshot(snapshot, persistence_path=path)
