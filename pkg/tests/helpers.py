"""Shared fixture builders and independent oracles for the test suite.

Entity builders insert directly into the store (bypassing permission gates)
so tests can construct arbitrary deployments quickly; oracle functions
re-derive expected results by brute force, independent of the code paths
they check.
"""

from __future__ import annotations

import random
from datetime import date, datetime, time, timedelta, timezone
from zoneinfo import ZoneInfo

from sola.access import Membership
from sola.model import (
    Badge,
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
    new_id,
)
from sola.participation import ParticipationRecord, ParticipationState
from sola.store import CommunityStore

UTC = timezone.utc


def dt(*args) -> datetime:
    return datetime(*args, tzinfo=UTC)


def iv(start: datetime, minutes: int) -> TimeInterval:
    return TimeInterval(start, start + timedelta(minutes=minutes))


def add_member(store: CommunityStore, community_id: str, name: str, role: Role) -> Person:
    person = Person(new_id("person"), name)
    store.people[person.id] = person
    store.memberships[(community_id, person.id)] = Membership(
        person_id=person.id, community_id=community_id, role=role
    )
    return person


def put_event(store: CommunityStore, **kwargs) -> Event:
    defaults = dict(
        id=new_id("event"),
        state=EventState.published,
        revision=1,
        created_by_role_snapshot=Role.participant,
    )
    defaults.update(kwargs)
    event = Event(**defaults)
    store.events[event.id] = event
    return event


def put_record(
    store: CommunityStore,
    person_id: str,
    event_id: str,
    state: ParticipationState,
    at: datetime | None = None,
) -> ParticipationRecord:
    at = at or dt(2024, 1, 1)
    history = []
    chain = {
        ParticipationState.none: [],
        ParticipationState.starred: [ParticipationState.starred],
        ParticipationState.going: [ParticipationState.going],
        ParticipationState.checked_in: [ParticipationState.going, ParticipationState.checked_in],
    }[state]
    for i, s in enumerate(chain):
        history.append((s, at + timedelta(minutes=i)))
    record = ParticipationRecord(
        person_id=person_id,
        event_id=event_id,
        state=state,
        updated_at=history[-1][1] if history else None,
        state_history=tuple(history),
    )
    store.participation[(person_id, event_id)] = record
    return record


# --- randomized deployments -----------------------------------------------------

TZ_CHOICES = ["UTC", "Asia/Shanghai", "America/Argentina/Buenos_Aires", "Europe/Lisbon"]


def random_community(store: CommunityStore, rng: random.Random) -> Community:
    """A small but structurally rich community: venues with windows/hours,
    programs, memberships, events, RSVPs, tickets, badges, invitations."""
    creator = Person(new_id("person"), f"creator-{rng.randrange(10**6)}")
    store.people[creator.id] = creator
    community = Community(
        id=new_id("community"),
        name=f"popup-{rng.randrange(10**6)}",
        timezone=rng.choice(TZ_CHOICES),
        settings=CommunitySettings(
            default_event_visibility=rng.choice(list(Visibility)),
            max_event_duration_minutes=rng.choice([0, 0, 480]),
        ),
        created_at=dt(2024, 5, rng.randint(1, 28), rng.randrange(24)),
    )
    store.communities[community.id] = community
    store.secrets[community.id] = bytes(rng.randrange(256) for _ in range(32))
    store.memberships[(community.id, creator.id)] = Membership(
        person_id=creator.id, community_id=community.id, role=Role.coordinator
    )

    people = [creator]
    for i in range(rng.randint(2, 7)):
        role = rng.choice([Role.participant, Role.member, Role.facilitator])
        people.append(add_member(store, community.id, f"p{i}-{rng.randrange(10**6)}", role))

    programs = []
    for i in range(rng.randint(0, 2)):
        program = Program(
            id=new_id("program"),
            community_id=community.id,
            title=f"program {i}",
            interval=iv(dt(2024, 6, 1), 60 * 24 * 14),
        )
        store.programs[program.id] = program
        programs.append(program)

    venues = []
    for i in range(rng.randint(1, 4)):
        hours = WeeklyHours()
        if rng.random() < 0.5:
            hours = WeeklyHours(
                spans=tuple((d, time(8, 0), time(22, 0)) for d in range(7))
            )
        venue = Venue(
            id=new_id("venue"),
            community_id=community.id,
            name=f"venue {i}",
            geo=(rng.uniform(-60, 60), rng.uniform(-120, 120)) if rng.random() < 0.7 else None,
            capacity=rng.choice([None, 2, 5]),
            amenities=frozenset(rng.sample(["wifi", "projector", "tea", "stage"], rng.randint(0, 3))),
            availability_windows=(DateRange(date(2024, 6, 1), date(2024, 6, 30)),)
            if rng.random() < 0.5
            else (),
            opening_hours=hours,
            restricted_to_programs=frozenset(
                [rng.choice(programs).id] if programs and rng.random() < 0.2 else []
            ),
            shareable=rng.random() < 0.3,
        )
        store.venues[venue.id] = venue
        venues.append(venue)

    events = []
    for i in range(rng.randint(0, 10)):
        start = dt(2024, 6, rng.randint(1, 28), rng.randrange(8, 20), rng.choice([0, 30]))
        host = rng.choice(people)
        event = put_event(
            store,
            community_id=community.id,
            title=f"event {i}",
            interval=iv(start, rng.choice([30, 60, 90])),
            venue_ref=rng.choice(venues).id if rng.random() < 0.8 else "the meadow",
            host_id=host.id,
            co_hosts=frozenset(
                p.id for p in rng.sample(people, rng.randint(0, 1)) if p.id != host.id
            ),
            tags=frozenset(rng.sample(["yoga", "talk", "dinner", "art"], rng.randint(0, 2))),
            program_id=rng.choice(programs).id if programs and rng.random() < 0.4 else None,
            rsvp_mode=rng.choice(list(RsvpMode)),
            checkin_enabled=rng.random() < 0.5,
            state=rng.choice(
                [EventState.published, EventState.published, EventState.rescheduled, EventState.cancelled]
            ),
            revision=rng.randint(1, 3),
            created_at=start - timedelta(days=1),
            created_by_role_snapshot=rng.choice(list(Role)[1:]),
        )
        events.append(event)

    for event in events:
        for person in rng.sample(people, rng.randint(0, len(people))):
            put_record(
                store,
                person.id,
                event.id,
                rng.choice(
                    [ParticipationState.starred, ParticipationState.going, ParticipationState.checked_in]
                ),
                at=event.created_at,
            )

    for event in rng.sample(events, min(len(events), rng.randint(0, 2))):
        badge = None
        if rng.random() < 0.5:
            badge = Badge(
                id=new_id("badge"),
                community_id=community.id,
                name="resident",
                issued_to=rng.choice(people).id,
                issued_at=dt(2024, 5, 30),
            )
            store.badges[badge.id] = badge
        ticket = Ticket(
            id=new_id("ticket"),
            event_id=event.id,
            quantity=rng.choice([None, 5, 20]),
            required_badge=badge.id if badge else None,
        )
        store.tickets[ticket.id] = ticket
        store.ticket_claims.setdefault(ticket.id, [])

    if rng.random() < 0.5:
        from sola.access import mint_invitation

        invitation, _token = mint_invitation(
            new_id("invitation"), community.id, creator.id, max_uses=rng.choice([None, 3])
        )
        store.invitations[invitation.id] = invitation
    return community


# --- deployment statistics fixtures -------------------------------------------------


def build_table1_fixture(
    store: CommunityStore,
    name: str,
    tz: str,
    duration_days: int,
    events_total: int,
    self_organized: int,
    hosts: int,
    participants: int,
    instances: int,
) -> tuple[Community, TimeInterval]:
    """Construct a synthetic deployment log that reproduces one statistics
    row exactly. Hosts and participants are disjoint populations."""
    assert instances <= participants * events_total
    creator = Person(new_id("person"), "organizer-zero")
    store.people[creator.id] = creator
    community = Community(id=new_id("community"), name=name, timezone=tz)
    store.communities[community.id] = community
    store.secrets[community.id] = b"\x00" * 32

    local = ZoneInfo(tz)
    window_start = datetime(2023, 7, 1, 0, 0, tzinfo=local).astimezone(UTC)
    window = TimeInterval(window_start, window_start + timedelta(days=duration_days))

    host_people = [add_member(store, community.id, f"host-{i}", Role.member) for i in range(hosts)]
    attendee_people = [
        add_member(store, community.id, f"part-{i}", Role.participant) for i in range(participants)
    ]

    events = []
    for i in range(events_total):
        start = window_start + timedelta(minutes=30 * (i % (duration_days * 40)))
        snapshot = Role.participant if i < self_organized else Role.coordinator
        events.append(
            put_event(
                store,
                community_id=community.id,
                title=f"{name} event {i}",
                interval=iv(start, 25),
                venue_ref="somewhere",
                host_id=host_people[i % hosts].id,
                created_at=start - timedelta(hours=1),
                created_by_role_snapshot=snapshot,
            )
        )

    for k in range(instances):
        person = attendee_people[k % participants]
        event = events[k // participants]
        state = ParticipationState.checked_in if k % 3 == 0 else ParticipationState.going
        put_record(store, person.id, event.id, state, at=event.created_at)
    return community, window


# --- brute-force oracles ---------------------------------------------------------------


def minutes_of(interval: TimeInterval) -> set[int]:
    """Minute indices covered by a half-open, minute-aligned interval."""
    start = int(interval.start.timestamp()) // 60
    end = int(interval.end.timestamp()) // 60
    return set(range(start, end))


def conflict_oracle(draft: Event, events: list[Event], venues: dict[str, Venue], tz: ZoneInfo):
    """O(n^2) per-minute conflict reference: returns sorted (kind, event id)
    pairs for comparison with check_event_conflicts output."""
    venue = venues.get(draft.venue_ref)
    if venue is None:
        return []
    found: list[tuple[str, str]] = []
    draft_minutes = minutes_of(draft.interval)
    live = [
        e
        for e in events
        if e.id != draft.id
        and e.state in (EventState.published, EventState.rescheduled)
        and e.venue_ref == draft.venue_ref
    ]
    overlapping = [e for e in live if minutes_of(e.interval) & draft_minutes]
    if overlapping:
        if not venue.shareable:
            found.extend(("venue_overlap", e.id) for e in overlapping)
        elif venue.capacity is not None:
            peak = 0
            for minute in draft_minutes:
                active = 1 + sum(1 for e in overlapping if minute in minutes_of(e.interval))
                peak = max(peak, active)
            if peak > venue.capacity:
                found.append(("capacity_exceeded", ""))
    hours_ok = True
    avail_ok = True
    t = draft.interval.start
    while t < draft.interval.end:
        local = t.astimezone(tz)
        if venue.availability_windows and not any(
            w.covers(local.date()) for w in venue.availability_windows
        ):
            avail_ok = False
        if not venue.opening_hours.always_open:
            lt = local.time()
            if lt == time(23, 59):
                hours_ok = False
            else:
                minute_end = time(lt.hour + (lt.minute + 1) // 60, (lt.minute + 1) % 60)
                if not any(
                    s <= lt and minute_end <= e
                    for d, s, e in venue.opening_hours.spans
                    if d == local.weekday()
                ):
                    hours_ok = False
        t += timedelta(minutes=1)
    if not hours_ok:
        found.append(("outside_opening_hours", ""))
    if not avail_ok:
        found.append(("outside_availability", ""))
    if venue.restricted_to_programs and draft.program_id not in venue.restricted_to_programs:
        found.append(("program_restriction", ""))
    order = [
        "venue_overlap",
        "outside_opening_hours",
        "outside_availability",
        "program_restriction",
        "capacity_exceeded",
    ]
    return sorted(found, key=lambda pair: (order.index(pair[0]), pair[1]))


def open_minutes_oracle(venue: Venue, interval: TimeInterval, tz: ZoneInfo) -> bool:
    """Per-minute openness check in local time (independent of the sweep in
    scheduling.venue_open_during)."""
    t = interval.start
    while t < interval.end:
        local = t.astimezone(tz)
        if venue.availability_windows and not any(
            w.covers(local.date()) for w in venue.availability_windows
        ):
            return False
        if not venue.opening_hours.always_open:
            lt = local.time()
            if lt == time(23, 59):
                return False  # fixture spans never reach midnight
            minute_end = time(lt.hour + (lt.minute + 1) // 60, (lt.minute + 1) % 60)
            ok = any(
                s <= lt and minute_end <= e
                for d, s, e in venue.opening_hours.spans
                if d == local.weekday()
            )
            if not ok:
                return False
        t += timedelta(minutes=1)
    return True
