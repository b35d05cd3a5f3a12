"""Export, import, and fork of deployments — the portable memory layer.

Bundle file layout (byte-exact):

    SOLA-BUNDLE\\n
    version:1\\n
    <canonical JSON body, one line>\\n
    sha256:<hex digest of the body line>\\n

The body is canonical JSON (sorted keys, RFC 3339 Z instants, no
insignificant whitespace). Exports rewrite ids to deterministic canonical
ids assigned in store insertion order, so export -> import -> export is a
byte-level fixpoint. The trailing hash covers the exact body bytes; any
single-byte corruption is rejected.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import secrets as _secrets
from dataclasses import replace
from enum import Enum
from typing import Optional

from . import serialize
from .access import Action, Membership, can
from .canonical import canonical_json, to_plain
from .model import Community, Person, Program, Role, new_id, utc_now
from .store import CommunityStore, NotFound, PermissionDenied

MAGIC = b"SOLA-BUNDLE"
FORMAT_VERSION = 1


class BundleError(Exception):
    def __init__(self, reason: str, path: str = ""):
        super().__init__(f"{reason}{f' at {path}' if path else ''}")
        self.reason = reason
        self.path = path


class ExportScope(str, Enum):
    full = "full"
    structure_only = "structure_only"
    anonymized = "anonymized"


def _body_hash(body_bytes: bytes) -> str:
    return hashlib.sha256(body_bytes).hexdigest()


def encode_bundle(body: dict) -> bytes:
    body_bytes = canonical_json(body)
    return b"".join(
        [
            MAGIC,
            b"\n",
            f"version:{body['format_version']}".encode("ascii"),
            b"\n",
            body_bytes,
            b"\n",
            f"sha256:{_body_hash(body_bytes)}".encode("ascii"),
            b"\n",
        ]
    )


def decode_bundle(data: bytes) -> dict:
    """Parse and verify a bundle file; raises BundleError on any corruption."""
    lines = data.split(b"\n")
    if len(lines) != 5 or lines[4] != b"":
        raise BundleError("malformed bundle: expected four lines")
    magic, version_line, body_bytes, hash_line = lines[:4]
    if magic != MAGIC:
        raise BundleError("bad magic header")
    if not version_line.startswith(b"version:"):
        raise BundleError("missing version line")
    try:
        version = int(version_line[len(b"version:"):])
    except ValueError:
        raise BundleError("unparsable version line")
    if version != FORMAT_VERSION:
        raise BundleError(f"unsupported format_version {version}")
    if not hash_line.startswith(b"sha256:"):
        raise BundleError("missing hash line")
    stated = hash_line[len(b"sha256:"):].decode("ascii", errors="replace")
    if stated != _body_hash(body_bytes):
        raise BundleError("content hash mismatch")
    try:
        body = json.loads(body_bytes.decode("utf-8"))
    except Exception:
        raise BundleError("body is not valid JSON")
    if not isinstance(body, dict) or body.get("format_version") != FORMAT_VERSION:
        raise BundleError("body format_version missing or unsupported")
    return body


def bundle_content_hash(data: bytes) -> str:
    lines = data.split(b"\n")
    if len(lines) != 5:
        raise BundleError("malformed bundle")
    return _body_hash(lines[2])


# --- export ------------------------------------------------------------------

class _IdMap:
    """Assigns deterministic canonical ids in first-seen order per prefix."""

    def __init__(self):
        self._maps: dict[str, dict[str, str]] = {}

    def get(self, prefix: str, original: Optional[str]) -> Optional[str]:
        if original is None:
            return None
        table = self._maps.setdefault(prefix, {})
        if original not in table:
            table[original] = f"{prefix}{len(table) + 1}"
        return table[original]


def export_bundle(
    store: CommunityStore,
    community_id: str,
    actor_id: str,
    scope: ExportScope = ExportScope.full,
) -> bytes:
    community = store.communities.get(community_id)
    if community is None:
        raise NotFound(f"community {community_id}")
    if not can(store.membership_of(community_id, actor_id), Action.export_data, community):
        raise PermissionDenied("export_data denied")

    ids = _IdMap()
    cid = ids.get("C", community_id)

    memberships = [m for m in store.memberships.values() if m.community_id == community_id]
    if scope is ExportScope.structure_only:
        memberships = [m for m in memberships if m.role >= Role.facilitator]
    events = store.events_of(community_id)
    records = store.records_of(community_id)
    tickets = [t for t in store.tickets.values() if t.event_id in {e.id for e in events}]
    badges = [b for b in store.badges.values() if b.community_id == community_id]
    invitations = [i for i in store.invitations.values() if i.community_id == community_id]
    if scope is ExportScope.structure_only:
        events, records, tickets, badges = [], [], [], []

    # People referenced anywhere in the exported sections, insertion-ordered.
    referenced: set[str] = {m.person_id for m in memberships}
    for e in events:
        referenced.add(e.host_id)
        referenced |= e.co_hosts
    referenced |= {r.person_id for r in records}
    referenced |= {b.issued_to for b in badges}
    referenced |= {i.issued_by for i in invitations}
    people = [p for p in store.people.values() if p.id in referenced]

    anon_salt = _secrets.token_bytes(16) if scope is ExportScope.anonymized else None

    def person_ref(person_id: Optional[str]) -> Optional[str]:
        if person_id is None:
            return None
        if anon_salt is not None:
            digest = hmac.new(anon_salt, person_id.encode("utf-8"), hashlib.sha256).hexdigest()
            return f"anon-{digest[:20]}"
        return ids.get("U", person_id)

    program_ids = {p.id for p in store.programs_of(community_id)}
    venue_ids = set(store.venues_of(community_id))

    def venue_ref(ref: str) -> str:
        return ids.get("V", ref) if ref in venue_ids else ref

    programs_plain = []
    for p in store.programs_of(community_id):
        programs_plain.append(
            to_plain(replace(p, id=ids.get("P", p.id), community_id=cid))
        )
    venues_plain = []
    for v in store.venues_of(community_id).values():
        venues_plain.append(
            to_plain(
                replace(
                    v,
                    id=ids.get("V", v.id),
                    community_id=cid,
                    restricted_to_programs=frozenset(
                        ids.get("P", pid) for pid in v.restricted_to_programs if pid in program_ids
                    ),
                )
            )
        )
    people_plain = []
    for p in people:
        if anon_salt is not None:
            people_plain.append(
                {"id": person_ref(p.id), "display_name": person_ref(p.id),
                 "profile": "", "credential_refs": []}
            )
        else:
            people_plain.append(to_plain(replace(p, id=person_ref(p.id))))
    if anon_salt is not None:
        people_plain.sort(key=lambda p: p["id"])  # pseudonym order: unjoinable across exports
    memberships_plain = [
        to_plain(
            replace(
                m,
                person_id=person_ref(m.person_id),
                community_id=cid,
                program_overrides={
                    ids.get("P", pid): role for pid, role in m.program_overrides.items()
                },
            )
        )
        for m in memberships
    ]
    events_plain = [
        to_plain(
            replace(
                e,
                id=ids.get("E", e.id),
                community_id=cid,
                venue_ref=venue_ref(e.venue_ref),
                host_id=person_ref(e.host_id),
                co_hosts=frozenset(person_ref(h) for h in e.co_hosts),
                program_id=ids.get("P", e.program_id),
            )
        )
        for e in events
    ]
    records_plain = [
        to_plain(
            replace(
                r,
                person_id=person_ref(r.person_id),
                event_id=ids.get("E", r.event_id),
                ticket_id=ids.get("T", r.ticket_id),
            )
        )
        for r in records
    ]
    tickets_plain = [
        to_plain(
            replace(
                t,
                id=ids.get("T", t.id),
                event_id=ids.get("E", t.event_id),
                required_badge=ids.get("B", t.required_badge),
            )
        )
        for t in tickets
    ]
    badges_plain = [
        to_plain(
            replace(
                b,
                id=ids.get("B", b.id),
                community_id=cid,
                issued_to=person_ref(b.issued_to),
                issued_for=ids.get("E", b.issued_for),
            )
        )
        for b in badges
    ]
    invitations_plain = [  # hashed form only; never any plaintext token
        to_plain(
            replace(i, id=ids.get("I", i.id), community_id=cid, issued_by=person_ref(i.issued_by))
        )
        for i in invitations
    ]
    community_plain = to_plain(replace(community, id=cid))

    body = {
        "format_version": FORMAT_VERSION,
        "scope": scope.value,
        "community": community_plain,
        "programs": programs_plain,
        "venues": venues_plain,
        "people": people_plain,
        "memberships": memberships_plain,
        "events": events_plain,
        "participation_records": records_plain,
        "tickets": tickets_plain,
        "badges": badges_plain,
        "invitations": invitations_plain,
        "archive": store.archives.get(community_id, []),
    }
    return encode_bundle(body)


# --- reference checking ---------------------------------------------------------

def _check_references(body: dict) -> None:
    cid = body["community"]["id"]
    people = {p["id"] for p in body["people"]}
    programs = {p["id"] for p in body["programs"]}
    venues = {v["id"] for v in body["venues"]}
    events = {e["id"] for e in body["events"]}
    tickets = {t["id"] for t in body["tickets"]}
    badges = {b["id"] for b in body["badges"]}

    def need(ok: bool, path: str, reason: str):
        if not ok:
            raise BundleError(f"dangling reference: {reason}", path)

    for i, p in enumerate(body["programs"]):
        need(p["community_id"] == cid, f"programs[{i}].community_id", p["community_id"])
    for i, v in enumerate(body["venues"]):
        need(v["community_id"] == cid, f"venues[{i}].community_id", v["community_id"])
        for pid in v.get("restricted_to_programs", []):
            need(pid in programs, f"venues[{i}].restricted_to_programs", pid)
    for i, m in enumerate(body["memberships"]):
        need(m["person_id"] in people, f"memberships[{i}].person_id", m["person_id"])
        for pid in m.get("program_overrides", {}):
            need(pid in programs, f"memberships[{i}].program_overrides", pid)
    for i, e in enumerate(body["events"]):
        need(e["community_id"] == cid, f"events[{i}].community_id", e["community_id"])
        need(e["host_id"] in people, f"events[{i}].host_id", e["host_id"])
        for h in e.get("co_hosts", []):
            need(h in people, f"events[{i}].co_hosts", h)
        if e["venue_ref"].startswith("V") and e["venue_ref"][1:].isdigit():
            need(e["venue_ref"] in venues, f"events[{i}].venue_ref", e["venue_ref"])
        if e.get("program_id") is not None:
            need(e["program_id"] in programs, f"events[{i}].program_id", e["program_id"])
    for i, r in enumerate(body["participation_records"]):
        need(r["person_id"] in people, f"participation_records[{i}].person_id", r["person_id"])
        need(r["event_id"] in events, f"participation_records[{i}].event_id", r["event_id"])
        if r.get("ticket_id") is not None:
            need(r["ticket_id"] in tickets, f"participation_records[{i}].ticket_id", r["ticket_id"])
    for i, t in enumerate(body["tickets"]):
        need(t["event_id"] in events, f"tickets[{i}].event_id", t["event_id"])
        if t.get("required_badge") is not None:
            need(t["required_badge"] in badges, f"tickets[{i}].required_badge", t["required_badge"])
    for i, b in enumerate(body["badges"]):
        need(b["issued_to"] in people, f"badges[{i}].issued_to", b["issued_to"])
        if b.get("issued_for") is not None:
            need(b["issued_for"] in events, f"badges[{i}].issued_for", b["issued_for"])
    for i, inv in enumerate(body["invitations"]):
        need(inv["issued_by"] in people, f"invitations[{i}].issued_by", inv["issued_by"])


# --- import / fork ---------------------------------------------------------------

def import_bundle(store: CommunityStore, data: bytes) -> tuple[Community, dict[str, str]]:
    """Reconstruct a community from a bundle under fresh ids.

    Returns (community, id map from bundle ids to fresh store ids).
    Rejects the whole bundle on hash mismatch, unknown version, or any
    dangling reference.
    """
    body = decode_bundle(data)
    _check_references(body)
    id_map: dict[str, str] = {}
    with store._lock:
        community = serialize.community_from(body["community"])
        fresh_cid = new_id("community")
        id_map[community.id] = fresh_cid
        community = replace(community, id=fresh_cid, forked_from=None)
        store.communities[fresh_cid] = community
        store.secrets[fresh_cid] = _secrets.token_bytes(32)

        for obj in body["people"]:
            person = serialize.person_from(obj)
            fresh = new_id("person")
            id_map[person.id] = fresh
            store.people[fresh] = replace(person, id=fresh)
        for obj in body["programs"]:
            program = serialize.program_from(obj)
            fresh = new_id("program")
            id_map[program.id] = fresh
            store.programs[fresh] = replace(program, id=fresh, community_id=fresh_cid)
        for obj in body["venues"]:
            venue = serialize.venue_from(obj)
            fresh = new_id("venue")
            id_map[venue.id] = fresh
            store.venues[fresh] = replace(
                venue,
                id=fresh,
                community_id=fresh_cid,
                restricted_to_programs=frozenset(
                    id_map[p] for p in venue.restricted_to_programs
                ),
            )
        for obj in body["memberships"]:
            m = serialize.membership_from(obj)
            m = replace(
                m,
                person_id=id_map[m.person_id],
                community_id=fresh_cid,
                program_overrides={id_map[p]: r for p, r in m.program_overrides.items()},
            )
            store.memberships[(fresh_cid, m.person_id)] = m
        for obj in body["events"]:
            event = serialize.event_from(obj)
            fresh = new_id("event")
            id_map[event.id] = fresh
            store.events[fresh] = replace(
                event,
                id=fresh,
                community_id=fresh_cid,
                venue_ref=id_map.get(event.venue_ref, event.venue_ref),
                host_id=id_map[event.host_id],
                co_hosts=frozenset(id_map[h] for h in event.co_hosts),
                program_id=id_map[event.program_id] if event.program_id else None,
            )
        for obj in body["badges"]:
            badge = serialize.badge_from(obj)
            fresh = new_id("badge")
            id_map[badge.id] = fresh
            store.badges[fresh] = replace(
                badge,
                id=fresh,
                community_id=fresh_cid,
                issued_to=id_map[badge.issued_to],
                issued_for=id_map[badge.issued_for] if badge.issued_for else None,
            )
        for obj in body["tickets"]:
            ticket = serialize.ticket_from(obj)
            fresh = new_id("ticket")
            id_map[ticket.id] = fresh
            store.tickets[fresh] = replace(
                ticket,
                id=fresh,
                event_id=id_map[ticket.event_id],
                required_badge=id_map[ticket.required_badge] if ticket.required_badge else None,
            )
            store.ticket_claims.setdefault(fresh, [])
        for obj in body["participation_records"]:
            record = serialize.record_from(obj)
            record = replace(
                record,
                person_id=id_map[record.person_id],
                event_id=id_map[record.event_id],
                ticket_id=id_map[record.ticket_id] if record.ticket_id else None,
            )
            store.participation[(record.person_id, record.event_id)] = record
            if record.ticket_id:
                store.ticket_claims.setdefault(record.ticket_id, []).append(record.person_id)
        for obj in body["invitations"]:
            invitation = serialize.invitation_from(obj)
            fresh = new_id("invitation")
            id_map[invitation.id] = fresh
            store.invitations[fresh] = replace(
                invitation, id=fresh, community_id=fresh_cid, issued_by=id_map[invitation.issued_by]
            )
        if body.get("archive"):
            store.archives[fresh_cid] = list(body["archive"])
        store._persist()
    return community, id_map


def fork_deployment(
    store: CommunityStore,
    data: bytes,
    new_name: str,
    forker: Person,
    inherit_roles: bool = True,
    carry_archive: bool = False,
) -> Community:
    """Seed a new deployment from a bundle: structure inherited, zero live
    events, program intervals cleared for re-dating."""
    body = decode_bundle(data)
    _check_references(body)
    source_hash = bundle_content_hash(data)
    source_cid = body["community"]["id"]
    id_map: dict[str, str] = {}
    with store._lock:
        source_community = serialize.community_from(body["community"])
        fresh_cid = new_id("community")
        community = replace(
            source_community,
            id=fresh_cid,
            name=new_name,
            created_at=utc_now(),
            forked_from=(source_cid, source_hash),
        )
        store.communities[fresh_cid] = community
        store.secrets[fresh_cid] = _secrets.token_bytes(32)
        if forker.id not in store.people:
            store.people[forker.id] = forker
        for obj in body["programs"]:
            program = serialize.program_from(obj)
            fresh = new_id("program")
            id_map[program.id] = fresh
            store.programs[fresh] = replace(
                program, id=fresh, community_id=fresh_cid, interval=None
            )
        for obj in body["venues"]:
            venue = serialize.venue_from(obj)
            fresh = new_id("venue")
            id_map[venue.id] = fresh
            store.venues[fresh] = replace(
                venue,
                id=fresh,
                community_id=fresh_cid,
                restricted_to_programs=frozenset(
                    id_map[p] for p in venue.restricted_to_programs
                ),
            )
        if inherit_roles:
            for obj in body["people"]:
                person = serialize.person_from(obj)
                fresh = new_id("person")
                id_map[person.id] = fresh
                store.people[fresh] = replace(person, id=fresh)
            for obj in body["memberships"]:
                m = serialize.membership_from(obj)
                m = replace(
                    m,
                    person_id=id_map[m.person_id],
                    community_id=fresh_cid,
                    program_overrides={id_map[p]: r for p, r in m.program_overrides.items()},
                )
                store.memberships[(fresh_cid, m.person_id)] = m
        store.memberships[(fresh_cid, forker.id)] = Membership(
            person_id=forker.id, community_id=fresh_cid, role=Role.coordinator
        )
        if carry_archive:
            store.archives[fresh_cid] = list(body["events"])
        store._persist()
    return community
