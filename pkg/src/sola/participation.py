"""RSVP state machine, signed check-in tokens, presence cues.

"Star" sits below "going" on a single commitment axis; check-in is terminal
except for coordinator-initiated revocation. Transition application is pure;
the store wraps it in transactions.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import secrets
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from enum import Enum
from typing import Optional

from .canonical import format_instant, parse_instant
from .model import Event

CHECKIN_GRACE_DEFAULT = timedelta(hours=2)


class ParticipationState(str, Enum):
    none = "none"
    starred = "starred"
    going = "going"
    checked_in = "checked_in"


_S = ParticipationState

LEGAL_TRANSITIONS: frozenset[tuple[ParticipationState, ParticipationState]] = frozenset(
    {
        (_S.none, _S.starred),
        (_S.none, _S.going),
        (_S.starred, _S.going),
        (_S.going, _S.checked_in),
        # withdrawals; checked_in is terminal (revocation is a separate op)
        (_S.starred, _S.none),
        (_S.going, _S.none),
    }
)


class IllegalTransition(Exception):
    pass


@dataclass(frozen=True)
class ParticipationRecord:
    person_id: str
    event_id: str
    state: ParticipationState = ParticipationState.none
    ticket_id: Optional[str] = None
    updated_at: Optional[datetime] = None
    state_history: tuple[tuple[ParticipationState, datetime], ...] = ()


def apply_transition(
    record: ParticipationRecord, target: ParticipationState, at: datetime
) -> ParticipationRecord:
    """Pure transition: returns the updated record, or the record unchanged
    when target equals the current state (idempotence)."""
    if target == record.state:
        return record
    if (record.state, target) not in LEGAL_TRANSITIONS:
        raise IllegalTransition(f"{record.state.value} -> {target.value} is not allowed")
    return replace(
        record,
        state=target,
        updated_at=at,
        state_history=record.state_history + ((target, at),),
    )


def revoke_checkin(record: ParticipationRecord, at: datetime) -> ParticipationRecord:
    """Coordinator-only escape hatch out of the terminal checked_in state."""
    if record.state is not ParticipationState.checked_in:
        raise IllegalTransition("only checked_in records can be revoked")
    return replace(
        record,
        state=ParticipationState.none,
        updated_at=at,
        state_history=record.state_history + ((ParticipationState.none, at),),
    )


# --- Check-in tokens ---------------------------------------------------------

def _b64url(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def _b64url_decode(text: str) -> bytes:
    padding = "=" * (-len(text) % 4)
    return base64.urlsafe_b64decode(text + padding)


class TokenError(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class CheckInToken:
    event_id: str
    person_id: str
    issued_at: datetime
    nonce: str  # base64url of 96 random bits

    def payload_bytes(self) -> bytes:
        payload = {
            "event_id": self.event_id,
            "issued_at": format_instant(self.issued_at),
            "nonce": self.nonce,
            "person_id": self.person_id,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def generate_checkin_token(
    event_id: str, person_id: str, community_secret: bytes, issued_at: datetime
) -> str:
    """Wire format: base64url(canonical payload) + "." + base64url(mac).
    The QR code encodes this text verbatim."""
    token = CheckInToken(
        event_id=event_id,
        person_id=person_id,
        issued_at=issued_at,
        nonce=_b64url(secrets.token_bytes(12)),
    )
    payload = token.payload_bytes()
    mac = hmac.new(community_secret, payload, hashlib.sha256).digest()
    return f"{_b64url(payload)}.{_b64url(mac)}"


def verify_checkin_token(encoded: str, community_secret: bytes) -> CheckInToken:
    """Authenticate the token; expiry is checked separately against the event."""
    try:
        payload_b64, mac_b64 = encoded.split(".")
        payload = _b64url_decode(payload_b64)
        mac = _b64url_decode(mac_b64)
    except Exception:
        raise TokenError("malformed token")
    # reject non-canonical base64 so one wire token has exactly one spelling
    if _b64url(payload) != payload_b64 or _b64url(mac) != mac_b64:
        raise TokenError("malformed token")
    expected = hmac.new(community_secret, payload, hashlib.sha256).digest()
    if not hmac.compare_digest(mac, expected):
        raise TokenError("bad signature")
    try:
        fields = json.loads(payload.decode("utf-8"))
        return CheckInToken(
            event_id=fields["event_id"],
            person_id=fields["person_id"],
            issued_at=parse_instant(fields["issued_at"]),
            nonce=fields["nonce"],
        )
    except TokenError:
        raise
    except Exception:
        raise TokenError("malformed payload")


def token_valid_at(event: Event, now: datetime, grace: timedelta = CHECKIN_GRACE_DEFAULT) -> bool:
    assert event.interval is not None
    return now < event.interval.end + grace


@dataclass(frozen=True)
class PresenceSummary:
    going_count: int
    starred_count: int
    checked_in_count: int
    visible_names: tuple[str, ...] = ()


def summarize_presence(
    records: list[ParticipationRecord],
    names: dict[str, str],
    viewer_is_member: bool,
) -> PresenceSummary:
    """Counts for everyone; names only across the membership boundary
    (guests see counts only)."""
    going = [r for r in records if r.state is ParticipationState.going]
    starred = [r for r in records if r.state is ParticipationState.starred]
    checked = [r for r in records if r.state is ParticipationState.checked_in]
    visible: tuple[str, ...] = ()
    if viewer_is_member:
        visible = tuple(
            sorted(names.get(r.person_id, r.person_id) for r in going + checked)
        )
    return PresenceSummary(
        going_count=len(going),
        starred_count=len(starred),
        checked_in_count=len(checked),
        visible_names=visible,
    )
