"""Roles, permission resolution, boundary policies, and credential verifiers.

The permission matrix is monotone in role order for every action except
edits of one's own events, which go by ownership rather than rank.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import secrets
import subprocess
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Mapping, Optional

from .model import Community, Event, EventState, Role, Visibility, utc_now


class Action(str, Enum):
    create_event = "create_event"
    edit_event = "edit_event"
    cancel_event = "cancel_event"
    create_venue = "create_venue"
    edit_settings = "edit_settings"
    export_data = "export_data"
    checkin_others = "checkin_others"
    view_event = "view_event"


class JoinedVia(str, Enum):
    open = "open"
    invitation = "invitation"
    peer_approval = "peer_approval"
    credential = "credential"


@dataclass(frozen=True)
class Membership:
    person_id: str
    community_id: str
    role: Role
    program_overrides: Mapping[str, Role] = field(default_factory=dict)
    joined_at: datetime = field(default_factory=utc_now)
    joined_via: JoinedVia = JoinedVia.open

    def effective_role(self, program_id: Optional[str] = None) -> Role:
        if program_id is not None and program_id in self.program_overrides:
            return self.program_overrides[program_id]
        return self.role


def _is_owner(person_id: Optional[str], event: Event) -> bool:
    return person_id is not None and (person_id == event.host_id or person_id in event.co_hosts)


def can(
    actor: Optional[Membership],
    action: Action,
    community: Community,
    event: Optional[Event] = None,
    program_id: Optional[str] = None,
) -> bool:
    """Resolve the default permission matrix. A None actor is a guest.

    When an event is given and no explicit program_id, the event's program
    determines the actor's effective role.
    """
    if event is not None and program_id is None:
        program_id = event.program_id
    role = actor.effective_role(program_id) if actor is not None else Role.guest
    person_id = actor.person_id if actor is not None else None

    if action is Action.create_event:
        return role >= community.settings.who_can_create_events
    if action is Action.create_venue:
        return role >= community.settings.who_can_create_venues
    if action in (Action.edit_settings, Action.export_data):
        return role >= Role.coordinator
    if action in (Action.edit_event, Action.cancel_event):
        if role >= Role.facilitator:
            return True
        if event is None:
            return False
        return _is_owner(person_id, event) and event.state != EventState.cancelled
    if action is Action.checkin_others:
        if role >= Role.facilitator:
            return True
        return event is not None and _is_owner(person_id, event)
    if action is Action.view_event:
        if event is None or event.visibility is not Visibility.members_only:
            return True  # public; unlisted is viewable by anyone holding the id
        return role >= Role.member
    raise ValueError(f"unknown action: {action}")


# --- Invitation tokens -------------------------------------------------------

TOKEN_BYTES = 32  # 256-bit tokens, well above the 128-bit floor


def _hash_token(token: str, salt: str) -> str:
    return hashlib.sha256((salt + token).encode("utf-8")).hexdigest()


@dataclass
class Invitation:
    """Stored invitation. Holds only a salted hash; the plaintext token is
    returned exactly once at issuance."""

    id: str
    community_id: str
    token_hash: str
    salt: str
    issued_by: str
    max_uses: Optional[int] = None  # None = unlimited
    uses: int = 0
    expires_at: Optional[datetime] = None
    issued_at: datetime = field(default_factory=utc_now)

    def matches(self, token: str) -> bool:
        return hmac.compare_digest(self.token_hash, _hash_token(token, self.salt))

    def redeemable(self, now: datetime) -> bool:
        if self.max_uses is not None and self.uses >= self.max_uses:
            return False
        if self.expires_at is not None and now >= self.expires_at:
            return False
        return True


def mint_invitation(
    invitation_id: str,
    community_id: str,
    issued_by: str,
    max_uses: Optional[int] = None,
    expires_at: Optional[datetime] = None,
) -> tuple[Invitation, str]:
    """Create an invitation; returns (stored record, plaintext token)."""
    token = base64.urlsafe_b64encode(secrets.token_bytes(TOKEN_BYTES)).rstrip(b"=").decode("ascii")
    salt = secrets.token_hex(16)
    invitation = Invitation(
        id=invitation_id,
        community_id=community_id,
        token_hash=_hash_token(token, salt),
        salt=salt,
        issued_by=issued_by,
        max_uses=max_uses,
        expires_at=expires_at,
    )
    return invitation, token


# --- Credential verifiers ----------------------------------------------------

@dataclass(frozen=True)
class VerifierResponse:
    accepted: bool
    attributes: Mapping[str, str] = field(default_factory=dict)


class CredentialVerifier:
    """Pluggable boundary-check backend: verify(descriptor, scheme)."""

    def verify(self, descriptor: str, scheme: str = "") -> VerifierResponse:
        raise NotImplementedError


class MockVerifier(CredentialVerifier):
    def __init__(self, accept: bool = True, attributes: Optional[dict[str, str]] = None):
        self.accept = accept
        self.attributes = attributes or {}

    def verify(self, descriptor: str, scheme: str = "") -> VerifierResponse:
        return VerifierResponse(self.accept, dict(self.attributes))


class StaticAllowlistVerifier(CredentialVerifier):
    def __init__(self, allowed: set[str]):
        self.allowed = set(allowed)

    def verify(self, descriptor: str, scheme: str = "") -> VerifierResponse:
        return VerifierResponse(descriptor in self.allowed)


class SubprocessVerifier(CredentialVerifier):
    """External verifier speaking one JSON request/response per invocation:
    stdin {"scheme","descriptor"} -> stdout {"result":"accept"|"reject","attributes":{}}."""

    def __init__(self, command: list[str], timeout: float = 10.0):
        self.command = command
        self.timeout = timeout

    def verify(self, descriptor: str, scheme: str = "") -> VerifierResponse:
        request = json.dumps({"scheme": scheme, "descriptor": descriptor})
        proc = subprocess.run(
            self.command,
            input=request.encode("utf-8"),
            capture_output=True,
            timeout=self.timeout,
        )
        if proc.returncode != 0:
            return VerifierResponse(False)
        reply = json.loads(proc.stdout.decode("utf-8"))
        return VerifierResponse(
            reply.get("result") == "accept", reply.get("attributes", {})
        )


class VerifierRegistry:
    def __init__(self):
        self._verifiers: dict[str, CredentialVerifier] = {}

    def register(self, verifier_id: str, verifier: CredentialVerifier) -> None:
        self._verifiers[verifier_id] = verifier

    def get(self, verifier_id: str) -> CredentialVerifier:
        if verifier_id not in self._verifiers:
            raise KeyError(f"no verifier registered under {verifier_id!r}")
        return self._verifiers[verifier_id]
