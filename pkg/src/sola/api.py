"""HTTP API binding the domain modules; every response body is canonical JSON.

Identity bootstrap is an email-less claim flow: POST /claim mints a person
and an opaque bearer session token. Short-lived pop-ups do not want signup
ceremony.
"""

from __future__ import annotations

import os
import secrets as _secrets
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from typing import Optional

from fastapi import Depends, FastAPI, Header, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from . import analytics, portability
from .canonical import canonical_json, parse_instant, to_plain
from .model import (
    BoundaryPolicy,
    CommunitySettings,
    DateRange,
    EventState,
    Person,
    Role,
    RsvpMode,
    TimeInterval,
    Venue,
    Program,
    Visibility,
    new_id,
    utc_now,
)
from .ical import schedule_to_ical
from .participation import ParticipationState, TokenError
from .scheduling import (
    BLOCKING_KINDS_DEFAULT,
    ScheduleFilters,
    ScheduleMode,
    project_map,
    project_schedule,
)
from .serialize import policy_from, settings_from
from .store import (
    CommunityStore,
    JoinError,
    NotFound,
    PermissionDenied,
    SchedulingConflict,
    StaleRevision,
    StoreError,
    TicketError,
    ValidationFailed,
)


@dataclass
class ApiConfig:
    host: str = "127.0.0.1"
    port: int = 8400
    persistence_path: Optional[str] = None
    session_ttl_seconds: int = 7 * 24 * 3600
    cors_origins: list[str] = field(default_factory=list)

    @classmethod
    def from_env(cls, base: Optional["ApiConfig"] = None) -> "ApiConfig":
        cfg = base or cls()
        cfg.host = os.environ.get("SOLA_HOST", cfg.host)
        cfg.port = int(os.environ.get("SOLA_PORT", cfg.port))
        cfg.persistence_path = os.environ.get("SOLA_STATE", cfg.persistence_path)
        cfg.session_ttl_seconds = int(
            os.environ.get("SOLA_SESSION_TTL", cfg.session_ttl_seconds)
        )
        cors = os.environ.get("SOLA_CORS")
        if cors:
            cfg.cors_origins = [o.strip() for o in cors.split(",") if o.strip()]
        return cfg


class ApiError(Exception):
    def __init__(self, status: int, message: str, extra: Optional[dict] = None):
        self.status = status
        self.message = message
        self.extra = extra or {}


def _json(payload, status: int = 200) -> Response:
    return Response(content=canonical_json(payload), status_code=status, media_type="application/json")


class SessionRegistry:
    def __init__(self, ttl: timedelta):
        self.ttl = ttl
        self._sessions: dict[str, tuple[str, datetime]] = {}

    def issue(self, person_id: str) -> str:
        token = _secrets.token_urlsafe(32)
        self._sessions[token] = (person_id, utc_now() + self.ttl)
        return token

    def resolve(self, token: Optional[str]) -> Optional[str]:
        if token is None or token not in self._sessions:
            return None
        person_id, expires = self._sessions[token]
        if utc_now() >= expires:
            del self._sessions[token]
            return None
        return person_id


def create_app(store: Optional[CommunityStore] = None, config: Optional[ApiConfig] = None) -> FastAPI:
    config = config or ApiConfig()
    store = store or CommunityStore(persistence_path=config.persistence_path)
    sessions = SessionRegistry(timedelta(seconds=config.session_ttl_seconds))
    app = FastAPI(title="sola", docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.sessions = sessions
    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=config.cors_origins,
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return _json({"error": exc.message, **exc.extra}, status=exc.status)

    def translate(exc: Exception) -> ApiError:
        if isinstance(exc, NotFound):
            return ApiError(404, str(exc))
        if isinstance(exc, PermissionDenied):
            return ApiError(403, str(exc))
        if isinstance(exc, ValidationFailed):
            return ApiError(422, str(exc), {"violations": list(exc.report.violations)})
        if isinstance(exc, SchedulingConflict):
            return ApiError(409, str(exc), {"conflicts": to_plain(exc.conflicts)})
        if isinstance(exc, StaleRevision):
            return ApiError(409, str(exc))
        if isinstance(exc, (JoinError, TicketError)):
            return ApiError(409, str(exc))
        if isinstance(exc, TokenError):
            return ApiError(400, exc.reason)
        if isinstance(exc, portability.BundleError):
            return ApiError(400, str(exc))
        if isinstance(exc, StoreError):
            return ApiError(400, str(exc))
        if isinstance(exc, (KeyError, ValueError)):
            return ApiError(422, str(exc))
        raise exc

    def session_person(authorization: Optional[str] = Header(default=None)) -> Optional[str]:
        if authorization is None:
            return None
        scheme, _, token = authorization.partition(" ")
        if scheme.lower() != "bearer":
            return None
        return sessions.resolve(token.strip())

    def require_session(person_id: Optional[str]) -> str:
        if person_id is None:
            raise ApiError(401, "authentication required")
        return person_id

    def parse_interval(payload: dict) -> Optional[TimeInterval]:
        if payload.get("start") is None or payload.get("end") is None:
            return None
        return TimeInterval(parse_instant(payload["start"]), parse_instant(payload["end"]))

    # --- identity ----------------------------------------------------------

    @app.post("/claim")
    async def claim(payload: dict):
        name = payload.get("display_name", "").strip()
        if not name:
            raise ApiError(422, "display_name required")
        person = store.add_person(name, payload.get("profile", ""))
        token = sessions.issue(person.id)
        return _json({"person_id": person.id, "session_token": token}, status=201)

    # --- communities ---------------------------------------------------------

    @app.post("/communities")
    async def create_community(payload: dict, person=Depends(session_person)):
        actor = require_session(person)
        try:
            settings = settings_from(payload["settings"]) if "settings" in payload else None
            policy = policy_from(payload["boundary_policy"]) if "boundary_policy" in payload else None
            community = store.create_community(
                name=payload["name"],
                timezone=payload.get("timezone", "UTC"),
                creator_id=actor,
                boundary_policy=policy,
                settings=settings,
            )
        except Exception as exc:
            raise translate(exc)
        return _json(to_plain(community), status=201)

    @app.post("/communities/{community_id}/join")
    async def join(community_id: str, payload: dict, person=Depends(session_person)):
        actor = require_session(person)
        try:
            membership = store.join_community(
                actor,
                community_id,
                token=payload.get("token"),
                credential_descriptor=payload.get("credential_descriptor"),
                credential_scheme=payload.get("credential_scheme", ""),
            )
        except Exception as exc:
            raise translate(exc)
        if membership is None:
            return _json({"status": "pending_approval"}, status=202)
        return _json(to_plain(membership), status=201)

    @app.post("/communities/{community_id}/approve")
    async def approve(community_id: str, payload: dict, person=Depends(session_person)):
        actor = require_session(person)
        try:
            membership = store.approve_join(actor, payload["applicant_id"], community_id)
        except Exception as exc:
            raise translate(exc)
        if membership is None:
            return _json({"status": "pending_approval"}, status=202)
        return _json(to_plain(membership), status=201)

    @app.post("/communities/{community_id}/invitations")
    async def invite(community_id: str, payload: dict, person=Depends(session_person)):
        actor = require_session(person)
        expires = payload.get("expires_at")
        try:
            invitation, token = store.issue_invitation(
                actor,
                community_id,
                max_uses=payload.get("max_uses"),
                expires_at=parse_instant(expires) if expires else None,
            )
        except Exception as exc:
            raise translate(exc)
        return _json({"invitation_id": invitation.id, "token": token}, status=201)

    @app.post("/communities/{community_id}/venues")
    async def create_venue(community_id: str, payload: dict, person=Depends(session_person)):
        actor = require_session(person)
        try:
            from .serialize import venue_from

            payload = dict(payload)
            payload.setdefault("id", new_id("venue"))
            payload["community_id"] = community_id
            payload.setdefault("opening_hours", {"spans": []})
            venue = store.create_venue(actor, venue_from(payload))
        except Exception as exc:
            raise translate(exc)
        return _json(to_plain(venue), status=201)

    @app.post("/communities/{community_id}/programs")
    async def create_program(community_id: str, payload: dict, person=Depends(session_person)):
        actor = require_session(person)
        try:
            from .serialize import program_from

            payload = dict(payload)
            payload.setdefault("id", new_id("program"))
            payload["community_id"] = community_id
            program = store.create_program(actor, program_from(payload))
        except Exception as exc:
            raise translate(exc)
        return _json(to_plain(program), status=201)

    # --- events ------------------------------------------------------------------

    @app.post("/events")
    async def create_event(payload: dict, person=Depends(session_person)):
        actor = require_session(person)
        try:
            event, advisories = store.create_event(
                actor_id=actor,
                community_id=payload["community_id"],
                title=payload.get("title", ""),
                interval=parse_interval(payload),
                venue_ref=payload.get("venue_ref", ""),
                tags=frozenset(payload.get("tags", ())),
                co_hosts=frozenset(payload.get("co_hosts", ())),
                speakers=tuple(payload.get("speakers", ())),
                program_id=payload.get("program_id"),
                rsvp_mode=RsvpMode(payload.get("rsvp_mode", "open_drop_in")),
                checkin_enabled=payload.get("checkin_enabled", False),
                **(
                    {"visibility": Visibility(payload["visibility"])}
                    if "visibility" in payload
                    else {}
                ),
            )
        except Exception as exc:
            raise translate(exc)
        return _json(
            {"event": to_plain(event), "advisory_conflicts": to_plain(advisories)}, status=201
        )

    @app.patch("/events/{event_id}")
    async def reschedule(event_id: str, payload: dict, person=Depends(session_person)):
        actor = require_session(person)
        try:
            event, conflicts = store.reschedule_event(
                actor_id=actor,
                event_id=event_id,
                new_interval=parse_interval(payload),
                new_venue_ref=payload.get("venue_ref"),
                expected_revision=payload.get("expected_revision"),
            )
        except Exception as exc:
            raise translate(exc)
        # the store returns blocking conflicts only when it refused to move
        if any(c.kind in BLOCKING_KINDS_DEFAULT for c in conflicts):
            return _json({"event": to_plain(event), "conflicts": to_plain(conflicts)}, status=409)
        return _json({"event": to_plain(event), "advisory_conflicts": to_plain(conflicts)})

    @app.post("/events/{event_id}/cancel")
    async def cancel(event_id: str, person=Depends(session_person)):
        actor = require_session(person)
        try:
            event = store.cancel_event(actor, event_id)
        except Exception as exc:
            raise translate(exc)
        return _json(to_plain(event))

    @app.post("/events/{event_id}/rsvp")
    async def rsvp(event_id: str, payload: dict, person=Depends(session_person)):
        actor = require_session(person)
        try:
            record = store.set_rsvp(actor, event_id, ParticipationState(payload["target"]))
        except Exception as exc:
            raise translate(exc)
        return _json(to_plain(record))

    @app.post("/events/{event_id}/checkin-token")
    async def checkin_token(event_id: str, person=Depends(session_person)):
        actor = require_session(person)
        try:
            token = store.make_checkin_token(event_id, actor)
        except Exception as exc:
            raise translate(exc)
        return _json({"token": token}, status=201)

    @app.post("/events/{event_id}/checkin")
    async def checkin(event_id: str, payload: dict, person=Depends(session_person)):
        actor = require_session(person)
        try:
            record, duplicate = store.check_in(actor, payload["token"])
        except Exception as exc:
            raise translate(exc)
        if record.event_id != event_id:
            raise ApiError(400, "token was issued for a different event")
        return _json({"record": to_plain(record), "duplicate": duplicate})

    @app.get("/events/{event_id}/presence")
    async def presence(event_id: str, person=Depends(session_person)):
        try:
            summary = store.presence_summary(event_id, person)
        except Exception as exc:
            raise translate(exc)
        return _json(to_plain(summary))

    @app.post("/events/{event_id}/tickets")
    async def create_ticket(event_id: str, payload: dict, person=Depends(session_person)):
        actor = require_session(person)
        try:
            from .serialize import ticket_from

            payload = dict(payload)
            payload.setdefault("id", new_id("ticket"))
            payload["event_id"] = event_id
            payload.setdefault("price", "0")
            payload.setdefault("currency", "USD")
            ticket = store.create_ticket(actor, ticket_from(payload))
        except Exception as exc:
            raise translate(exc)
        return _json(to_plain(ticket), status=201)

    @app.post("/tickets/{ticket_id}/claim")
    async def claim_ticket(ticket_id: str, person=Depends(session_person)):
        actor = require_session(person)
        try:
            record = store.claim_ticket(actor, ticket_id)
        except Exception as exc:
            raise translate(exc)
        return _json(to_plain(record), status=201)

    # --- projections ---------------------------------------------------------------

    def _filters(
        tags: Optional[str], venue: Optional[str], program: Optional[str],
        date_from: Optional[str], date_to: Optional[str],
    ) -> ScheduleFilters:
        date_range = None
        if date_from and date_to:
            date_range = DateRange(date.fromisoformat(date_from), date.fromisoformat(date_to))
        return ScheduleFilters(
            tags=frozenset(tags.split(",")) if tags else frozenset(),
            venue_ids=frozenset(venue.split(",")) if venue else frozenset(),
            program_ids=frozenset(program.split(",")) if program else frozenset(),
            date_range=date_range,
        )

    @app.get("/schedule")
    async def schedule(
        community: str,
        mode: str = "list",
        tags: Optional[str] = None,
        venue: Optional[str] = None,
        program: Optional[str] = None,
        date_from: Optional[str] = Query(default=None, alias="from"),
        date_to: Optional[str] = Query(default=None, alias="to"),
    ):
        try:
            comm = store.communities[community]
            view = project_schedule(
                store.events_of(community),
                _filters(tags, venue, program, date_from, date_to),
                ScheduleMode(mode),
                comm.timezone,
            )
        except KeyError:
            raise ApiError(404, f"community {community}")
        except Exception as exc:
            raise translate(exc)
        return _json(to_plain(view))

    @app.get("/map")
    async def map_view(community: str, at: Optional[str] = None):
        try:
            comm = store.communities[community]
            now = parse_instant(at) if at else utc_now()
            pins = project_map(
                store.events_of(community), store.venues_of(community), now,
                community_tz=comm.timezone,
            )
        except KeyError:
            raise ApiError(404, f"community {community}")
        except Exception as exc:
            raise translate(exc)
        return _json(to_plain(pins))

    @app.get("/feed")
    async def feed(community: str, since: int = 0):
        if community not in store.communities:
            raise ApiError(404, f"community {community}")
        return _json(to_plain(store.feed_since(community, since)))

    @app.get("/stats")
    async def stats(
        community: str,
        date_from: str = Query(alias="from"),
        date_to: str = Query(alias="to"),
        format: str = "json",
    ):
        try:
            comm = store.communities[community]
            window = TimeInterval(parse_instant(date_from), parse_instant(date_to))
            result = analytics.compute_deployment_stats(
                store.events_of(community), store.records_of(community), window
            )
        except KeyError:
            raise ApiError(404, f"community {community}")
        except Exception as exc:
            raise translate(exc)
        if format == "csv":
            text = analytics.STATS_CSV_HEADER + "\n" + result.csv_row(comm.name) + "\n"
            return PlainTextResponse(text, media_type="text/csv")
        return _json(to_plain(result))

    @app.get("/bridge-prompts")
    async def bridge_prompts(community: str, at: Optional[str] = None, limit: int = 10):
        try:
            now = parse_instant(at) if at else utc_now()
            events = store.events_of(community)
            records = store.records_of(community)
            grouping = analytics.default_grouping(records, {e.id: e for e in events})
            upcoming = [
                e
                for e in events
                if e.state in analytics.LIVE_STATES
                and e.interval is not None
                and e.interval.start > now
            ]
            ranking = analytics.bridge_prompt_ranking(upcoming, records, grouping, limit)
        except Exception as exc:
            raise translate(exc)
        return _json([
            {"event": to_plain(e), "score": score} for e, score in ranking
        ])

    # --- portability ---------------------------------------------------------------

    @app.post("/export")
    async def export(payload: dict, person=Depends(session_person)):
        actor = require_session(person)
        try:
            data = portability.export_bundle(
                store,
                payload["community_id"],
                actor,
                portability.ExportScope(payload.get("scope", "full")),
            )
        except Exception as exc:
            raise translate(exc)
        return Response(content=data, media_type="application/octet-stream")

    @app.post("/import")
    async def import_(request: Request, person=Depends(session_person)):
        require_session(person)
        data = await request.body()
        try:
            community, id_map = portability.import_bundle(store, data)
        except Exception as exc:
            raise translate(exc)
        return _json({"community": to_plain(community), "id_map": id_map}, status=201)

    @app.post("/fork")
    async def fork(
        request: Request,
        new_name: str,
        inherit_roles: bool = True,
        carry_archive: bool = False,
        person=Depends(session_person),
    ):
        actor = require_session(person)
        data = await request.body()
        try:
            forker = store.people[actor]
            community = portability.fork_deployment(
                store, data, new_name, forker,
                inherit_roles=inherit_roles, carry_archive=carry_archive,
            )
        except Exception as exc:
            raise translate(exc)
        return _json(to_plain(community), status=201)

    @app.get("/ical/{community_id}.ics")
    async def ical(community_id: str):
        if community_id not in store.communities:
            raise ApiError(404, f"community {community_id}")
        text = schedule_to_ical(store.communities[community_id], store.events_of(community_id))
        return PlainTextResponse(text, media_type="text/calendar")

    return app
