"""RFC 5545 iCalendar feed for a community schedule.

UID = event id, DTSTART/DTEND in UTC. Output uses CRLF line endings and
folds content lines at 75 octets per the RFC.
"""

from __future__ import annotations

from datetime import datetime, timezone
from typing import Iterable

from .model import Community, Event, EventState

_PRODID = "-//sola//coordination service//EN"


def _escape(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace(";", "\\;")
        .replace(",", "\\,")
        .replace("\r\n", "\\n")
        .replace("\n", "\\n")
    )


def _utc_stamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y%m%dT%H%M%SZ")


def _fold(line: str) -> list[str]:
    """Fold a content line at 75 octets; continuations start with a space."""
    encoded = line.encode("utf-8")
    if len(encoded) <= 75:
        return [line]
    parts = []
    while encoded:
        limit = 75 if not parts else 74
        cut = min(limit, len(encoded))
        # never split inside a UTF-8 sequence
        while cut < len(encoded) and (encoded[cut] & 0xC0) == 0x80:
            cut -= 1
        parts.append(encoded[:cut])
        encoded = encoded[cut:]
    lines = [parts[0].decode("utf-8")]
    lines.extend(" " + p.decode("utf-8") for p in parts[1:])
    return lines


def schedule_to_ical(community: Community, events: Iterable[Event]) -> str:
    lines: list[str] = [
        "BEGIN:VCALENDAR",
        "VERSION:2.0",
        f"PRODID:{_PRODID}",
        "CALSCALE:GREGORIAN",
        f"X-WR-CALNAME:{_escape(community.name)}",
    ]
    ordered = sorted(
        (e for e in events if e.interval is not None and e.state is not EventState.draft),
        key=lambda e: (e.interval.start, e.id),
    )
    for event in ordered:
        status = "CANCELLED" if event.state is EventState.cancelled else "CONFIRMED"
        lines.extend(
            [
                "BEGIN:VEVENT",
                f"UID:{event.id}",
                f"DTSTAMP:{_utc_stamp(event.created_at)}",
                f"DTSTART:{_utc_stamp(event.interval.start)}",
                f"DTEND:{_utc_stamp(event.interval.end)}",
                f"SUMMARY:{_escape(event.title)}",
                f"LOCATION:{_escape(event.venue_ref)}",
                f"STATUS:{status}",
            ]
        )
        if event.tags:
            lines.append("CATEGORIES:" + ",".join(_escape(t) for t in sorted(event.tags)))
        lines.append("END:VEVENT")
    lines.append("END:VCALENDAR")
    folded: list[str] = []
    for line in lines:
        folded.extend(_fold(line))
    return "\r\n".join(folded) + "\r\n"
