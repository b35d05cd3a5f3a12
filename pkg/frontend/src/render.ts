/** Pure HTML-string renderers. Keeping them DOM-free makes every view
 * snapshot-testable without a browser, and enforces the thin-client rule:
 * the functions only lay out what the API said, never recompute it. */

import type {
  Conflict,
  EventSummary,
  MapPin,
  PresenceSummary,
  ScheduleView,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function timeOfDay(instant: string): string {
  return instant.slice(11, 16);
}

function eventCard(event: EventSummary): string {
  const tags = event.tags.length
    ? `<span class="tags">${event.tags.map(escapeHtml).join(" ")}</span>`
    : "";
  const state = event.state === "rescheduled" ? ` <em class="state">moved</em>` : "";
  return (
    `<article class="event" data-id="${escapeHtml(event.id)}">` +
    `<time>${timeOfDay(event.start)}&ndash;${timeOfDay(event.end)}</time> ` +
    `<strong>${escapeHtml(event.title)}</strong>${state} ` +
    `<span class="venue">${escapeHtml(event.venue_ref)}</span>${tags}` +
    `</article>`
  );
}

export function renderSchedule(view: ScheduleView): string {
  const classes = `schedule mode-${view.mode}`;
  const buckets = view.buckets
    .map(([label, events]) => {
      const body = events.length
        ? events.map(eventCard).join("")
        : `<p class="empty">nothing planned</p>`;
      return (
        `<section class="bucket" data-label="${escapeHtml(label)}">` +
        `<h2>${escapeHtml(label)}</h2>${body}</section>`
      );
    })
    .join("");
  return `<div class="${classes}">${buckets}</div>`;
}

export function renderMap(pins: MapPin[]): string {
  // degrades to a coordinate list when no tile provider is configured
  const rows = pins
    .map(
      (pin) =>
        `<li class="pin status-${pin.status}" data-id="${escapeHtml(pin.event.id)}">` +
        `<span class="coords">${pin.latitude.toFixed(5)}, ${pin.longitude.toFixed(5)}</span> ` +
        `<strong>${escapeHtml(pin.event.title)}</strong> ` +
        `<span class="status">${pin.status}</span></li>`,
    )
    .join("");
  return `<ul class="map">${rows}</ul>`;
}

export function renderPresence(summary: PresenceSummary): string {
  const names = summary.visible_names.length
    ? `<ul class="names">${summary.visible_names
        .map((n) => `<li>${escapeHtml(n)}</li>`)
        .join("")}</ul>`
    : "";
  return (
    `<div class="presence">` +
    `<span class="count going">${summary.going_count} going</span>` +
    `<span class="count starred">${summary.starred_count} starred</span>` +
    `<span class="count checked">${summary.checked_in_count} here</span>` +
    names +
    `</div>`
  );
}

/** Conflict panel for a refused create/reschedule; names the blocking
 * event so the organizer can pick another slot. */
export function renderConflictPanel(conflicts: Conflict[]): string {
  const items = conflicts
    .map((c) => {
      const ref = c.conflicting_event_id
        ? ` <a class="conflicting" href="#event/${escapeHtml(c.conflicting_event_id)}">` +
          `${escapeHtml(c.conflicting_event_id)}</a>`
        : "";
      return `<li class="conflict kind-${escapeHtml(c.kind)}">${escapeHtml(c.detail)}${ref}</li>`;
    })
    .join("");
  return `<div class="conflict-panel"><h3>That slot is taken</h3><ul>${items}</ul></div>`;
}

export function renderViolations(violations: string[]): string {
  const items = violations.map((v) => `<li>${escapeHtml(v)}</li>`).join("");
  return `<ul class="violations">${items}</ul>`;
}

export type ScanOutcome =
  | { kind: "accepted"; personId: string }
  | { kind: "duplicate"; personId: string }
  | { kind: "rejected"; reason: string };

export function renderScanResult(outcome: ScanOutcome): string {
  switch (outcome.kind) {
    case "accepted":
      return `<div class="scan ok">&#10003; checked in ${escapeHtml(outcome.personId)}</div>`;
    case "duplicate":
      return `<div class="scan dup">already checked in (${escapeHtml(outcome.personId)})</div>`;
    case "rejected":
      return `<div class="scan bad">rejected: ${escapeHtml(outcome.reason)}</div>`;
  }
}
