/** Browser entry point: wires the pure renderers to the live API and a
 * 5-second feed poll. Filters live in the URL query string so any view is
 * a shareable link. */

import { ApiClient, ApiError, filtersFromQuery, filtersToQuery } from "./api.js";
import { FeedTracker } from "./feed.js";
import { OfflineQueue } from "./queue.js";
import {
  renderConflictPanel,
  renderMap,
  renderPresence,
  renderSchedule,
  renderScanResult,
  renderViolations,
} from "./render.js";
import { submitScan } from "./scanner.js";
import type { EventDraft } from "./types.js";

const POLL_INTERVAL_MS = 5000;

function mount(root: HTMLElement): void {
  const params = new URLSearchParams(window.location.search);
  const community = params.get("community");
  if (!community) {
    root.innerHTML = `<p class="error">missing ?community= in the URL</p>`;
    return;
  }
  const api = new ApiClient("", (url, init) => fetch(url, init));
  const stored = window.localStorage.getItem("sola-session");
  if (stored) api.setSession(stored);
  const tracker = new FeedTracker(community);
  const queue = new OfflineQueue();

  const scheduleEl = document.createElement("section");
  const mapEl = document.createElement("section");
  const bannerEl = document.createElement("div");
  root.append(bannerEl, scheduleEl, mapEl);

  async function refreshSchedule(): Promise<void> {
    const filters = filtersFromQuery(window.location.search);
    try {
      const view = await api.schedule(community!, filters);
      scheduleEl.innerHTML = renderSchedule(view);
      history.replaceState(null, "", `?community=${community}&${filtersToQuery(filters)}`);
      bannerEl.innerHTML = "";
    } catch (error) {
      bannerEl.innerHTML = `<p class="error stale">schedule unavailable; showing last known state</p>`;
      if (!(error instanceof ApiError)) throw error;
    }
  }

  async function refreshMap(): Promise<void> {
    mapEl.innerHTML = renderMap(await api.map(community!));
  }

  async function tick(): Promise<void> {
    await queue.flush(api);
    const delta = await tracker.poll(api);
    if (delta.scheduleChanged) await refreshSchedule();
    for (const eventId of delta.rsvpChangedEventIds) {
      const badge = document.querySelector(`[data-presence="${eventId}"]`);
      if (badge) badge.innerHTML = renderPresence(await api.presence(eventId));
    }
  }

  void refreshSchedule();
  void refreshMap();
  window.setInterval(() => void tick(), POLL_INTERVAL_MS);

  // surfaced for the create form and scanner widgets
  (window as unknown as Record<string, unknown>).sola = {
    api,
    queue,
    submitDraft: async (draft: EventDraft, panel: HTMLElement) => {
      try {
        await api.createEvent(draft);
        await refreshSchedule();
      } catch (error) {
        if (error instanceof ApiError && error.status === 409 && error.body.conflicts) {
          panel.innerHTML = renderConflictPanel(error.body.conflicts);
        } else if (error instanceof ApiError && error.status === 422 && error.body.violations) {
          panel.innerHTML = renderViolations(error.body.violations);
        } else {
          queue.enqueue(draft);
          panel.innerHTML = `<p class="queued">offline: queued, will retry</p>`;
        }
      }
    },
    scan: async (eventId: string, tokenText: string, panel: HTMLElement) => {
      panel.innerHTML = renderScanResult(await submitScan(api, eventId, tokenText));
    },
  };
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) mount(root);
}
