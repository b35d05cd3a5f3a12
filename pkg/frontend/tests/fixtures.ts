/** Fixed API fixtures shaped exactly like the server's canonical JSON. */

import type {
  EventSummary,
  FeedEntry,
  MapPin,
  PresenceSummary,
  ScheduleView,
} from "../src/types.js";

export function event(overrides: Partial<EventSummary> = {}): EventSummary {
  return {
    id: "E1",
    title: "Morning tai chi",
    start: "2024-06-03T07:00:00Z",
    end: "2024-06-03T08:00:00Z",
    venue_ref: "V1",
    host_id: "U2",
    program_id: null,
    state: "published",
    tags: [],
    ...overrides,
  };
}

export const weeklySchedule: ScheduleView = {
  mode: "weekly",
  buckets: [
    ["2024-06-03", [event(), event({ id: "E2", title: "Zine workshop", start: "2024-06-03T14:00:00Z", end: "2024-06-03T16:00:00Z", tags: ["art"] })]],
    ["2024-06-04", []],
    ["2024-06-05", [event({ id: "E3", title: "Soup night <chef's table>", start: "2024-06-05T18:00:00Z", end: "2024-06-05T20:00:00Z", venue_ref: "open kitchen", state: "rescheduled" })]],
  ],
  generated_for: { tags: [], venue_ids: [], program_ids: [], date_range: { start: "2024-06-03", end: "2024-06-05" } },
};

export const mapPins: MapPin[] = [
  { event: event(), latitude: 30.18223, longitude: 120.13566, status: "ongoing" },
  { event: event({ id: "E2", title: "Zine workshop" }), latitude: 30.18301, longitude: 120.1371, status: "upcoming" },
];

export const memberPresence: PresenceSummary = {
  going_count: 4,
  starred_count: 2,
  checked_in_count: 3,
  visible_names: ["Ada", "Bo", "Cam"],
};

export const guestPresence: PresenceSummary = {
  going_count: 4,
  starred_count: 2,
  checked_in_count: 3,
  visible_names: [],
};

export const feedEntries: FeedEntry[] = [
  { sequence: 1, community_id: "C1", event_id: "E1", kind: "event_created", at: "2024-06-01T10:00:00Z" },
  { sequence: 2, community_id: "C1", event_id: "E1", kind: "rsvp_delta", at: "2024-06-01T10:05:00Z" },
  { sequence: 3, community_id: "C1", event_id: "E2", kind: "rsvp_delta", at: "2024-06-01T10:06:00Z" },
];

/** Minimal Response stand-in so tests need no DOM library. */
export function jsonResponse(status: number, body: unknown): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    text: async () => JSON.stringify(body),
  } as unknown as Response;
}

export type Route = (url: string, init?: RequestInit) => { status: number; body: unknown } | null;

/** fetch substitute driven by a list of routes; records every call. */
export function mockFetch(routes: Route[]): {
  fetch: (url: string, init?: RequestInit) => Promise<Response>;
  calls: { url: string; init?: RequestInit }[];
} {
  const calls: { url: string; init?: RequestInit }[] = [];
  return {
    calls,
    fetch: async (url, init) => {
      calls.push({ url, init });
      for (const route of routes) {
        const hit = route(url, init);
        if (hit) return jsonResponse(hit.status, hit.body);
      }
      throw new TypeError("network unreachable");
    },
  };
}
