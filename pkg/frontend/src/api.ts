/** Thin client over the documented REST endpoints. Carries the bearer
 * session token; surfaces non-2xx responses as ApiError with the parsed
 * body so views can render 409/422 payloads inline. */

import type {
  ApiErrorBody,
  CheckinResponse,
  CreatedEvent,
  EventDraft,
  FeedEntry,
  Filters,
  MapPin,
  PresenceSummary,
  ScheduleView,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(body.error ?? `HTTP ${status}`);
  }
}

export function filtersToQuery(filters: Filters): string {
  const params = new URLSearchParams();
  params.set("mode", filters.mode);
  if (filters.tags.length) params.set("tags", filters.tags.join(","));
  if (filters.venue.length) params.set("venue", filters.venue.join(","));
  if (filters.program.length) params.set("program", filters.program.join(","));
  if (filters.from) params.set("from", filters.from);
  if (filters.to) params.set("to", filters.to);
  return params.toString();
}

export function filtersFromQuery(query: string): Filters {
  const params = new URLSearchParams(query);
  const list = (key: string) => {
    const value = params.get(key);
    return value ? value.split(",").filter((v) => v.length > 0) : [];
  };
  return {
    mode: (params.get("mode") as Filters["mode"]) ?? "list",
    tags: list("tags"),
    venue: list("venue"),
    program: list("program"),
    from: params.get("from") ?? undefined,
    to: params.get("to") ?? undefined,
  };
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike,
    private sessionToken: string | null = null,
  ) {}

  setSession(token: string): void {
    this.sessionToken = token;
  }

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.sessionToken) headers["authorization"] = `Bearer ${this.sessionToken}`;
    return headers;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: this.headers(),
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const parsed = text.length ? JSON.parse(text) : null;
    if (!response.ok) {
      throw new ApiError(response.status, parsed ?? { error: `HTTP ${response.status}` });
    }
    return parsed as T;
  }

  claim(displayName: string): Promise<{ person_id: string; session_token: string }> {
    return this.request("POST", "/claim", { display_name: displayName });
  }

  schedule(community: string, filters: Filters): Promise<ScheduleView> {
    return this.request("GET", `/schedule?community=${community}&${filtersToQuery(filters)}`);
  }

  map(community: string, at?: string): Promise<MapPin[]> {
    const suffix = at ? `&at=${encodeURIComponent(at)}` : "";
    return this.request("GET", `/map?community=${community}${suffix}`);
  }

  presence(eventId: string): Promise<PresenceSummary> {
    return this.request("GET", `/events/${eventId}/presence`);
  }

  feed(community: string, since: number): Promise<FeedEntry[]> {
    return this.request("GET", `/feed?community=${community}&since=${since}`);
  }

  createEvent(draft: EventDraft): Promise<CreatedEvent> {
    return this.request("POST", "/events", draft);
  }

  rsvp(eventId: string, target: string): Promise<unknown> {
    return this.request("POST", `/events/${eventId}/rsvp`, { target });
  }

  checkin(eventId: string, token: string): Promise<CheckinResponse> {
    return this.request("POST", `/events/${eventId}/checkin`, { token });
  }
}
