/** Response shapes of the REST endpoints the UI consumes. Mirrors the
 * canonical JSON the server emits; the UI never derives domain facts
 * itself, it only renders these. */

export type ScheduleMode = "compact" | "list" | "venue" | "weekly";

export interface EventSummary {
  id: string;
  title: string;
  start: string;
  end: string;
  venue_ref: string;
  host_id: string;
  program_id: string | null;
  state: string;
  tags: string[];
}

/** buckets come over the wire as [label, events] pairs */
export type ScheduleBucket = [string, EventSummary[]];

export interface ScheduleView {
  mode: ScheduleMode;
  buckets: ScheduleBucket[];
  generated_for: {
    tags: string[];
    venue_ids: string[];
    program_ids: string[];
    date_range: { start: string; end: string } | null;
  };
}

export interface MapPin {
  event: EventSummary;
  latitude: number;
  longitude: number;
  status: "ongoing" | "upcoming" | "past";
}

export interface PresenceSummary {
  going_count: number;
  starred_count: number;
  checked_in_count: number;
  visible_names: string[];
}

export interface Conflict {
  kind: string;
  conflicting_event_id: string | null;
  detail: string;
}

export interface FeedEntry {
  sequence: number;
  community_id: string;
  event_id: string;
  kind: string;
  at: string;
}

export interface ParticipationRecord {
  person_id: string;
  event_id: string;
  state: string;
  ticket_id: string | null;
}

export interface CheckinResponse {
  record: ParticipationRecord;
  duplicate: boolean;
}

export interface CreatedEvent {
  event: EventSummary & Record<string, unknown>;
  advisory_conflicts: Conflict[];
}

export interface ApiErrorBody {
  error: string;
  conflicts?: Conflict[];
  violations?: string[];
}

export interface EventDraft {
  community_id: string;
  title: string;
  start: string;
  end: string;
  venue_ref: string;
  tags?: string[];
  co_hosts?: string[];
  speakers?: string[];
  program_id?: string;
  rsvp_mode?: string;
  checkin_enabled?: boolean;
}

export interface Filters {
  mode: ScheduleMode;
  tags: string[];
  venue: string[];
  program: string[];
  from?: string;
  to?: string;
}
