/** Polling client for the gapless activity feed. Tracks the last seen
 * sequence and reports which events changed so views can refetch exactly
 * the counts that moved, without a full reload. */

import { ApiClient } from "./api.js";
import type { FeedEntry } from "./types.js";

export interface FeedDelta {
  lastSequence: number;
  rsvpChangedEventIds: string[];
  scheduleChanged: boolean;
}

export class FeedTracker {
  private lastSequence = 0;

  constructor(private readonly community: string) {}

  get sequence(): number {
    return this.lastSequence;
  }

  apply(entries: FeedEntry[]): FeedDelta {
    const rsvpChanged = new Set<string>();
    let scheduleChanged = false;
    for (const entry of entries) {
      if (entry.sequence <= this.lastSequence) continue; // already applied
      this.lastSequence = entry.sequence;
      if (entry.kind === "rsvp_delta") {
        rsvpChanged.add(entry.event_id);
      } else {
        scheduleChanged = true;
      }
    }
    return {
      lastSequence: this.lastSequence,
      rsvpChangedEventIds: [...rsvpChanged].sort(),
      scheduleChanged,
    };
  }

  async poll(api: ApiClient): Promise<FeedDelta> {
    const entries = await api.feed(this.community, this.lastSequence);
    return this.apply(entries);
  }
}
