/** Offline create-event queue.
 *
 * Submits queued drafts when connectivity returns. Each draft gets a
 * deterministic idempotency key derived from its content, so re-queuing
 * the same form (double-tap, page reload) collapses to one entry and a
 * draft that already succeeded is never submitted again.
 */

import { ApiClient, ApiError } from "./api.js";
import type { Conflict, EventDraft } from "./types.js";

export interface QueueEntry {
  key: string;
  draft: EventDraft;
  attempts: number;
}

export type FlushResult =
  | { key: string; status: "created"; eventId: string }
  | { key: string; status: "rejected"; httpStatus: number; conflicts?: Conflict[] }
  | { key: string; status: "pending" };

/** FNV-1a over the canonical draft serialization; stable across reloads. */
export function idempotencyKey(draft: EventDraft): string {
  const canonical = JSON.stringify(draft, Object.keys(draft).sort());
  let hash = 0x811c9dc5;
  for (let i = 0; i < canonical.length; i++) {
    hash ^= canonical.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash.toString(16).padStart(8, "0");
}

export class OfflineQueue {
  private entries = new Map<string, QueueEntry>();
  private completed = new Set<string>();

  enqueue(draft: EventDraft): string {
    const key = idempotencyKey(draft);
    if (!this.completed.has(key) && !this.entries.has(key)) {
      this.entries.set(key, { key, draft, attempts: 0 });
    }
    return key;
  }

  get size(): number {
    return this.entries.size;
  }

  pending(): QueueEntry[] {
    return [...this.entries.values()];
  }

  /** Try every queued draft once. Network failures keep the entry for the
   * next flush; any HTTP response, success or 4xx, settles it. */
  async flush(api: ApiClient): Promise<FlushResult[]> {
    const results: FlushResult[] = [];
    for (const entry of [...this.entries.values()]) {
      entry.attempts += 1;
      try {
        const created = await api.createEvent(entry.draft);
        this.entries.delete(entry.key);
        this.completed.add(entry.key);
        results.push({ key: entry.key, status: "created", eventId: created.event.id });
      } catch (error) {
        if (error instanceof ApiError) {
          // the server answered: retrying identical input cannot succeed
          this.entries.delete(entry.key);
          this.completed.add(entry.key);
          results.push({
            key: entry.key,
            status: "rejected",
            httpStatus: error.status,
            conflicts: error.body.conflicts,
          });
        } else {
          results.push({ key: entry.key, status: "pending" });
        }
      }
    }
    return results;
  }
}
