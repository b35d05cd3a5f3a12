/** Check-in scanning flow: takes decoded QR text (or a manual paste when
 * the camera is unavailable) and reports one of three distinct outcomes. */

import { ApiClient, ApiError } from "./api.js";
import type { ScanOutcome } from "./render.js";

export async function submitScan(
  api: ApiClient,
  eventId: string,
  tokenText: string,
): Promise<ScanOutcome> {
  try {
    const result = await api.checkin(eventId, tokenText.trim());
    return result.duplicate
      ? { kind: "duplicate", personId: result.record.person_id }
      : { kind: "accepted", personId: result.record.person_id };
  } catch (error) {
    if (error instanceof ApiError) {
      return { kind: "rejected", reason: error.body.error };
    }
    throw error;
  }
}
