/** Submission flow: send the pending prompt to the service, append the
 * result to the history, and keep the prompt intact on failure so the
 * user can fix it in place. */

import { ApiClient, ServiceError } from "./api.js";
import { PromptCanvasState } from "./state.js";
import type { DepthRequest, HistoryEntry } from "./types.js";

/** POST the current prompt to /api/counterfactual and record it. */
export async function submitPrompt(
  state: PromptCanvasState,
  client: ApiClient,
): Promise<HistoryEntry> {
  const request = state.toRequest();
  if (request.moves.length === 0 && request.stops.length === 0) {
    throw new Error("prompt needs at least one move or stop");
  }
  try {
    const { body, hash } = await client.counterfactual(request);
    const entry: HistoryEntry = {
      kind: "counterfactual",
      request,
      response: body,
      responseHash: hash,
    };
    state.appendHistory(entry);
    state.lastError = null;
    return entry;
  } catch (err) {
    // surface service errors inline; the pending prompt stays editable
    if (err instanceof ServiceError) {
      state.lastError = `${err.status}: ${err.message}`;
    }
    throw err;
  }
}

/** POST a camera-motion prompt to /api/depth and record it. */
export async function submitDepth(
  state: PromptCanvasState,
  client: ApiClient,
  rho: [number, number],
): Promise<HistoryEntry> {
  if (state.frameId === null) throw new Error("no frame loaded");
  const request: DepthRequest = { frame_id: state.frameId, rho };
  try {
    const { body, hash } = await client.depth(request);
    const entry: HistoryEntry = {
      kind: "depth",
      request,
      response: body,
      responseHash: hash,
    };
    state.appendHistory(entry);
    state.lastError = null;
    return entry;
  } catch (err) {
    if (err instanceof ServiceError) {
      state.lastError = `${err.status}: ${err.message}`;
    }
    throw err;
  }
}
