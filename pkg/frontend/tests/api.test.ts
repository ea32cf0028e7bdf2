import { describe, expect, it } from "vitest";

import { ApiClient, ServiceError, sha256Hex } from "../src/api.js";
import type { FetchLike } from "../src/api.js";

function mockService(
  handler: (url: string, body: unknown) => { status: number; text: string },
  log?: { inFlight: number; maxInFlight: number },
): FetchLike {
  return async (url, init) => {
    if (log) {
      log.inFlight += 1;
      log.maxInFlight = Math.max(log.maxInFlight, log.inFlight);
    }
    await new Promise((r) => setTimeout(r, 5));
    const body = init?.body ? JSON.parse(init.body) : undefined;
    const res = handler(url, body);
    if (log) log.inFlight -= 1;
    return { status: res.status, text: async () => res.text };
  };
}

describe("ApiClient", () => {
  it("hashes the byte-exact response text", async () => {
    const text = '{"version":"0.1.0"}';
    const client = new ApiClient(
      "http://x",
      mockService(() => ({ status: 200, text })),
    );
    const res = await client.health();
    expect(res.body.version).toBe("0.1.0");
    expect(res.hash).toBe(await sha256Hex(text));
  });

  it("raises ServiceError with the server message on 4xx", async () => {
    const client = new ApiClient(
      "http://x",
      mockService(() => ({
        status: 422,
        text: '{"error":"degenerate prompt: no moves and no stops"}',
      })),
    );
    await expect(
      client.counterfactual({
        frame_id: "f",
        moves: [],
        stops: [],
        head_motion: null,
      }),
    ).rejects.toMatchObject({
      name: "ServiceError",
      status: 422,
      message: "degenerate prompt: no moves and no stops",
    });
  });

  it("allows at most one request in flight; later calls queue", async () => {
    const log = { inFlight: 0, maxInFlight: 0 };
    const client = new ApiClient(
      "http://x",
      mockService(() => ({ status: 200, text: "{}" }), log),
    );
    await Promise.all([
      client.health(),
      client.health(),
      client.health(),
    ]);
    expect(log.maxInFlight).toBe(1);
  });

  it("keeps the queue alive after a failed request", async () => {
    let calls = 0;
    const client = new ApiClient(
      "http://x",
      mockService(() => ({
        status: ++calls === 1 ? 500 : 200,
        text: calls === 1 ? '{"error":"boom"}' : '{"version":"v"}',
      })),
    );
    await expect(client.health()).rejects.toBeInstanceOf(ServiceError);
    const res = await client.health();
    expect(res.body.version).toBe("v");
  });

  it("sends JSON bodies to the right endpoints", async () => {
    const seen: { url: string; body: unknown }[] = [];
    const client = new ApiClient(
      "http://svc",
      mockService((url, body) => {
        seen.push({ url, body });
        return { status: 200, text: "{}" };
      }),
    );
    await client.loadFrameFromClip(3);
    await client.depth({ frame_id: "f", rho: [0, 1] });
    expect(seen).toEqual([
      { url: "http://svc/api/frame", body: { clip: 3 } },
      { url: "http://svc/api/depth", body: { frame_id: "f", rho: [0, 1] } },
    ]);
  });
});
