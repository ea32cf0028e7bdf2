/** Typed client for the local counterfactual engine service.
 *
 * Requests are serialized through a single-slot queue: the UI allows at
 * most one in-flight request, and later submissions wait their turn. */

import type {
  CounterfactualRequest,
  CounterfactualResponse,
  DepthRequest,
  DepthResponse,
  FrameResponse,
  HealthResponse,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

/** SHA-256 of the raw response body, hex-encoded. Works in browsers
 * (WebCrypto) and under node test runners. */
export async function sha256Hex(text: string): Promise<string> {
  const data = new TextEncoder().encode(text);
  const digest = await crypto.subtle.digest("SHA-256", data);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}

export interface Hashed<T> {
  body: T;
  /** Hash of the byte-exact response text, for session replay checks. */
  hash: string;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; text(): Promise<string> }>;

export class ApiClient {
  private queue: Promise<unknown> = Promise.resolve();

  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...a) => fetch(...a),
  ) {}

  /** Chain onto the single-slot queue so requests never overlap. */
  private enqueue<T>(job: () => Promise<T>): Promise<T> {
    const next = this.queue.then(job, job);
    this.queue = next.catch(() => undefined);
    return next;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<Hashed<T>> {
    return this.enqueue(async () => {
      const res = await this.fetchImpl(this.baseUrl + path, {
        method,
        headers: { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
      const text = await res.text();
      if (res.status >= 400) {
        let message = text;
        try {
          message = (JSON.parse(text) as { error?: string }).error ?? text;
        } catch {
          /* non-JSON error body: surface as-is */
        }
        throw new ServiceError(res.status, message);
      }
      return { body: JSON.parse(text) as T, hash: await sha256Hex(text) };
    });
  }

  health(): Promise<Hashed<HealthResponse>> {
    return this.request("GET", "/api/health");
  }

  loadFrameFromClip(clip: number): Promise<Hashed<FrameResponse>> {
    return this.request("POST", "/api/frame", { clip });
  }

  loadFrameFromPng(pngBase64: string): Promise<Hashed<FrameResponse>> {
    return this.request("POST", "/api/frame", { png: pngBase64 });
  }

  counterfactual(
    req: CounterfactualRequest,
  ): Promise<Hashed<CounterfactualResponse>> {
    return this.request("POST", "/api/counterfactual", req);
  }

  depth(req: DepthRequest): Promise<Hashed<DepthResponse>> {
    return this.request("POST", "/api/depth", req);
  }
}
