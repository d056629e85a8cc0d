// Thin fetch wrapper around the session API. Every call returns the parsed
// JSON or throws ServiceError carrying the server's reason code, so the UI
// can surface rejections inline.

import type {
  ActReply,
  ApiError,
  CreateReply,
  JoinReply,
  LegalTargets,
  SeatView,
} from "./types.js";

export class ServiceError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.code = code;
    this.status = status;
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await response.json();
  if (!response.ok) {
    const err = body as ApiError;
    const code = err?.error?.code ?? "UNKNOWN";
    const message = err?.error?.message ?? response.statusText;
    throw new ServiceError(code, message, response.status);
  }
  return body as T;
}

export interface CreateOptions {
  variant?: string;
  players?: number;
  seats?: string[];
  seed?: number;
  casualMemory?: boolean;
}

export class SessionApi {
  constructor(readonly base: string = "") {}

  createSession(options: CreateOptions = {}): Promise<CreateReply> {
    const payload: Record<string, unknown> = {};
    if (options.variant || options.players) {
      payload.config = { variant: options.variant ?? "3x3", players: options.players ?? 2 };
    }
    if (options.seats) payload.seats = options.seats;
    if (options.seed !== undefined) payload.seed = options.seed;
    if (options.casualMemory !== undefined) payload.casual_memory = options.casualMemory;
    return request<CreateReply>(`${this.base}/sessions`, {
      method: "POST",
      body: JSON.stringify(payload),
    });
  }

  join(session: string, seat?: number): Promise<JoinReply> {
    return request<JoinReply>(`${this.base}/sessions/${session}/join`, {
      method: "POST",
      body: JSON.stringify(seat === undefined ? {} : { seat }),
    });
  }

  view(session: string, seat: number, token: string): Promise<SeatView> {
    const q = `seat=${seat}&token=${encodeURIComponent(token)}`;
    return request<SeatView>(`${this.base}/sessions/${session}/view?${q}`);
  }

  legalTargets(session: string, seat: number, token: string): Promise<LegalTargets> {
    const q = `seat=${seat}&token=${encodeURIComponent(token)}`;
    return request<LegalTargets>(`${this.base}/sessions/${session}/legal_targets?${q}`);
  }

  act(
    session: string,
    seat: number,
    token: string,
    index: number,
    version?: number,
  ): Promise<ActReply> {
    const payload: Record<string, unknown> = { seat, token, index };
    if (version !== undefined) payload.version = version;
    return request<ActReply>(`${this.base}/sessions/${session}/actions`, {
      method: "POST",
      body: JSON.stringify(payload),
    });
  }

  record(session: string): Promise<Record<string, unknown>> {
    return request<Record<string, unknown>>(`${this.base}/sessions/${session}/record`);
  }

  socketUrl(session: string, seat: number, token: string): string {
    const base = this.base || window.location.origin;
    const ws = base.replace(/^http/, "ws");
    return `${ws}/sessions/${session}/ws?seat=${seat}&token=${encodeURIComponent(token)}`;
  }
}
