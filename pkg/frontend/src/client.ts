/**
 * Thin typed client for the opengo gateway.
 *
 * Uses only the public endpoints: POST /message, GET /state,
 * GET /plans/{id}, POST /estop and WS /stream.  The WebSocket constructor
 * is injectable so Node test runs can supply the `ws` package while
 * browsers use the native implementation.
 */

import type {
  PlanLookupReply,
  StateSnapshot,
  SubmitReply,
  UpdateEntry,
} from "./types.js";

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => WebSocketLike;

export interface GatewayClientOptions {
  fetchFn?: typeof fetch;
  socketFactory?: SocketFactory;
}

export class GatewayError extends Error {
  constructor(
    message: string,
    readonly status?: number,
  ) {
    super(message);
    this.name = "GatewayError";
  }
}

export interface StreamHandle {
  close(): void;
}

export interface StreamOptions {
  /** Called with true when the socket is up, false when it drops. */
  onStatus?: (connected: boolean) => void;
  /** Reconnect automatically with the last delivered cursor (default true). */
  reconnect?: boolean;
}

function defaultSocketFactory(url: string): WebSocketLike {
  return new WebSocket(url) as unknown as WebSocketLike;
}

export class GatewayClient {
  private readonly fetchFn: typeof fetch;
  private readonly socketFactory: SocketFactory;

  constructor(
    readonly baseUrl: string,
    options: GatewayClientOptions = {},
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    const fetchFn = options.fetchFn ?? fetch;
    this.fetchFn = (...args) => fetchFn(...args);
    this.socketFactory = options.socketFactory ?? defaultSocketFactory;
  }

  // -- REST ------------------------------------------------------------------

  async sendMessage(text: string, corrId?: string): Promise<SubmitReply> {
    const corr_id = corrId ?? freshCorrId();
    return this.request<SubmitReply>("POST", "/message", { text, corr_id });
  }

  async getState(): Promise<StateSnapshot> {
    return this.request<StateSnapshot>("GET", "/state");
  }

  async getPlan(planId: string): Promise<PlanLookupReply> {
    return this.request<PlanLookupReply>("GET", `/plans/${planId}`);
  }

  async estop(): Promise<{ ok: boolean; estop: boolean }> {
    return this.request<{ ok: boolean; estop: boolean }>("POST", "/estop");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (cause) {
      throw new GatewayError(`gateway unreachable at ${this.baseUrl}: ${String(cause)}`);
    }
    if (!response.ok) {
      const text = await response.text().catch(() => "");
      throw new GatewayError(`${method} ${path} → ${response.status} ${text}`, response.status);
    }
    return (await response.json()) as T;
  }

  // -- stream ------------------------------------------------------------------

  /**
   * Open the update stream from `cursor`, delivering each entry in order.
   * On disconnect the stream reopens with the cursor of the last entry it
   * delivered, so redeliveries overlap instead of skipping.
   */
  openStream(
    cursor: number,
    onEntry: (entry: UpdateEntry) => void,
    options: StreamOptions = {},
  ): StreamHandle {
    const reconnect = options.reconnect ?? true;
    let lastCursor = cursor;
    let closed = false;
    let socket: WebSocketLike | null = null;
    let retryMs = 250;
    let timer: ReturnType<typeof setTimeout> | null = null;

    const wsBase = this.baseUrl.replace(/^http/, "ws");

    const open = (): void => {
      if (closed) {
        return;
      }
      socket = this.socketFactory(`${wsBase}/stream?cursor=${lastCursor}`);
      socket.onopen = () => {
        retryMs = 250;
        options.onStatus?.(true);
      };
      socket.onmessage = (ev) => {
        const entry = JSON.parse(String(ev.data)) as UpdateEntry;
        lastCursor = Math.max(lastCursor, entry.seq);
        onEntry(entry);
      };
      socket.onerror = () => {
        // onclose follows; reconnect is handled there.
      };
      socket.onclose = () => {
        options.onStatus?.(false);
        if (!closed && reconnect) {
          timer = setTimeout(open, retryMs);
          retryMs = Math.min(retryMs * 2, 4000);
        }
      };
    };

    open();
    return {
      close(): void {
        closed = true;
        if (timer !== null) {
          clearTimeout(timer);
        }
        socket?.close();
      },
    };
  }
}

function freshCorrId(): string {
  if (typeof crypto !== "undefined" && "randomUUID" in crypto) {
    return crypto.randomUUID().replaceAll("-", "").slice(0, 12);
  }
  return Math.random().toString(36).slice(2, 14);
}
