/** One WebSocket to the service: dispatch events in, send actions out.
 *
 * Reconnects with resume-from-seq so a dropped connection replays exactly the
 * backlog the reducer has not seen. Ack timeouts surface as events too; the
 * reducer stays the single source of truth.
 */
import type { ConsoleEvent } from "./state.js";
import type { ClientMessage } from "./types.js";

export const ACK_TIMEOUT_MS = 3000;

export interface Connection {
  send(message: ClientMessage): void;
  close(): void;
}

interface SocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  send(data: string): void;
  close(): void;
}

export interface ConnectOptions {
  url: string;
  dispatch(event: ConsoleEvent): void;
  lastSeq(): number;
  makeSocket?(url: string): SocketLike;
  now?(): number;
  setTimer?(fn: () => void, ms: number): unknown;
  reconnectDelayMs?: number;
}

export function connect(options: ConnectOptions): Connection {
  const makeSocket = options.makeSocket ?? ((url: string) => new WebSocket(url) as unknown as SocketLike);
  const now = options.now ?? (() => Date.now());
  const setTimer = options.setTimer ?? ((fn: () => void, ms: number) => setTimeout(fn, ms));
  let socket: SocketLike | null = null;
  let closed = false;

  function open(): void {
    if (closed) return;
    const since = options.lastSeq();
    const url = since > 0 ? `${options.url}?since=${since}` : options.url;
    socket = makeSocket(url);
    socket.onopen = () => options.dispatch({ kind: "connected" });
    socket.onclose = () => {
      options.dispatch({ kind: "disconnected" });
      if (!closed) setTimer(open, options.reconnectDelayMs ?? 1000);
    };
    socket.onmessage = (ev) => {
      let parsed: unknown;
      try {
        parsed = JSON.parse(String(ev.data));
      } catch {
        parsed = { malformed: true };
      }
      options.dispatch({ kind: "server", message: parsed });
    };
  }

  open();
  return {
    send(message: ClientMessage): void {
      options.dispatch({ kind: "action_sent", message, at: now() });
      try {
        socket?.send(JSON.stringify(message));
      } catch {
        options.dispatch({ kind: "action_timeout", requestId: message.request_id, at: now() });
        return;
      }
      setTimer(() => {
        options.dispatch({ kind: "action_timeout", requestId: message.request_id, at: now() });
      }, ACK_TIMEOUT_MS);
    },
    close(): void {
      closed = true;
      socket?.close();
    },
  };
}

let counter = 0;

export function requestId(prefix = "op"): string {
  counter += 1;
  return `${prefix}-${counter}`;
}
