/** Console state as a pure function of the event log.
 *
 * Every input -- server messages, action submissions, timeouts, connection
 * changes -- arrives as an event carrying its own timestamp, so replaying a
 * recorded log reproduces the exact same state. Nothing here reads clocks,
 * sockets, or the DOM.
 */
import type {
  AlertPayload,
  ClientMessage,
  MitigateAction,
  ServerMessage,
  TelemetryPayload,
} from "./types.js";
import { actuatorOf } from "./types.js";

export const ALERT_FEED_LIMIT = 50;
export const DEPTH_HISTORY_LIMIT = 120;
export const RATE_LAG = 10;
/** sensed vs true ultrasound gap that counts as divergence (steps) */
export const DIVERGENCE_STEPS = 150;

export interface PendingAction {
  requestId: string;
  actuator: string;
  action: MitigateAction;
  sentAt: number;
  /** set when the ack never came; the UI offers a retry */
  timedOut: boolean;
}

export interface ConsoleState {
  connected: boolean;
  lastSeq: number;
  telemetry: TelemetryPayload | null;
  alerts: AlertPayload[]; // newest last, ordered by seq
  /** local policy selection (optimistic label); the active one is telemetry.policy */
  selectedPolicy: string;
  pendingPolicyRequest: string | null;
  pending: PendingAction[];
  depthHistory: number[]; // sensed ultrasound, newest last
  rate: number | null; // difference quotient over RATE_LAG frames
  divergence: boolean;
  errors: string[]; // toast texts, newest last
  acksSeen: number;
}

export type ConsoleEvent =
  | { kind: "connected" }
  | { kind: "disconnected" }
  | { kind: "server"; message: unknown }
  | { kind: "action_sent"; message: ClientMessage; at: number }
  | { kind: "action_timeout"; requestId: string; at: number }
  | { kind: "dismiss_errors" };

export function initialState(): ConsoleState {
  return {
    connected: false,
    lastSeq: 0,
    telemetry: null,
    alerts: [],
    selectedPolicy: "top2",
    pendingPolicyRequest: null,
    pending: [],
    depthHistory: [],
    rate: null,
    divergence: false,
    errors: [],
    acksSeen: 0,
  };
}

function isServerMessage(value: unknown): value is ServerMessage {
  if (typeof value !== "object" || value === null) return false;
  const m = value as Record<string, unknown>;
  return (
    (m.type === "telemetry" || m.type === "alert" || m.type === "ack") &&
    typeof m.seq === "number" &&
    typeof m.payload === "object" &&
    m.payload !== null
  );
}

function pushError(state: ConsoleState, text: string): ConsoleState {
  return { ...state, errors: [...state.errors.slice(-9), text] };
}

function applyTelemetry(state: ConsoleState, payload: TelemetryPayload): ConsoleState {
  const depth = payload.sensed.ultrasound_step;
  const history = [...state.depthHistory.slice(-(DEPTH_HISTORY_LIMIT - 1)), depth];
  let rate: number | null = null;
  if (history.length > RATE_LAG) {
    const past = history[history.length - 1 - RATE_LAG]!;
    rate = (depth - past) / (RATE_LAG * 0.1);
  }
  const divergence =
    Math.abs(depth - payload.true_state.true_ultrasound_step) > DIVERGENCE_STEPS ||
    payload.sensed.bits.join() !== payload.true_state.true_bits.join();
  return { ...state, telemetry: payload, depthHistory: history, rate, divergence };
}

function applyAck(state: ConsoleState, payload: ServerMessage["payload"]): ConsoleState {
  const ack = payload as { request_id?: string | null; ok?: boolean; reason?: string; result?: Record<string, unknown> };
  let next: ConsoleState = { ...state, acksSeen: state.acksSeen + 1 };
  const requestId = ack.request_id ?? null;
  if (requestId !== null) {
    next = { ...next, pending: next.pending.filter((p) => p.requestId !== requestId) };
    if (next.pendingPolicyRequest === requestId) {
      next = { ...next, pendingPolicyRequest: null };
      if (ack.ok && ack.result && typeof ack.result.policy === "string") {
        next = { ...next, selectedPolicy: ack.result.policy };
      }
    }
  }
  if (!ack.ok) {
    next = pushError(next, `action rejected: ${ack.reason ?? "unknown reason"}`);
  }
  return next;
}

export function reduce(state: ConsoleState, event: ConsoleEvent): ConsoleState {
  switch (event.kind) {
    case "connected":
      return { ...state, connected: true };
    case "disconnected":
      return { ...state, connected: false };
    case "dismiss_errors":
      return { ...state, errors: [] };

    case "action_sent": {
      const message = event.message;
      if (message.type === "set_policy") {
        const label =
          message.payload.policy === "confidence"
            ? `confidence:${message.payload.tau}`
            : message.payload.policy;
        // last write wins: any earlier un-acked switch is superseded
        return { ...state, pendingPolicyRequest: message.request_id, selectedPolicy: label };
      }
      if (message.type === "inject") {
        return state; // nothing optimistic to show; telemetry reports the scenario
      }
      const actuator = actuatorOf(message.payload);
      if (state.pending.some((p) => p.actuator === actuator && !p.timedOut)) {
        return pushError(state, `action already pending for ${actuator}`);
      }
      const entry: PendingAction = {
        requestId: message.request_id,
        actuator,
        action: message.payload,
        sentAt: event.at,
        timedOut: false,
      };
      return {
        ...state,
        pending: [...state.pending.filter((p) => p.actuator !== actuator), entry],
      };
    }

    case "action_timeout": {
      if (state.pendingPolicyRequest === event.requestId) {
        return pushError({ ...state, pendingPolicyRequest: null },
                         "policy switch timed out; retry?");
      }
      const pending = state.pending.map((p) =>
        p.requestId === event.requestId ? { ...p, timedOut: true } : p,
      );
      if (pending.every((p, i) => p === state.pending[i])) return state;
      return pushError({ ...state, pending }, "action timed out; retry?");
    }

    case "server": {
      if (!isServerMessage(event.message)) {
        return pushError(state, "malformed server message ignored");
      }
      const message = event.message;
      if (message.seq <= state.lastSeq) {
        return state; // duplicate or out-of-order replay
      }
      const next = { ...state, lastSeq: message.seq };
      if (message.type === "telemetry") {
        return applyTelemetry(next, message.payload);
      }
      if (message.type === "alert") {
        const alerts = [...next.alerts.slice(-(ALERT_FEED_LIMIT - 1)), message.payload];
        return { ...next, alerts };
      }
      return applyAck(next, message.payload);
    }
  }
}

export function replay(events: ConsoleEvent[], start?: ConsoleState): ConsoleState {
  return events.reduce(reduce, start ?? initialState());
}

/** Alert cards the operator should see: anomalous reports, newest first. */
export function visibleAlerts(state: ConsoleState): AlertPayload[] {
  return state.alerts.filter((a) => a.is_anomaly).slice().reverse();
}
