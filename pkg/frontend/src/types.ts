/** Wire types mirroring the service's documented WebSocket contracts. */

export interface TrueState {
  main_volume_l: number;
  secondary_volume_l: number;
  recovery_volume_l: number;
  pump1_on: boolean;
  pump2_on: boolean;
  pump1_valve_open: boolean;
  pump2_valve_open: boolean;
  drain_main_open: boolean;
  drain_secondary_open: boolean;
  true_ultrasound_step: number;
  true_bits: number[];
}

export interface TelemetryPayload {
  t_s: number;
  scenario: string;
  policy: string;
  true_state: TrueState;
  sensed: { bits: number[]; ultrasound_step: number };
  /** registers the poller recorded this tick; stale under DoS, null in gap mode */
  registers: number[] | null;
}

export interface Prediction {
  label: string;
  probability: number;
}

export interface AlertPayload {
  event_seq: number;
  timestamp: string;
  t_s: number;
  policy: string;
  predictions: Prediction[];
  affected_component: string;
  is_anomaly: boolean;
}

export interface AckPayload {
  request_id: string | null;
  ok: boolean;
  reason?: string;
  result?: Record<string, unknown>;
}

export type ServerMessage =
  | { type: "telemetry"; seq: number; payload: TelemetryPayload }
  | { type: "alert"; seq: number; payload: AlertPayload }
  | { type: "ack"; seq: number; payload: AckPayload };

/** Operator commands, exactly as the service accepts them. */
export type MitigationName =
  | "stop_pump1"
  | "stop_pump2"
  | "start_pump"
  | "open_valve"
  | "close_valve"
  | "clear_scenario"
  | "reset_sensor";

export interface MitigateAction {
  action: MitigationName;
  target?: string;
}

export type ClientMessage =
  | { type: "inject"; request_id: string; payload: { scenario: string } }
  | { type: "mitigate"; request_id: string; payload: MitigateAction }
  | { type: "set_policy"; request_id: string; payload: { policy: string; tau?: number } };

/** The actuator (or injector) a mitigation touches; one pending action each. */
export function actuatorOf(action: MitigateAction): string {
  switch (action.action) {
    case "stop_pump1":
      return "pump1";
    case "stop_pump2":
      return "pump2";
    case "start_pump":
      return action.target === "2" ? "pump2" : "pump1";
    case "open_valve":
    case "close_valve":
      return `valve:${action.target ?? "?"}`;
    case "clear_scenario":
    case "reset_sensor":
      return "injector";
  }
}

export const SCENARIOS = [
  "normal",
  "plastic_bag",
  "blocked_measure_1",
  "blocked_measure_2",
  "floating_2_objects",
  "floating_7_objects",
  "humidity",
  "discrete_sensor_1_failure",
  "discrete_sensor_2_failure",
  "dos",
  "spoofing",
  "wrong_connection",
  "hit_low",
  "hit_medium",
  "hit_high",
] as const;

export const POLICIES = ["top1", "top2", "confidence:0.75", "confidence:0.85"] as const;
