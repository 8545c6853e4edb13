/** Wire payloads and console state shared across the UI modules. */

export interface Vector3 {
  x_val: number;
  y_val: number;
  z_val: number;
}

export interface TelemetrySample {
  sim_time: number;
  position: Vector3;
  velocity: Vector3;
  yaw: number;
  landed: boolean;
}

export interface GeoFence {
  x_min: number;
  x_max: number;
  y_min: number;
  y_max: number;
  z_min: number;
  z_max: number;
}

export interface ServerInfo {
  serverVersion: number;
  minClientVersion: number;
}

export interface Candidate {
  program: string;
  score: number;
  corpus_entry_id: string;
}

export interface Suggestion {
  id: string;
  pattern: string;
  score: number;
}

export interface TaskOutput {
  index: number;
  kind: string;
  payload: unknown;
}

export type LogEntry =
  | { kind: "user"; text: string }
  | { kind: "info"; text: string }
  | { kind: "error"; text: string }
  | { kind: "executed"; program: string; status: string }
  | { kind: "payload"; payloadKind: string; payload: unknown };

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

/** Everything the console shows is derived from this state, and the state
 * itself is a pure function of the event log (see reducer.ts). */
export interface ConsoleState {
  connection: ConnectionStatus;
  banner: string | null;
  serverInfo: ServerInfo | null;
  geofence: GeoFence | null;
  /** at most one candidate awaits confirmation at any time */
  pending: Candidate | null;
  executing: { program: string; taskId: string | null } | null;
  telemetry: TelemetrySample[]; // ring buffer, ordered by sim_time
  log: LogEntry[];
  latestImage: { pngBase64: string; metadata: unknown } | null;
}

export const TELEMETRY_CAPACITY = 3000;

export type ConsoleEvent =
  | { type: "socket.connecting" }
  | { type: "socket.open"; info: ServerInfo }
  | { type: "socket.closed" }
  | { type: "config"; geofence: GeoFence }
  | { type: "telemetry"; sample: TelemetrySample }
  | { type: "user.utterance"; text: string }
  | { type: "translation.candidates"; candidates: Candidate[] }
  | {
      type: "translation.none";
      bestScore: number;
      suggestions: Suggestion[];
    }
  | { type: "user.execute" }
  | { type: "user.cancel" }
  | { type: "task.started"; taskId: string }
  | { type: "task.finished"; status: string; outputs: TaskOutput[] }
  | { type: "query.result"; kind: string; payload: unknown }
  | { type: "error"; message: string };

export function initialState(): ConsoleState {
  return {
    connection: "connecting",
    banner: null,
    serverInfo: null,
    geofence: null,
    pending: null,
    executing: null,
    telemetry: [],
    log: [],
    latestImage: null,
  };
}
