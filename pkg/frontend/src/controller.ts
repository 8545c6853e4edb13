/** Orchestrates the wire client against the pure reducer.
 *
 * All mutations go through dispatch(), so the controller works headless
 * (tests drive it against a real server with a node WebSocket) and the DOM
 * layer is only a render callback.
 */

import { reduce } from "./reducer";
import {
  Candidate,
  ConsoleEvent,
  ConsoleState,
  GeoFence,
  ServerInfo,
  Suggestion,
  TaskOutput,
  TelemetrySample,
  initialState,
} from "./types";
import { SocketFactory, WireClient, WireError } from "./wireClient";

export const TELEMETRY_HZ = 10;

export class ConsoleController {
  state: ConsoleState = initialState();
  private client: WireClient | null = null;
  private listeners: Array<(state: ConsoleState) => void> = [];

  constructor(
    private url: string,
    private socketFactory?: SocketFactory,
  ) {}

  onChange(listener: (state: ConsoleState) => void): void {
    this.listeners.push(listener);
  }

  dispatch(event: ConsoleEvent): void {
    this.state = reduce(this.state, event);
    for (const listener of this.listeners) listener(this.state);
  }

  async connect(): Promise<void> {
    this.dispatch({ type: "socket.connecting" });
    const client = new WireClient(this.url, this.socketFactory);
    client.onClose(() => this.dispatch({ type: "socket.closed" }));
    client.onEvent((channel, payload) => {
      if (channel === "telemetry") {
        this.dispatch({ type: "telemetry", sample: payload as TelemetrySample });
      }
    });
    try {
      await client.ready();
      const ping = (await client.call("ping")) as {
        server_version: number;
        min_client_version: number;
      };
      const info: ServerInfo = {
        serverVersion: ping.server_version,
        minClientVersion: ping.min_client_version,
      };
      this.client = client;
      this.dispatch({ type: "socket.open", info });
      const config = (await client.call("config.get")) as {
        envelope: { geofence: GeoFence };
      };
      this.dispatch({ type: "config", geofence: config.envelope.geofence });
      await client.call("telemetry.subscribe", { hz: TELEMETRY_HZ });
    } catch (error) {
      this.dispatch({ type: "socket.closed" });
      throw error;
    }
  }

  disconnect(): void {
    this.client?.close();
    this.client = null;
  }

  /** Translate on the server; the top candidate becomes the pending card. */
  async submitUtterance(text: string): Promise<void> {
    if (this.client === null) return;
    this.dispatch({ type: "user.utterance", text });
    try {
      const result = (await this.client.call("translate", { utterance: text })) as {
        candidates: Candidate[];
        best_score?: number;
        suggestions?: Suggestion[];
      };
      if (result.candidates.length === 0) {
        this.dispatch({
          type: "translation.none",
          bestScore: result.best_score ?? 0,
          suggestions: result.suggestions ?? [],
        });
      } else {
        this.dispatch({ type: "translation.candidates", candidates: result.candidates });
      }
    } catch (error) {
      this.dispatch({ type: "error", message: String(error) });
    }
  }

  /** Execute exactly the program shown on the pending card, nothing else. */
  async execute(): Promise<void> {
    const pending = this.state.pending;
    if (this.client === null || pending === null) return;
    this.dispatch({ type: "user.execute" });
    const program = this.state.executing?.program ?? pending.program;
    try {
      const submitted = (await this.client.call("command.submit", { program })) as {
        task_id?: string;
        result?: { kind: string; payload: unknown };
      };
      if (submitted.task_id !== undefined) {
        this.dispatch({ type: "task.started", taskId: submitted.task_id });
        const joined = (await this.client.call("task.join", {
          task_id: submitted.task_id,
        })) as { status: string; outputs: TaskOutput[] };
        this.dispatch({
          type: "task.finished",
          status: joined.status,
          outputs: joined.outputs,
        });
      } else if (submitted.result !== undefined) {
        this.dispatch({
          type: "query.result",
          kind: submitted.result.kind,
          payload: submitted.result.payload,
        });
      }
    } catch (error) {
      const message = error instanceof WireError ? error.message : String(error);
      this.dispatch({ type: "error", message });
    }
  }

  cancel(): void {
    this.dispatch({ type: "user.cancel" });
  }
}
