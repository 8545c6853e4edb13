/** Pure state transition: ConsoleState × ConsoleEvent → ConsoleState.
 *
 * All UI state flows through here so a recorded event log can be replayed
 * in tests and must reproduce the exact same state.  No I/O, no clocks.
 */

import {
  Candidate,
  ConsoleEvent,
  ConsoleState,
  LogEntry,
  TELEMETRY_CAPACITY,
  TelemetrySample,
} from "./types";

function appendLog(state: ConsoleState, entry: LogEntry): ConsoleState {
  return { ...state, log: [...state.log, entry] };
}

function pushTelemetry(
  buffer: TelemetrySample[],
  sample: TelemetrySample,
): TelemetrySample[] {
  // samples arrive ordered by sim_time; drop stale duplicates defensively
  if (buffer.length > 0 && sample.sim_time < buffer[buffer.length - 1].sim_time) {
    return buffer;
  }
  const next = [...buffer, sample];
  return next.length > TELEMETRY_CAPACITY
    ? next.slice(next.length - TELEMETRY_CAPACITY)
    : next;
}

function bannerFor(info: { serverVersion: number; minClientVersion: number }): string {
  const clientVersion = 1;
  const minServer = 1;
  return (
    `Client Ver:${clientVersion} (Min Req: ${info.minClientVersion}), ` +
    `Server Ver:${info.serverVersion} (Min Req: ${minServer})`
  );
}

export function reduce(state: ConsoleState, event: ConsoleEvent): ConsoleState {
  switch (event.type) {
    case "socket.connecting":
      return { ...state, connection: "connecting" };

    case "socket.open":
      return appendLog(
        { ...state, connection: "connected", serverInfo: event.info, banner: bannerFor(event.info) },
        { kind: "info", text: "Connected!" },
      );

    case "socket.closed":
      return { ...state, connection: "disconnected", pending: null, executing: null };

    case "config":
      return { ...state, geofence: event.geofence };

    case "telemetry":
      return { ...state, telemetry: pushTelemetry(state.telemetry, event.sample) };

    case "user.utterance":
      return appendLog(state, { kind: "user", text: event.text });

    case "translation.candidates": {
      const top: Candidate | null = event.candidates[0] ?? null;
      return { ...state, pending: top };
    }

    case "translation.none": {
      const hints = event.suggestions.map((s) => s.pattern).join(" | ");
      return appendLog(
        { ...state, pending: null },
        {
          kind: "error",
          text: `No confident translation (best score ${event.bestScore.toFixed(2)}). Did you mean: ${hints}`,
        },
      );
    }

    case "user.execute": {
      if (state.pending === null) return state;
      // what executes is exactly the displayed candidate, nothing else
      return {
        ...state,
        pending: null,
        executing: { program: state.pending.program, taskId: null },
      };
    }

    case "user.cancel":
      return { ...state, pending: null };

    case "task.started":
      return state.executing === null
        ? state
        : { ...state, executing: { ...state.executing, taskId: event.taskId } };

    case "task.finished": {
      let next = state;
      for (const output of event.outputs) {
        next = applyOutput(next, output.kind, output.payload);
      }
      const program = state.executing?.program ?? "";
      return appendLog(
        { ...next, executing: null },
        { kind: "executed", program, status: event.status },
      );
    }

    case "query.result": {
      const program = state.executing?.program ?? "";
      const applied = applyOutput(state, event.kind, event.payload);
      return appendLog(
        { ...applied, executing: null },
        { kind: "executed", program, status: "completed" },
      );
    }

    case "error":
      return appendLog({ ...state, executing: null }, { kind: "error", text: event.message });
  }
}

function applyOutput(state: ConsoleState, kind: string, payload: unknown): ConsoleState {
  if (kind === "image") {
    const image = payload as { png_base64: string; metadata: unknown };
    return appendLog(
      { ...state, latestImage: { pngBase64: image.png_base64, metadata: image.metadata } },
      { kind: "payload", payloadKind: kind, payload },
    );
  }
  return appendLog(state, { kind: "payload", payloadKind: kind, payload });
}

export function replay(events: ConsoleEvent[], start: ConsoleState): ConsoleState {
  return events.reduce(reduce, start);
}
