/** DOM wiring for the operator console. */

import { ConsoleController } from "./controller";
import { buildTree, renderTree } from "./payloadTree";
import { drawAltitudeStrip, drawTopDown } from "./trajectory";
import { ConsoleState, LogEntry } from "./types";

const params = new URLSearchParams(location.search);
const wsUrl = params.get("ws") ?? `ws://${location.hostname || "127.0.0.1"}:41452`;

const el = {
  status: document.getElementById("status")!,
  banner: document.getElementById("banner")!,
  log: document.getElementById("log")!,
  candidate: document.getElementById("candidate")!,
  input: document.getElementById("utterance") as HTMLInputElement,
  send: document.getElementById("send") as HTMLButtonElement,
  topdown: document.getElementById("topdown") as HTMLCanvasElement,
  altitude: document.getElementById("altitude") as HTMLCanvasElement,
  image: document.getElementById("camera") as HTMLImageElement,
  reconnect: document.getElementById("reconnect") as HTMLButtonElement,
};

const controller = new ConsoleController(wsUrl);

function renderLogEntry(entry: LogEntry): HTMLElement {
  const div = document.createElement("div");
  div.className = `entry entry-${entry.kind}`;
  switch (entry.kind) {
    case "user":
      div.textContent = `> ${entry.text}`;
      break;
    case "info":
      div.textContent = entry.text;
      break;
    case "error":
      div.textContent = entry.text;
      break;
    case "executed":
      div.textContent = `${entry.program.split("\n").join("; ")}  [${entry.status}]`;
      break;
    case "payload":
      if (entry.payloadKind === "image") {
        div.textContent = "(image updated in the camera pane)";
      } else {
        div.appendChild(renderTree(buildTree(entry.payloadKind, entry.payload)));
      }
      break;
  }
  return div;
}

function render(state: ConsoleState): void {
  el.status.textContent = state.connection;
  el.status.className = `badge badge-${state.connection}`;
  el.banner.textContent = state.banner ?? "";
  el.reconnect.style.display = state.connection === "disconnected" ? "inline-block" : "none";

  el.log.replaceChildren(...state.log.map(renderLogEntry));
  el.log.scrollTop = el.log.scrollHeight;

  if (state.pending !== null) {
    const card = document.createElement("div");
    card.className = "card";
    const pre = document.createElement("pre");
    pre.textContent = state.pending.program;
    const score = document.createElement("div");
    score.className = "score";
    score.textContent = `score ${state.pending.score.toFixed(3)} (${state.pending.corpus_entry_id})`;
    const execute = document.createElement("button");
    execute.textContent = "Execute";
    execute.addEventListener("click", () => void controller.execute());
    const cancel = document.createElement("button");
    cancel.textContent = "Cancel";
    cancel.className = "secondary";
    cancel.addEventListener("click", () => controller.cancel());
    card.append(pre, score, execute, cancel);
    el.candidate.replaceChildren(card);
  } else if (state.executing !== null) {
    const busy = document.createElement("div");
    busy.className = "card";
    busy.textContent = `executing ${state.executing.taskId ?? "..."}`;
    el.candidate.replaceChildren(busy);
  } else {
    el.candidate.replaceChildren();
  }

  drawTopDown(el.topdown.getContext("2d")!, state.geofence, state.telemetry);
  drawAltitudeStrip(el.altitude.getContext("2d")!, state.telemetry);

  if (state.latestImage !== null) {
    el.image.src = `data:image/png;base64,${state.latestImage.pngBase64}`;
    el.image.style.display = "block";
  }
}

controller.onChange(render);

async function connect(): Promise<void> {
  try {
    await controller.connect();
  } catch {
    // the disconnected badge plus the retry button is the error UI
  }
}

el.send.addEventListener("click", () => {
  const text = el.input.value.trim();
  if (text.length === 0) return;
  el.input.value = "";
  void controller.submitUtterance(text);
});
el.input.addEventListener("keydown", (event) => {
  if (event.key === "Enter") el.send.click();
});
el.reconnect.addEventListener("click", () => void connect());

void connect();
