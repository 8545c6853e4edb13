/**
 * End-to-end acceptance: the headless console controller against a real
 * simulator server (spawned as a subprocess, infinite sim speed).
 */

import { ChildProcess, spawn } from "node:child_process";
import { createServer } from "node:net";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { ConsoleController } from "../src/controller";
import { WireClient } from "../src/wireClient";
import { fenceRect, fenceViewport, project } from "../src/trajectory";
import { buildTree } from "../src/payloadTree";

const wsFactory = (url: string) => new WebSocket(url) as never;

async function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const port = (probe.address() as { port: number }).port;
      probe.close(() => resolve(port));
    });
  });
}

async function waitForServer(url: string, timeoutMs = 15000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    const ok = await new Promise<boolean>((resolve) => {
      const socket = new WebSocket(url);
      socket.once("open", () => {
        socket.close();
        resolve(true);
      });
      socket.once("error", () => resolve(false));
    });
    if (ok) return;
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error(`server at ${url} did not come up`);
}

let serverProcess: ChildProcess;
let wsUrl: string;

beforeAll(async () => {
  const tcpPort = await freePort();
  const wsPort = await freePort();
  wsUrl = `ws://127.0.0.1:${wsPort}`;
  serverProcess = spawn(
    "python3",
    [
      "-m",
      "aerocmd.cli",
      "serve",
      "--host",
      "127.0.0.1",
      "--tcp-port",
      String(tcpPort),
      "--ws-port",
      String(wsPort),
      "--sim-speed",
      "inf",
    ],
    { stdio: "ignore" },
  );
  await waitForServer(wsUrl);
}, 30000);

afterAll(() => {
  serverProcess?.kill();
});

async function resetSim(): Promise<void> {
  const client = new WireClient(wsUrl, wsFactory);
  await client.ready();
  await client.call("sim.reset");
  client.close();
}

async function requestLog(): Promise<Array<{ connection: number; method: string }>> {
  const client = new WireClient(wsUrl, wsFactory);
  await client.ready();
  const result = (await client.call("debug.request_log")) as {
    requests: Array<{ connection: number; method: string }>;
  };
  client.close();
  return result.requests;
}

describe("console acceptance", () => {
  it("shows the ping versions in the connect banner", async () => {
    await resetSim();
    const controller = new ConsoleController(wsUrl, wsFactory);
    await controller.connect();
    expect(controller.state.connection).toBe("connected");
    expect(controller.state.banner).toBe(
      "Client Ver:1 (Min Req: 1), Server Ver:1 (Min Req: 1)",
    );
    expect(controller.state.geofence).not.toBeNull();
    controller.disconnect();
  });

  it("server down shows a disconnected badge without uncaught failures", async () => {
    const deadPort = await freePort();
    const controller = new ConsoleController(`ws://127.0.0.1:${deadPort}`, wsFactory);
    await expect(controller.connect()).rejects.toThrow();
    expect(controller.state.connection).toBe("disconnected");
  });

  it("gps flow: translate, confirm, payload tree within 500 ms", async () => {
    await resetSim();
    const controller = new ConsoleController(wsUrl, wsFactory);
    await controller.connect();

    const started = Date.now();
    await controller.submitUtterance("Get the drone's GPS data");
    expect(controller.state.pending?.program).toBe("getGpsData()");
    await controller.execute();
    const elapsedMs = Date.now() - started;
    expect(elapsedMs).toBeLessThan(500);

    const payloadEntry = controller.state.log.find((e) => e.kind === "payload") as {
      kind: "payload";
      payloadKind: string;
      payload: unknown;
    };
    expect(payloadEntry.payloadKind).toBe("gps");
    const tree = buildTree("gps", payloadEntry.payload);
    expect(tree.children.map((c) => c.label)).toEqual(["gnss", "is_valid", "time_stamp"]);
    const gnss = tree.children[0];
    expect(gnss.children.map((c) => c.label)).toEqual([
      "eph",
      "epv",
      "fix_type",
      "geo_point",
      "time_utc",
      "velocity",
    ]);
    controller.disconnect();
  });

  it("cancel provably submits nothing", async () => {
    await resetSim();
    const submitsBefore = (await requestLog()).filter(
      (r) => r.method === "command.submit",
    ).length;
    const controller = new ConsoleController(wsUrl, wsFactory);
    await controller.connect();
    await controller.submitUtterance("Take off");
    expect(controller.state.pending?.program).toBe("takeoffAsync()");
    controller.cancel();
    expect(controller.state.pending).toBeNull();
    controller.disconnect();
    const submitsAfter = (await requestLog()).filter(
      (r) => r.method === "command.submit",
    ).length;
    expect(submitsAfter).toBe(submitsBefore);
  });

  it("photo skill delivers a PNG to the camera pane", async () => {
    await resetSim();
    const controller = new ConsoleController(wsUrl, wsFactory);
    await controller.connect();
    await controller.submitUtterance("Fly to 10 20 and take a photo");
    expect(controller.state.pending?.program).toContain("simGetImage(0, scene)");
    await controller.execute();
    const image = controller.state.latestImage;
    expect(image).not.toBeNull();
    const bytes = Buffer.from(image!.pngBase64, "base64");
    expect(bytes.subarray(0, 8)).toEqual(
      Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    );
    controller.disconnect();
  });

  it("square patrol traces a closed square inside the geofence", async () => {
    await resetSim();
    const controller = new ConsoleController(wsUrl, wsFactory);
    await controller.connect();
    await controller.submitUtterance("Patrol a square with side 20 meters");
    const program = controller.state.pending?.program ?? "";
    expect(program.split("\n").length).toBe(5); // takeoff + four legs
    await controller.execute();

    const executed = controller.state.log[controller.state.log.length - 1];
    expect(executed).toMatchObject({ kind: "executed", status: "completed" });

    // telemetry may still be draining through the socket after the join
    const deadline = Date.now() + 3000;
    while (Date.now() < deadline) {
      const trail = controller.state.telemetry;
      if (
        trail.length > 20 &&
        trail[trail.length - 1].position.x_val < 0.5 &&
        trail[trail.length - 1].position.y_val < 0.5 &&
        trail[trail.length - 1].sim_time > 40
      ) {
        break;
      }
      await new Promise((r) => setTimeout(r, 50));
    }
    const trail = controller.state.telemetry;
    expect(trail.length).toBeGreaterThan(20);

    // ordered samples, contained in the fence, touching all four corners
    const times = trail.map((s) => s.sim_time);
    expect([...times].sort((a, b) => a - b)).toEqual(times);
    const fence = controller.state.geofence!;
    const view = fenceViewport(fence, 420, 340);
    const rect = fenceRect(view, fence);
    for (const sample of trail) {
      const p = project(view, sample.position.x_val, sample.position.y_val);
      expect(p.x).toBeGreaterThanOrEqual(rect.x);
      expect(p.x).toBeLessThanOrEqual(rect.x + rect.w);
      expect(p.y).toBeGreaterThanOrEqual(rect.y);
      expect(p.y).toBeLessThanOrEqual(rect.y + rect.h);
    }
    const visited = (cornerX: number, cornerY: number) =>
      trail.some(
        (s) =>
          Math.abs(s.position.x_val - cornerX) < 1.5 &&
          Math.abs(s.position.y_val - cornerY) < 1.5,
      );
    expect(visited(20, 0)).toBe(true);
    expect(visited(20, 20)).toBe(true);
    expect(visited(0, 20)).toBe(true);
    expect(visited(0, 0)).toBe(true);

    // closed: the trail returns to its starting column
    const last = trail[trail.length - 1];
    expect(Math.abs(last.position.x_val)).toBeLessThan(0.5);
    expect(Math.abs(last.position.y_val)).toBeLessThan(0.5);
    controller.disconnect();
  }, 20000);
});
