"""Asynchronous simulator service: TCP (framed) and WebSocket transports.

All simulator mutations funnel through one queue owned by the simulation
loop, so concurrent clients observe a single total order of submissions.
Connection handlers never touch sim state directly.  Long-running commands
return task handles; ``task.join`` parks the request server-side until the
task reaches a terminal status.

Real-time pacing: sim time advances at ``sim_speed`` × wall clock; with
``sim_speed`` infinite the loop steps only while a task is running, which
makes responses a pure function of the request order (reproducible
transcripts).
"""

from __future__ import annotations

import asyncio
import base64
import json
import logging
import math
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

import websockets

from . import wire
from .corpus import Corpus, load_corpus, shipped_corpus_path
from .dsl import (
    GeoFence,
    ParseError,
    Reset,
    SafetyEnvelope,
    is_query,
    parse_program,
    render_statement,
    validate_program,
)
from .sim import HomeGeopoint, NotAirborne, SimConfig, Simulator, gps_from_state, state_payload
from .translator import (
    EmptyCorpus,
    NoConfidentCandidate,
    TranslatorConfig,
    suggestions,
    translate,
)

log = logging.getLogger(__name__)

SERVER_VERSION = 1
MIN_CLIENT_VERSION = 1

DEFAULT_TCP_PORT = 41451
DEFAULT_WS_PORT = 41452


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    tcp_port: int = DEFAULT_TCP_PORT
    ws_port: int = DEFAULT_WS_PORT
    sim: SimConfig = field(default_factory=SimConfig)
    sim_speed: float = 1.0
    corpus_path: str | None = None  # None -> shipped corpus

    @staticmethod
    def from_file(path: str | Path) -> "ServerConfig":
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
        sim = SimConfig()
        if "home" in raw:
            sim = replace(sim, home=HomeGeopoint(**raw["home"]))
        if "envelope" in raw:
            envelope = raw["envelope"]
            sim = replace(
                sim,
                envelope=SafetyEnvelope(
                    max_speed=envelope["max_speed"],
                    max_duration=envelope["max_duration"],
                    geofence=GeoFence(**envelope["geofence"]),
                ),
            )
        if "dt" in raw:
            sim = replace(sim, dt=float(raw["dt"]))
        if "epoch_utc_us" in raw:
            sim = replace(sim, epoch_utc_us=int(raw["epoch_utc_us"]))
        speed = raw.get("sim_speed", 1.0)
        return ServerConfig(
            host=raw.get("host", "127.0.0.1"),
            tcp_port=int(raw.get("tcp_port", DEFAULT_TCP_PORT)),
            ws_port=int(raw.get("ws_port", DEFAULT_WS_PORT)),
            sim=sim,
            sim_speed=math.inf if speed in ("inf", "infinity") else float(speed),
            corpus_path=raw.get("corpus_path"),
        )


@dataclass
class ProgramTask:
    """A submitted program running statement-by-statement under one id."""

    task_id: str
    statements: tuple
    index: int = 0
    outputs: list = field(default_factory=list)
    status: str = "running"
    done: asyncio.Event = field(default_factory=asyncio.Event)

    def finish(self, status: str) -> None:
        self.status = status
        self.done.set()


def _query_output(sim: Simulator, stmt) -> dict:
    payload = sim.query(stmt)
    if "png" in payload:
        return {
            "kind": "image",
            "payload": {
                "metadata": payload["metadata"],
                "png_base64": base64.b64encode(payload["png"]).decode("ascii"),
            },
        }
    kind = "gps" if "gnss" in payload else "state"
    return {"kind": kind, "payload": payload}


class SimService:
    """The simulation loop plus the serialized operation queue."""

    def __init__(self, config: ServerConfig):
        self.config = config
        self.sim = Simulator(config=config.sim)
        self.ops: asyncio.Queue = asyncio.Queue()
        self.tasks: dict[str, ProgramTask] = {}
        self.current: ProgramTask | None = None
        self._task_seq = 0
        self._telemetry: list[dict] = []  # {queue, interval, next_at}
        self._loop_task: asyncio.Task | None = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        self._loop_task = asyncio.get_running_loop().create_task(self._run_loop())

    async def stop(self) -> None:
        if self._loop_task is not None:
            self._loop_task.cancel()
            try:
                await self._loop_task
            except asyncio.CancelledError:
                pass

    # -- calls from connection handlers -------------------------------------

    async def call(self, fn):
        """Run ``fn(self)`` inside the simulation loop and await its result."""
        future = asyncio.get_running_loop().create_future()
        await self.ops.put((fn, future))
        return await future

    # -- the loop ------------------------------------------------------------

    def _execute(self, fn, future) -> None:
        try:
            result = fn(self)
        except Exception as exc:  # propagated to the awaiting handler
            if not future.cancelled():
                future.set_exception(exc)
            return
        if not future.cancelled():
            future.set_result(result)

    async def _run_loop(self) -> None:
        dt = self.sim.config.dt
        speed = self.config.sim_speed
        loop = asyncio.get_running_loop()
        anchor_wall = loop.time()
        anchor_sim = self.sim.state.sim_time
        steps_since_yield = 0
        while True:
            while not self.ops.empty():
                fn, future = self.ops.get_nowait()
                self._execute(fn, future)
            self._advance_program()
            busy = self.sim.state.active_task is not None
            if math.isinf(speed):
                if busy:
                    self._step_once()
                    steps_since_yield += 1
                    if steps_since_yield >= 500:
                        steps_since_yield = 0
                        await asyncio.sleep(0)
                else:
                    # Idle at infinite speed: sim time advances only under
                    # work, keeping sessions reproducible.
                    fn, future = await self.ops.get()
                    self._execute(fn, future)
            else:
                target = anchor_sim + (loop.time() - anchor_wall) * speed
                if self.sim.state.sim_time < target:
                    self._step_once()
                    continue
                try:
                    fn, future = await asyncio.wait_for(
                        self.ops.get(), timeout=min(dt / speed, 0.05)
                    )
                    self._execute(fn, future)
                except asyncio.TimeoutError:
                    pass

    def _step_once(self) -> None:
        self.sim.step()
        self._advance_program()
        self._emit_telemetry()

    def _advance_program(self) -> None:
        program = self.current
        if program is None or self.sim.state.active_task is not None:
            return
        while program.index < len(program.statements):
            stmt = program.statements[program.index]
            program.index += 1
            if is_query(stmt):
                output = _query_output(self.sim, stmt)
                output["index"] = program.index - 1
                program.outputs.append(output)
                continue
            try:
                task = self.sim.submit(stmt)
            except NotAirborne as exc:
                program.finish("rejected")
                program.outputs.append(
                    {"index": program.index - 1, "kind": "error", "payload": str(exc)}
                )
                self.current = None
                return
            if task is not None and task.status.value == "running":
                return  # wait for completion, then resume here
        program.finish("completed")
        self.current = None

    def _emit_telemetry(self) -> None:
        if not self._telemetry:
            return
        now = self.sim.state.sim_time
        payload = None
        for sub in self._telemetry:
            if now >= sub["next_at"]:
                if payload is None:
                    payload = wire.event("telemetry", state_payload(self.sim.state))
                sub["next_at"] = now + sub["interval"]
                try:
                    sub["queue"].put_nowait(payload)
                except asyncio.QueueFull:
                    pass  # slow consumer: drop, never block the sim loop

    # -- operations (run inside the loop via call()) -------------------------

    def op_submit_program(self, program):
        violations = validate_program(program, self.sim.config.envelope, self.sim.state)
        if violations:
            raise ValidationRejected(violations)
        bad_index = self.sim.check_airborne_order(program.statements)
        if bad_index is not None:
            raise NotAirborne(
                f"statement {bad_index} "
                f"({render_statement(program.statements[bad_index])}) requires the "
                "vehicle to be airborne; take off first"
            )
        statements = program.statements
        if len(statements) == 1 and is_query(statements[0]):
            return {"result": _query_output(self.sim, statements[0])}
        if len(statements) == 1 and isinstance(statements[0], Reset):
            self._preempt_current()
            self.sim.submit(statements[0])
            return {"result": {"kind": "reset", "payload": "ok"}}
        self._preempt_current()
        self._task_seq += 1
        task = ProgramTask(task_id=f"task-{self._task_seq}", statements=tuple(statements))
        self.tasks[task.task_id] = task
        self.current = task
        self._advance_program()
        return {"task_id": task.task_id}

    def _preempt_current(self) -> None:
        if self.current is not None:
            self.current.finish("preempted")
            self.current = None
        if self.sim.state.active_task is not None:
            self.sim.preempt_active()

    def op_reset(self):
        self._preempt_current()
        self.sim.reset()
        return "ok"

    def op_state(self):
        return state_payload(self.sim.state)

    def op_gps(self):
        return gps_from_state(self.sim.state, self.sim.config.home, self.sim.config.epoch_utc_us)

    def op_image(self, camera: int, image_type: str):
        from .dsl import GetImage

        return _query_output(self.sim, GetImage(camera=camera, image_type=image_type))["payload"]

    def op_subscribe(self, queue: asyncio.Queue, hz: float):
        self._telemetry.append(
            {"queue": queue, "interval": 1.0 / hz, "next_at": self.sim.state.sim_time}
        )
        return "ok"

    def op_unsubscribe(self, queue: asyncio.Queue):
        self._telemetry = [sub for sub in self._telemetry if sub["queue"] is not queue]
        return "ok"


class ValidationRejected(ValueError):
    def __init__(self, violations):
        super().__init__(
            "; ".join(f"statement {v.statement_index}: {v.rule} ({v.detail})" for v in violations)
        )
        self.violations = violations


class Server:
    """Wire endpoint pair (TCP + WebSocket) over one shared simulator."""

    def __init__(self, config: ServerConfig | None = None, corpus: Corpus | None = None):
        self.config = config or ServerConfig()
        self.service = SimService(self.config)
        self.corpus = corpus or load_corpus(self.config.corpus_path or shipped_corpus_path())
        self.request_log: list[tuple[int, str]] = []
        self._conn_seq = 0
        self._tcp_server: asyncio.AbstractServer | None = None
        self._ws_server = None

    # bound ports (useful when configured with port 0 for tests)
    @property
    def tcp_port(self) -> int:
        return self._tcp_server.sockets[0].getsockname()[1]

    @property
    def ws_port(self) -> int:
        return self._ws_server.sockets[0].getsockname()[1]

    async def start(self) -> None:
        self.service.start()
        self._tcp_server = await asyncio.start_server(
            self._handle_tcp, self.config.host, self.config.tcp_port
        )
        self._ws_server = await websockets.serve(
            self._handle_ws, self.config.host, self.config.ws_port
        )

    async def stop(self) -> None:
        if self._tcp_server is not None:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()
        await self.service.stop()

    # -- shared method dispatch ----------------------------------------------

    async def _dispatch(self, conn: "_Connection", message: dict) -> dict | None:
        request_id = message.get("id")
        method = message.get("method")
        if not isinstance(request_id, str) or not isinstance(method, str):
            return wire.response_error("", wire.ERR_INTERNAL, "request needs string id and method")
        self.request_log.append((conn.conn_id, method))
        params = message.get("params") or {}
        try:
            handler = _METHODS.get(method)
            if handler is None:
                return wire.response_error(
                    request_id, wire.ERR_UNKNOWN_METHOD, f"unknown method {method!r}"
                )
            return await handler(self, conn, request_id, params)
        except ParseError as exc:
            return wire.response_error(request_id, wire.ERR_PARSE, str(exc))
        except ValidationRejected as exc:
            return wire.response_error(request_id, wire.ERR_VALIDATION, str(exc))
        except NotAirborne as exc:
            return wire.response_error(request_id, wire.ERR_NOT_AIRBORNE, str(exc))
        except Exception as exc:  # keep the connection alive on handler bugs
            log.exception("internal error handling %s", method)
            return wire.response_error(request_id, wire.ERR_INTERNAL, f"internal error: {exc}")

    # -- methods ---------------------------------------------------------------

    async def _m_ping(self, conn, request_id, params):
        return wire.response_ok(
            request_id,
            {"server_version": SERVER_VERSION, "min_client_version": MIN_CLIENT_VERSION},
        )

    async def _m_submit(self, conn, request_id, params):
        program = parse_program(str(params.get("program", "")))
        result = await self.service.call(lambda svc: svc.op_submit_program(program))
        return wire.response_ok(request_id, result)

    async def _m_task_status(self, conn, request_id, params):
        task = self.service.tasks.get(str(params.get("task_id", "")))
        if task is None:
            return wire.response_error(request_id, wire.ERR_UNKNOWN_TASK, "unknown task")
        return wire.response_ok(request_id, {"status": task.status})

    async def _m_task_join(self, conn, request_id, params):
        task_id = str(params.get("task_id", ""))
        task = self.service.tasks.get(task_id)
        if task is None:
            return wire.response_error(request_id, wire.ERR_UNKNOWN_TASK, "unknown task")
        key = task_id
        if key in conn.joining:
            return wire.response_error(
                request_id, wire.ERR_INTERNAL, f"a join for {task_id} is already in flight"
            )
        conn.joining.add(key)
        try:
            await task.done.wait()
        finally:
            conn.joining.discard(key)
        return wire.response_ok(request_id, {"outputs": task.outputs, "status": task.status})

    async def _m_state(self, conn, request_id, params):
        return wire.response_ok(request_id, await self.service.call(SimService.op_state))

    async def _m_gps(self, conn, request_id, params):
        return wire.response_ok(request_id, await self.service.call(SimService.op_gps))

    async def _m_image(self, conn, request_id, params):
        camera = int(params.get("camera", 0))
        image_type = str(params.get("image_type", "scene"))
        try:
            result = await self.service.call(lambda svc: svc.op_image(camera, image_type))
        except (ValueError, TypeError) as exc:
            return wire.response_error(request_id, wire.ERR_VALIDATION, str(exc))
        return wire.response_ok(request_id, result)

    async def _m_reset(self, conn, request_id, params):
        return wire.response_ok(request_id, await self.service.call(SimService.op_reset))

    async def _m_translate(self, conn, request_id, params):
        utterance = str(params.get("utterance", ""))
        cfg = TranslatorConfig()
        try:
            candidates = translate(utterance, self.corpus, cfg)
        except NoConfidentCandidate as exc:
            return wire.response_ok(
                request_id,
                {
                    "best_score": exc.best_score,
                    "candidates": [],
                    "suggestions": [
                        {"id": entry_id, "pattern": pattern, "score": score}
                        for entry_id, pattern, score in suggestions(utterance, self.corpus)
                    ],
                },
            )
        except EmptyCorpus as exc:
            return wire.response_error(request_id, wire.ERR_INTERNAL, str(exc))
        return wire.response_ok(
            request_id, {"candidates": [c.to_json_obj() for c in candidates]}
        )

    async def _m_subscribe(self, conn, request_id, params):
        hz = float(params.get("hz", 10.0))
        if not 0 < hz <= 100:
            return wire.response_error(request_id, wire.ERR_VALIDATION, "hz must be in (0, 100]")
        await self.service.call(lambda svc: svc.op_subscribe(conn.events, hz))
        conn.subscribed = True
        return wire.response_ok(request_id, {"channel": "telemetry", "hz": hz})

    async def _m_config(self, conn, request_id, params):
        sim = self.config.sim
        fence = sim.envelope.geofence
        return wire.response_ok(
            request_id,
            {
                "dt": sim.dt,
                "envelope": {
                    "geofence": {
                        "x_max": fence.x_max,
                        "x_min": fence.x_min,
                        "y_max": fence.y_max,
                        "y_min": fence.y_min,
                        "z_max": fence.z_max,
                        "z_min": fence.z_min,
                    },
                    "max_duration": sim.envelope.max_duration,
                    "max_speed": sim.envelope.max_speed,
                },
                "home": {
                    "altitude": sim.home.altitude,
                    "latitude": sim.home.latitude,
                    "longitude": sim.home.longitude,
                },
                "sim_speed": "inf" if math.isinf(self.config.sim_speed) else self.config.sim_speed,
            },
        )

    async def _m_request_log(self, conn, request_id, params):
        return wire.response_ok(
            request_id,
            {"requests": [{"connection": cid, "method": m} for cid, m in self.request_log]},
        )

    # -- transports -------------------------------------------------------------

    async def _handle_tcp(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        conn = _Connection(self._next_conn_id(), _TcpSink(writer))
        sender = asyncio.create_task(conn.pump_events())
        joins: set[asyncio.Task] = set()
        buffer = b""
        try:
            while True:
                chunk = await reader.read(65536)
                if not chunk:
                    break
                buffer += chunk
                try:
                    messages, buffer = wire.decode_frames(buffer)
                except (wire.FrameTooLarge, wire.MalformedJson) as exc:
                    log.warning("closing connection %d: %s", conn.conn_id, exc)
                    break
                for message in messages:
                    await self._handle_message(conn, message, joins)
        finally:
            await self._teardown(conn, sender, joins, writer)

    async def _handle_message(self, conn, message, joins: set) -> None:
        # task.join parks until terminal status; run it as its own task so
        # pipelined requests on the same connection keep flowing.
        if message.get("method") == "task.join":

            async def run_join():
                response = await self._dispatch(conn, message)
                if response is not None:
                    await conn.send(response)

            task = asyncio.create_task(run_join())
            joins.add(task)
            task.add_done_callback(joins.discard)
            return
        response = await self._dispatch(conn, message)
        if response is not None:
            await conn.send(response)

    async def _teardown(self, conn, sender, joins, writer) -> None:
        for task in list(joins):
            task.cancel()
        sender.cancel()
        if conn.subscribed:
            try:
                await self.service.call(lambda svc: svc.op_unsubscribe(conn.events))
            except Exception:
                pass
        try:
            writer.close()
            await writer.wait_closed()
        except Exception:
            pass

    async def _handle_ws(self, socket):
        conn = _Connection(self._next_conn_id(), _WsSink(socket))
        sender = asyncio.create_task(conn.pump_events())
        joins: set[asyncio.Task] = set()
        try:
            async for raw in socket:
                try:
                    message = json.loads(raw)
                except json.JSONDecodeError:
                    break
                if not isinstance(message, dict):
                    break
                await self._handle_message(conn, message, joins)
        except websockets.ConnectionClosed:
            pass
        finally:
            for task in list(joins):
                task.cancel()
            sender.cancel()
            if conn.subscribed:
                try:
                    await self.service.call(lambda svc: svc.op_unsubscribe(conn.events))
                except Exception:
                    pass

    def _next_conn_id(self) -> int:
        self._conn_seq += 1
        return self._conn_seq


class _TcpSink:
    def __init__(self, writer: asyncio.StreamWriter):
        self.writer = writer
        self.lock = asyncio.Lock()

    async def send(self, payload: dict) -> None:
        frame = wire.encode_frame(payload)
        async with self.lock:
            self.writer.write(frame)
            await self.writer.drain()


class _WsSink:
    def __init__(self, socket):
        self.socket = socket

    async def send(self, payload: dict) -> None:
        await self.socket.send(json.dumps(payload, ensure_ascii=False, sort_keys=True))


class _Connection:
    def __init__(self, conn_id: int, sink):
        self.conn_id = conn_id
        self.sink = sink
        self.events: asyncio.Queue = asyncio.Queue(maxsize=1024)
        self.subscribed = False
        self.joining: set[str] = set()

    async def send(self, payload: dict) -> None:
        try:
            await self.sink.send(payload)
        except (ConnectionError, websockets.ConnectionClosed):
            pass

    async def pump_events(self) -> None:
        while True:
            event = await self.events.get()
            await self.send(event)


_METHODS = {
    "ping": Server._m_ping,
    "command.submit": Server._m_submit,
    "task.status": Server._m_task_status,
    "task.join": Server._m_task_join,
    "state.get": Server._m_state,
    "gps.get": Server._m_gps,
    "image.get": Server._m_image,
    "sim.reset": Server._m_reset,
    "translate": Server._m_translate,
    "telemetry.subscribe": Server._m_subscribe,
    "config.get": Server._m_config,
    "debug.request_log": Server._m_request_log,
}


async def serve_forever(config: ServerConfig) -> None:
    server = Server(config)
    await server.start()
    log.info(
        "listening on tcp %s:%d and ws %s:%d (sim speed %s)",
        config.host,
        server.tcp_port,
        config.host,
        server.ws_port,
        config.sim_speed,
    )
    try:
        await asyncio.Event().wait()
    finally:
        await server.stop()


class ServerThread:
    """Run a Server on a private event loop thread (tests, embedding)."""

    def __init__(self, config: ServerConfig | None = None, corpus: Corpus | None = None):
        self.config = config or ServerConfig(tcp_port=0, ws_port=0, sim_speed=math.inf)
        self.corpus = corpus
        self.server: Server | None = None
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._started = threading.Event()

    def __enter__(self) -> "ServerThread":
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()
        if not self._started.wait(timeout=10):
            raise RuntimeError("server thread failed to start")
        return self

    def _run(self) -> None:
        self._loop = asyncio.new_event_loop()
        asyncio.set_event_loop(self._loop)
        self.server = Server(self.config, corpus=self.corpus)
        self._loop.run_until_complete(self.server.start())
        self._started.set()
        self._loop.run_forever()
        self._loop.run_until_complete(self.server.stop())
        self._loop.close()

    def __exit__(self, *exc_info) -> None:
        if self._loop is not None:
            self._loop.call_soon_threadsafe(self._loop.stop)
        if self._thread is not None:
            self._thread.join(timeout=10)

    @property
    def tcp_port(self) -> int:
        return self.server.tcp_port

    @property
    def ws_port(self) -> int:
        return self.server.ws_port

    @property
    def endpoint(self) -> str:
        return f"{self.config.host}:{self.tcp_port}"
