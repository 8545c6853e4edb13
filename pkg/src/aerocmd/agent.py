"""Interactive operator console: prompt → translate → confirm → execute.

The displayed command is exactly what gets executed, modulo the display
prefix (``AirSim_client.`` by default) and the ``print(...)`` wrapper shown
around query statements.  Nothing reaches the wire before the operator
confirms, unless auto-confirm is on.  Prompt strings are frozen constants
backed by golden transcript tests.
"""

from __future__ import annotations

import base64
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .client import ConnectionFailed, WireClient, WireError
from .corpus import Corpus, load_corpus, shipped_corpus_path
from .dsl import Program, is_query, render_program, render_statement
from .translator import (
    BackendError,
    BackendUnavailable,
    NoConfidentCandidate,
    TranslationCandidate,
    TranslatorConfig,
    backend_translate,
    suggestions,
    translate,
)

MSG_CONNECTED = "Connected!"
SEPARATOR = "-----"
PROMPT_COMMAND = "Please enter the control command: "
PROMPT_CONFIRM = "Press 'y' to execute, press 'n' to cancel:"
MSG_COMMAND_IS = "The command to be executed is:"
MSG_COMPLETED = "Completed!"

# Nested payload rendering: tag names keyed by payload field.
_TYPE_TAGS = {"gnss": "GnssReport", "geo_point": "GeoPoint", "velocity": "Vector3r", "position": "Vector3r"}
_ROOT_TAGS = {"gps": "GpsData", "state": "MultirotorState"}


@dataclass
class SessionConfig:
    endpoint: str = "127.0.0.1:41451"
    corpus_path: str | None = None  # None -> shipped corpus
    backend: str = "retrieval"
    backend_url: str | None = None
    auto_confirm: bool = False
    display_prefix: str = "AirSim_client."
    image_output_dir: str = "images"
    transcript_path: str | None = None
    translator: TranslatorConfig = field(default_factory=TranslatorConfig)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return f"'{value}'"
    return str(value)


def format_payload_block(payload: dict, root_tag: str, indent: int = 0) -> str:
    """Fig-style nested payload block: typed dicts, one field per line."""
    pad = "  " * indent
    inner_pad = "  " * (indent + 1)
    lines = [f"<{root_tag}> {{"]
    items = sorted(payload.items())
    for i, (key, value) in enumerate(items):
        comma = "," if i < len(items) - 1 else ""
        if isinstance(value, dict):
            tag = _TYPE_TAGS.get(key, key.title())
            nested = format_payload_block(value, tag, indent + 1)
            lines.append(f"{inner_pad}'{key}': {nested}{comma}")
        else:
            lines.append(f"{inner_pad}'{key}': {_format_value(value)}{comma}")
    lines.append(pad + "}")
    return "\n".join(lines)


def display_lines(program: Program, prefix: str) -> list[str]:
    """How the program is shown to the operator: prefix plus print-wrapped queries."""
    lines = []
    for stmt in program.statements:
        rendered = f"{prefix}{render_statement(stmt)}"
        if is_query(stmt):
            rendered = f"print({rendered})"
        lines.append(rendered)
    return lines


class Session:
    def __init__(self, cfg: SessionConfig, stdin=None, stdout=None):
        self.cfg = cfg
        self.stdin = stdin if stdin is not None else sys.stdin
        self.stdout = stdout if stdout is not None else sys.stdout
        self.transcript = None
        if cfg.transcript_path:
            self.transcript = open(cfg.transcript_path, "w", encoding="utf-8", newline="\n")
        self.echo_input = not getattr(self.stdin, "isatty", lambda: False)()
        self.corpus: Corpus = load_corpus(cfg.corpus_path or shipped_corpus_path())
        self.client: WireClient | None = None
        self._image_seq = 0

    def close(self) -> None:
        if self.transcript is not None:
            self.transcript.close()
        if self.client is not None:
            self.client.close()

    # -- I/O helpers ---------------------------------------------------------

    def emit(self, text: str = "") -> None:
        self.stdout.write(text + "\n")
        self.stdout.flush()
        if self.transcript is not None:
            self.transcript.write(text + "\n")
            self.transcript.flush()

    def read_line(self, prompt: str) -> str | None:
        """Prompt and read one line; None on EOF.  The transcript records the
        prompt and the answer on one line, matching an interactive screen."""
        self.stdout.write(prompt)
        self.stdout.flush()
        line = self.stdin.readline()
        if line == "":
            self.stdout.write("\n")
            if self.transcript is not None:
                self.transcript.write(prompt + "\n")
                self.transcript.flush()
            return None
        answer = line.rstrip("\n")
        if self.echo_input:
            self.stdout.write(answer + "\n")
            self.stdout.flush()
        if self.transcript is not None:
            self.transcript.write(prompt + answer + "\n")
            self.transcript.flush()
        return answer

    # -- session -------------------------------------------------------------

    def run(self) -> int:
        try:
            try:
                self.client = WireClient.from_endpoint(self.cfg.endpoint)
            except (ConnectionFailed, ValueError) as exc:
                self.emit(f"Error: {exc}")
                return 1
            try:
                self.emit(MSG_CONNECTED)
                ping = self.client.call("ping")
                self.emit(
                    "Client Ver:{} (Min Req: {}), Server Ver:{} (Min Req: {})".format(
                        WireClient.CLIENT_VERSION,
                        ping["min_client_version"],
                        ping["server_version"],
                        WireClient.MIN_SERVER_VERSION,
                    )
                )
                while True:
                    self.emit(SEPARATOR)
                    utterance = self.read_line(PROMPT_COMMAND)
                    if utterance is None:
                        return 0
                    if not utterance.strip():
                        continue
                    self.handle_utterance(utterance)
            except (ConnectionFailed, ConnectionError) as exc:
                self.emit(f"Connection lost: {exc}")
                return 1
        finally:
            self.close()

    def translate_utterance(self, utterance: str) -> list[TranslationCandidate] | None:
        if self.cfg.backend == "external":
            try:
                return backend_translate(
                    utterance, {"client": "repl"}, self.cfg.backend_url or ""
                )
            except BackendUnavailable as exc:
                self.emit(f"Backend unavailable ({exc}); falling back to retrieval.")
            except BackendError as exc:
                self.emit(f"Error: {exc}")
                return None
        try:
            return translate(utterance, self.corpus, self.cfg.translator)
        except NoConfidentCandidate as exc:
            self.emit(f"No confident translation (best score {exc.best_score:.2f}).")
            self.emit("Did you mean:")
            for _, pattern, _ in suggestions(utterance, self.corpus, k=3):
                self.emit(f"  - {pattern}")
            return None

    def handle_utterance(self, utterance: str) -> None:
        candidates = self.translate_utterance(utterance)
        if not candidates:
            return
        top = candidates[0]
        self.emit(MSG_COMMAND_IS)
        for line in display_lines(top.program, self.cfg.display_prefix):
            self.emit(line)
        if not self.cfg.auto_confirm:
            answer = self.read_line(PROMPT_CONFIRM)
            if answer is None or answer.strip().lower() != "y":
                return
        self.execute(top.program)

    def execute(self, program: Program) -> None:
        try:
            result = self.client.call(
                "command.submit", {"program": render_program(program)}
            )
            if "task_id" in result:
                joined = self.client.call("task.join", {"task_id": result["task_id"]})
                for output in joined.get("outputs", []):
                    self.print_output(output)
                if joined["status"] == "completed":
                    self.emit(MSG_COMPLETED)
                else:
                    self.emit(f"Task {joined['status']}.")
            else:
                self.print_output(result["result"])
                self.emit(MSG_COMPLETED)
        except WireError as exc:
            self.emit(f"Error: {exc.message}")

    def print_output(self, output: dict) -> None:
        kind = output.get("kind")
        payload = output.get("payload")
        if kind == "image":
            path = self.save_image(payload)
            self.emit(f"Image saved to {path}")
        elif kind in _ROOT_TAGS:
            self.emit(format_payload_block(payload, _ROOT_TAGS[kind]))
        elif kind == "error":
            self.emit(f"Error: {payload}")
        elif kind == "reset":
            pass
        else:
            self.emit(str(payload))

    def save_image(self, payload: dict) -> str:
        directory = Path(self.cfg.image_output_dir)
        directory.mkdir(parents=True, exist_ok=True)
        self._image_seq += 1
        path = directory / f"image_{self._image_seq:04d}.png"
        path.write_bytes(base64.b64decode(payload["png_base64"]))
        return str(path)


def run_session(cfg: SessionConfig, stdin=None, stdout=None) -> int:
    """Run the interactive loop; returns the process exit status."""
    return Session(cfg, stdin=stdin, stdout=stdout).run()
