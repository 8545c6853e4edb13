"""Blocking TCP client for the wire protocol.

Strictly one request in flight: ``call`` sends a framed request and reads
frames until the matching response arrives.  Server-push events received
while waiting are buffered in ``events`` rather than dropped.
"""

from __future__ import annotations

import socket

from . import wire


class ConnectionFailed(ConnectionError):
    pass


class WireError(RuntimeError):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class WireClient:
    CLIENT_VERSION = 1
    MIN_SERVER_VERSION = 1

    def __init__(self, host: str, port: int, timeout: float | None = None):
        """Connect to a wire endpoint.

        ``timeout`` bounds each socket read; the default of None blocks
        indefinitely, which is what task.join needs (it parks server-side
        for the length of the running command).
        """
        try:
            self._sock = socket.create_connection((host, port), timeout=5.0)
        except OSError as exc:
            raise ConnectionFailed(f"cannot connect to {host}:{port}: {exc}") from exc
        self._sock.settimeout(timeout)
        self._buffer = b""
        self._inbox: list[dict] = []
        self._seq = 0
        self.events: list[dict] = []

    @classmethod
    def from_endpoint(cls, endpoint: str, timeout: float | None = None) -> "WireClient":
        host, _, port = endpoint.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"endpoint must look like HOST:PORT, got {endpoint!r}")
        return cls(host, int(port), timeout)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self) -> "WireClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def call(self, method: str, params: dict | None = None):
        """Send one request and return its result; raises WireError on error."""
        self._seq += 1
        request_id = f"c{self._seq}"
        self._sock.sendall(wire.encode_frame(wire.request(request_id, method, params)))
        while True:
            message = self._next_message()
            if "channel" in message:
                self.events.append(message)
                continue
            if message.get("id") != request_id:
                continue  # response to an abandoned earlier call
            if "error" in message:
                error = message["error"]
                raise WireError(int(error.get("code", 0)), str(error.get("message", "")))
            return message.get("result")

    def _next_message(self) -> dict:
        while not self._inbox:
            chunk = self._sock.recv(65536)
            if not chunk:
                raise ConnectionFailed("server closed the connection")
            self._buffer += chunk
            messages, self._buffer = wire.decode_frames(self._buffer)
            self._inbox.extend(messages)
        return self._inbox.pop(0)
