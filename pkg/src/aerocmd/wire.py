"""Framed JSON wire protocol shared by the TCP server and its clients.

Each frame is a 4-byte big-endian length prefix followed by a UTF-8 JSON
payload: a request {id, method, params}, a response {id, result} or
{id, error: {code, message}}, or a server-push event {channel, payload}.
The same JSON payloads travel over WebSocket with the prefix replaced by
message boundaries.  Byte-level examples live in docs/protocol.md.
"""

from __future__ import annotations

import json
import struct

MAX_FRAME_BYTES = 16 * 1024 * 1024
HEADER = struct.Struct(">I")

# Error codes carried in response.error.code.
ERR_PARSE = 1
ERR_VALIDATION = 2
ERR_UNKNOWN_METHOD = 3
ERR_UNKNOWN_TASK = 4
ERR_NOT_AIRBORNE = 5
ERR_INTERNAL = 6


class FrameTooLarge(ValueError):
    pass


class MalformedJson(ValueError):
    """Connection-fatal: the peer sent a frame that is not valid JSON."""


def encode_payload(payload: dict) -> bytes:
    return json.dumps(payload, ensure_ascii=False, sort_keys=True).encode("utf-8")


def encode_frame(payload: dict) -> bytes:
    body = encode_payload(payload)
    if len(body) > MAX_FRAME_BYTES:
        raise FrameTooLarge(f"frame of {len(body)} bytes exceeds {MAX_FRAME_BYTES}")
    return HEADER.pack(len(body)) + body


def decode_payload(body: bytes) -> dict:
    try:
        payload = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedJson(str(exc)) from exc
    if not isinstance(payload, dict):
        raise MalformedJson("payload must be a JSON object")
    return payload


def decode_frames(buffer: bytes) -> tuple[list[dict], bytes]:
    """Incremental decode: complete frames plus the unconsumed remainder.

    Handles partial frames across reads; raises FrameTooLarge or
    MalformedJson for unusable input (the connection should then close).
    """
    messages: list[dict] = []
    offset = 0
    while True:
        if len(buffer) - offset < HEADER.size:
            break
        (length,) = HEADER.unpack_from(buffer, offset)
        if length > MAX_FRAME_BYTES:
            raise FrameTooLarge(f"declared frame of {length} bytes exceeds {MAX_FRAME_BYTES}")
        if len(buffer) - offset - HEADER.size < length:
            break
        body = buffer[offset + HEADER.size : offset + HEADER.size + length]
        messages.append(decode_payload(body))
        offset += HEADER.size + length
    return messages, buffer[offset:]


def request(request_id: str, method: str, params: dict | None = None) -> dict:
    return {"id": request_id, "method": method, "params": params or {}}


def response_ok(request_id: str, result) -> dict:
    return {"id": request_id, "result": result}


def response_error(request_id: str, code: int, message: str) -> dict:
    return {"id": request_id, "error": {"code": code, "message": message}}


def event(channel: str, payload) -> dict:
    return {"channel": channel, "payload": payload}
