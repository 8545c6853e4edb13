"""The AeroCmd command language: AST, parser, canonical renderer, and safety validator.

AeroCmd is a closed, typed language of drone commands.  Each statement maps
1:1 to one simulator API method (``takeoffAsync``, ``moveByVelocityAsync``,
``getGpsData``, ...).  Concrete syntax is one call per line (or separated by
``;``), with an optional receiver prefix such as ``AirSim_client.`` and an
optional ``print(...)`` wrapper around query statements, both of which are
display conventions stripped on parse.

See docs/grammar.md for the full grammar reference.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields, replace

__all__ = [
    "ParseError",
    "Takeoff",
    "Land",
    "Hover",
    "MoveByVelocity",
    "MoveToPosition",
    "RotateToYaw",
    "GetGpsData",
    "GetState",
    "GetImage",
    "Reset",
    "Program",
    "SafetyEnvelope",
    "GeoFence",
    "Violation",
    "parse_program",
    "render_program",
    "validate_program",
    "ast_equiv",
    "wrap_yaw",
    "is_query",
    "format_number",
]

IMAGE_TYPES = ("scene", "depth")

# Absolute tolerance for pairwise numeric comparison in ast_equiv.  A positive
# tolerance is not transitive, so it must only ever be used for pairwise
# checks; exact comparison (tolerance 0) is a true equivalence relation.
EQUIV_TOLERANCE = 1e-9


class ParseError(ValueError):
    """Raised when AeroCmd source text cannot be parsed.

    ``position`` is the character offset into the full input text.
    """

    def __init__(self, position: int, message: str):
        super().__init__(f"parse error at position {position}: {message}")
        self.position = position
        self.message = message


def wrap_yaw(yaw: float) -> float:
    """Normalize an angle in degrees to the interval [-180, 180).

    Values already in range pass through bitwise unchanged (the fmod path
    would perturb them by an ulp).
    """
    if -180.0 <= yaw < 180.0:
        return yaw
    wrapped = math.fmod(yaw + 180.0, 360.0)
    if wrapped < 0:
        wrapped += 360.0
    return wrapped - 180.0


def format_number(value: float) -> str:
    """Minimal decimal rendering: integral values drop the trailing ``.0``."""
    value = float(value)
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


@dataclass(frozen=True)
class Takeoff:
    method = "takeoffAsync"


@dataclass(frozen=True)
class Land:
    method = "landAsync"


@dataclass(frozen=True)
class Hover:
    method = "hoverAsync"


@dataclass(frozen=True)
class MoveByVelocity:
    vx: float
    vy: float
    vz: float
    duration: float
    method = "moveByVelocityAsync"

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be > 0")


@dataclass(frozen=True)
class MoveToPosition:
    x: float
    y: float
    z: float
    speed: float
    method = "moveToPositionAsync"

    def __post_init__(self):
        if not self.speed > 0:
            raise ValueError("speed must be > 0")


@dataclass(frozen=True)
class RotateToYaw:
    yaw: float
    method = "rotateToYawAsync"


@dataclass(frozen=True)
class GetGpsData:
    method = "getGpsData"


@dataclass(frozen=True)
class GetState:
    method = "getMultirotorState"


@dataclass(frozen=True)
class GetImage:
    camera: int
    image_type: str
    method = "simGetImage"

    def __post_init__(self):
        if self.camera < 0:
            raise ValueError("camera id must be >= 0")
        if self.image_type not in IMAGE_TYPES:
            raise ValueError(f"image_type must be one of {IMAGE_TYPES}")


@dataclass(frozen=True)
class Reset:
    method = "reset"


Statement = (
    Takeoff
    | Land
    | Hover
    | MoveByVelocity
    | MoveToPosition
    | RotateToYaw
    | GetGpsData
    | GetState
    | GetImage
    | Reset
)

QUERY_TYPES = (GetGpsData, GetState, GetImage)
DURATIVE_TYPES = (Takeoff, Land, Hover, MoveByVelocity, MoveToPosition, RotateToYaw)


def is_query(stmt: Statement) -> bool:
    return isinstance(stmt, QUERY_TYPES)


@dataclass(frozen=True)
class Program:
    """An ordered, non-empty sequence of statements.

    Single-statement programs are the simple command set; multi-statement
    programs are skills (the complex functionality set).
    """

    statements: tuple[Statement, ...]

    def __post_init__(self):
        if len(self.statements) < 1:
            raise ValueError("a program must contain at least one statement")

    def __iter__(self):
        return iter(self.statements)

    def __len__(self):
        return len(self.statements)


@dataclass(frozen=True)
class GeoFence:
    """Axis-aligned NED bounding box (inclusive bounds, +z points down)."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    z_min: float
    z_max: float

    def contains(self, x: float, y: float, z: float) -> bool:
        return (
            self.x_min <= x <= self.x_max
            and self.y_min <= y <= self.y_max
            and self.z_min <= z <= self.z_max
        )


@dataclass(frozen=True)
class SafetyEnvelope:
    max_speed: float
    max_duration: float
    geofence: GeoFence

    def __post_init__(self):
        values = [self.max_speed, self.max_duration] + [
            getattr(self.geofence, f.name) for f in fields(self.geofence)
        ]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("envelope bounds must be finite")
        if not self.max_speed > 0:
            raise ValueError("max_speed must be > 0")


@dataclass(frozen=True)
class Violation:
    statement_index: int
    rule: str  # "speed" | "duration" | "geofence"
    detail: str


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

# Method table: canonical name -> (AST class, parameter spec).
# Parameter kinds: "float", "camera" (non-negative integer), "imagetype".
_SIGNATURES: dict[str, tuple[type, tuple[tuple[str, str], ...]]] = {
    "takeoffAsync": (Takeoff, ()),
    "landAsync": (Land, ()),
    "hoverAsync": (Hover, ()),
    "moveByVelocityAsync": (
        MoveByVelocity,
        (("vx", "float"), ("vy", "float"), ("vz", "float"), ("duration", "float")),
    ),
    "moveToPositionAsync": (
        MoveToPosition,
        (("x", "float"), ("y", "float"), ("z", "float"), ("speed", "float")),
    ),
    "rotateToYawAsync": (RotateToYaw, (("yaw", "float"),)),
    "getGpsData": (GetGpsData, ()),
    "getMultirotorState": (GetState, ()),
    "simGetImage": (GetImage, (("camera", "camera"), ("image_type", "imagetype"))),
    "reset": (Reset, ()),
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<punct>[().,=])
    """,
    re.VERBOSE,
)


def _tokenize(text: str, base: int) -> list[tuple[str, str, int]]:
    """Tokenize one statement chunk into (kind, value, absolute position)."""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(base + pos, f"unexpected character {text[pos]!r}")
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), base + pos))
        pos = m.end()
    return tokens


class _StatementParser:
    def __init__(self, tokens: list[tuple[str, str, int]], base: int):
        self.tokens = tokens
        self.base = base
        self.i = 0

    def _here(self) -> int:
        if self.i < len(self.tokens):
            return self.tokens[self.i][2]
        return self.tokens[-1][2] + len(self.tokens[-1][1]) if self.tokens else self.base

    def _peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, self._here())

    def _expect(self, kind: str, value: str | None = None):
        tok_kind, tok_value, pos = self._peek()
        if tok_kind != kind or (value is not None and tok_value != value):
            want = value if value is not None else kind
            raise ParseError(pos, f"expected {want!r}, found {tok_value!r}")
        self.i += 1
        return tok_value, pos

    def parse(self) -> Statement:
        stmt = self._call()
        if self.i != len(self.tokens):
            _, tok_value, pos = self._peek()
            raise ParseError(pos, f"unexpected trailing input {tok_value!r}")
        return stmt

    def _dotted_name(self) -> tuple[list[str], int]:
        name, pos = self._expect("ident")
        parts = [name]
        while self._peek()[:2] == ("punct", "."):
            self.i += 1
            part, _ = self._expect("ident")
            parts.append(part)
        return parts, pos

    def _call(self) -> Statement:
        parts, pos = self._dotted_name()
        self._expect("punct", "(")
        # print(...) is a display convention around query statements.
        if parts == ["print"]:
            inner = self._call()
            self._expect("punct", ")")
            if not is_query(inner):
                raise ParseError(
                    pos, "print(...) wrapper is only accepted around query statements"
                )
            return inner
        method = parts[-1]  # receiver prefix (e.g. AirSim_client.) is ignored
        if method not in _SIGNATURES:
            raise ParseError(pos, f"unknown method {method!r}")
        cls, params = _SIGNATURES[method]
        args, kwargs = self._arguments(params)
        return self._bind(cls, method, params, args, kwargs, pos)

    def _arguments(self, params):
        args: list[tuple[object, int]] = []
        kwargs: dict[str, tuple[object, int]] = {}
        if self._peek()[:2] == ("punct", ")"):
            self.i += 1
            return args, kwargs
        while True:
            kind, value, pos = self._peek()
            if kind == "ident" and self._lookahead_is_kwarg():
                self.i += 1
                self._expect("punct", "=")
                if value in kwargs:
                    raise ParseError(pos, f"duplicate keyword argument {value!r}")
                kwargs[value] = self._value()
            else:
                if kwargs:
                    raise ParseError(pos, "positional argument after keyword argument")
                args.append(self._value())
            kind, value, pos = self._peek()
            if (kind, value) == ("punct", ","):
                self.i += 1
                continue
            if (kind, value) == ("punct", ")"):
                self.i += 1
                return args, kwargs
            raise ParseError(pos, f"expected ',' or ')', found {value!r}")

    def _lookahead_is_kwarg(self) -> bool:
        nxt = self.tokens[self.i + 1] if self.i + 1 < len(self.tokens) else None
        return nxt is not None and nxt[0] == "punct" and nxt[1] == "="

    def _value(self) -> tuple[object, int]:
        kind, value, pos = self._peek()
        if kind == "number":
            self.i += 1
            return float(value), pos
        if kind == "ident":
            # Identifier or dotted path (airsim.ImageType.Scene); the last
            # segment carries the meaning.
            parts, pos = self._dotted_name()
            return parts[-1], pos
        raise ParseError(pos, f"expected argument value, found {value!r}")

    def _bind(self, cls, method, params, args, kwargs, call_pos) -> Statement:
        if len(args) > len(params):
            raise ParseError(
                call_pos, f"{method} takes {len(params)} arguments, got {len(args)}"
            )
        bound: dict[str, tuple[object, int]] = {}
        for (name, _), arg in zip(params, args):
            bound[name] = arg
        names = {name for name, _ in params}
        for key, arg in kwargs.items():
            if key not in names:
                raise ParseError(arg[1], f"{method} has no parameter {key!r}")
            if key in bound:
                raise ParseError(arg[1], f"{method} got multiple values for {key!r}")
            bound[key] = arg
        missing = [name for name, _ in params if name not in bound]
        if missing:
            raise ParseError(call_pos, f"{method} missing argument {missing[0]!r}")
        values = {}
        for name, kind in params:
            raw, pos = bound[name]
            values[name] = self._coerce(method, name, kind, raw, pos)
        try:
            stmt = cls(**values)
        except ValueError as exc:
            raise ParseError(call_pos, str(exc)) from exc
        if isinstance(stmt, RotateToYaw):
            stmt = replace(stmt, yaw=wrap_yaw(stmt.yaw))
        return stmt

    @staticmethod
    def _coerce(method, name, kind, raw, pos):
        if kind == "float":
            if not isinstance(raw, float):
                raise ParseError(pos, f"{method} argument {name!r} must be numeric")
            return raw
        if kind == "camera":
            if not isinstance(raw, float) or not raw.is_integer() or raw < 0:
                raise ParseError(
                    pos, f"{method} argument {name!r} must be a non-negative integer"
                )
            return int(raw)
        if kind == "imagetype":
            text = raw.lower() if isinstance(raw, str) else None
            if text not in IMAGE_TYPES:
                raise ParseError(
                    pos, f"{method} argument {name!r} must be one of {IMAGE_TYPES}"
                )
            return text
        raise AssertionError(kind)


def _split_statements(text: str):
    """Split source text on newlines and ';', keeping absolute offsets."""
    chunks = []
    start = 0
    for i, ch in enumerate(text):
        if ch in ";\n":
            chunks.append((text[start:i], start))
            start = i + 1
    chunks.append((text[start:], start))
    return [(chunk, base) for chunk, base in chunks if chunk.strip()]


def parse_program(text: str) -> Program:
    """Parse AeroCmd source text into a Program.

    Parsing is total and deterministic: identical input bytes yield identical
    ASTs.  Raises ParseError on unknown methods, arity or keyword mismatches,
    non-numeric arguments, or empty input.
    """
    chunks = _split_statements(text)
    if not chunks:
        raise ParseError(0, "empty input")
    statements = []
    for chunk, base in chunks:
        tokens = _tokenize(chunk, base)
        statements.append(_StatementParser(tokens, base).parse())
    return Program(tuple(statements))


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def render_statement(stmt: Statement) -> str:
    """Canonical single-statement rendering (no receiver, no print wrapper)."""
    if isinstance(stmt, MoveByVelocity):
        # Mixed style: positional velocities, keyword duration.
        return "moveByVelocityAsync({}, {}, {}, duration={})".format(
            format_number(stmt.vx),
            format_number(stmt.vy),
            format_number(stmt.vz),
            format_number(stmt.duration),
        )
    if isinstance(stmt, MoveToPosition):
        return "moveToPositionAsync({}, {}, {}, {})".format(
            format_number(stmt.x),
            format_number(stmt.y),
            format_number(stmt.z),
            format_number(stmt.speed),
        )
    if isinstance(stmt, RotateToYaw):
        return f"rotateToYawAsync({format_number(stmt.yaw)})"
    if isinstance(stmt, GetImage):
        return f"simGetImage({stmt.camera}, {stmt.image_type})"
    return f"{stmt.method}()"


def render_program(program: Program) -> str:
    """Canonical rendering, one statement per line.

    parse_program(render_program(p)) == p for every valid program.
    """
    return "\n".join(render_statement(s) for s in program.statements)


# ---------------------------------------------------------------------------
# Structural equivalence
# ---------------------------------------------------------------------------


def _numbers_close(a: float, b: float, tolerance: float) -> bool:
    return abs(a - b) <= tolerance


def _yaw_close(a: float, b: float, tolerance: float) -> bool:
    return abs(wrap_yaw(a - b)) <= tolerance


def ast_equiv(a: Program, b: Program, tolerance: float = EQUIV_TOLERANCE) -> bool:
    """Structural program equality after normalization.

    Yaw angles compare on the circle (180 == -180); numeric fields compare
    with absolute ``tolerance``.  With tolerance 0 this is a true equivalence
    relation; a positive tolerance is intended for pairwise use only.
    """
    if len(a.statements) != len(b.statements):
        return False
    for sa, sb in zip(a.statements, b.statements):
        if type(sa) is not type(sb):
            return False
        if isinstance(sa, MoveByVelocity):
            if not all(
                _numbers_close(getattr(sa, f), getattr(sb, f), tolerance)
                for f in ("vx", "vy", "vz", "duration")
            ):
                return False
        elif isinstance(sa, MoveToPosition):
            if not all(
                _numbers_close(getattr(sa, f), getattr(sb, f), tolerance)
                for f in ("x", "y", "z", "speed")
            ):
                return False
        elif isinstance(sa, RotateToYaw):
            if not _yaw_close(sa.yaw, sb.yaw, tolerance):
                return False
        elif isinstance(sa, GetImage):
            if sa.camera != sb.camera or sa.image_type != sb.image_type:
                return False
        # nullary statements: type match suffices
    return True


# ---------------------------------------------------------------------------
# Safety validation
# ---------------------------------------------------------------------------


def statement_speed(stmt: Statement) -> float | None:
    """Commanded speed of a statement in m/s, or None when not applicable."""
    if isinstance(stmt, MoveByVelocity):
        return math.sqrt(stmt.vx**2 + stmt.vy**2 + stmt.vz**2)
    if isinstance(stmt, MoveToPosition):
        return stmt.speed
    return None


def validate_program(program: Program, envelope: SafetyEnvelope, start) -> list[Violation]:
    """Check a program against the safety envelope from a starting state.

    Returns ALL violations (empty list means the program is safe to execute).
    Endpoint prediction uses the simulator's own motion model, so a program
    that validates cleanly never leaves the geofence when executed from
    ``start``.  Inputs are never mutated.
    """
    # Local import: kinematics lives with the simulator so that validation and
    # execution share one motion model.
    from .kinematics import predict_statement_end

    violations: list[Violation] = []
    position = tuple(start.position)
    yaw = start.yaw
    landed = start.landed
    fence = envelope.geofence
    for index, stmt in enumerate(program.statements):
        speed = statement_speed(stmt)
        if speed is not None and speed > envelope.max_speed:
            violations.append(
                Violation(
                    index,
                    "speed",
                    f"commanded speed {speed:.6g} m/s exceeds max_speed "
                    f"{envelope.max_speed:.6g} m/s",
                )
            )
        if isinstance(stmt, MoveByVelocity) and stmt.duration > envelope.max_duration:
            violations.append(
                Violation(
                    index,
                    "duration",
                    f"duration {stmt.duration:.6g} s exceeds max_duration "
                    f"{envelope.max_duration:.6g} s",
                )
            )
        position, yaw, landed = predict_statement_end(stmt, position, yaw, landed)
        if not fence.contains(*position):
            violations.append(
                Violation(
                    index,
                    "geofence",
                    f"predicted endpoint ({position[0]:.6g}, {position[1]:.6g}, "
                    f"{position[2]:.6g}) leaves the geofence",
                )
            )
    return violations
