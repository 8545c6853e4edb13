#!/usr/bin/env python3
"""Regenerate the shipped corpus.json and templates.json in canonical form.

Run from the repository root after editing the entry/family definitions:

    python tools/make_shipped_data.py
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from aerocmd.corpus import Corpus, CorpusEntry, corpus_to_canonical_json, load_templates
from aerocmd.text import Unit

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "aerocmd" / "data"

M = Unit.METERS
MPS = Unit.METERS_PER_SECOND
S = Unit.SECONDS
DEG = Unit.DEGREES
U = Unit.UNITLESS


def entry(id, pattern, template, slots=(), defaults=None, tags=("simple",)):
    return CorpusEntry(
        id=id,
        nl_pattern=pattern,
        program_template=template,
        required_slots=tuple(slots),
        defaults=defaults or {},
        tags=tuple(tags),
    )


ENTRIES = [
    # --- flight control ---
    entry("takeoff", "Take off", "takeoffAsync()"),
    entry("takeoff_launch", "Launch the drone", "takeoffAsync()"),
    entry("takeoff_lift", "Lift off", "takeoffAsync()"),
    entry("land", "Land", "landAsync()"),
    entry("land_drone", "Land the drone", "landAsync()"),
    entry("land_touch", "Touch down", "landAsync()"),
    entry("hover", "Hover", "hoverAsync()"),
    entry("hover_place", "Hover in place", "hoverAsync()"),
    entry("hover_hold", "Hold position", "hoverAsync()"),
    # --- relative moves (velocity style, matching the reference transcript:
    #     the distance value drives both velocity and duration) ---
    entry(
        "move_forward",
        "Move the drone forward {d} meters",
        "moveByVelocityAsync({d}, 0, 0, duration={d})",
        slots=[("d", M)],
        tags=("simple", "transcript"),
    ),
    entry(
        "move_forward_precise",
        "Move the drone forward {d} meters precisely",
        "moveToPositionAsync({d}, 0, -3, 1)",
        slots=[("d", M)],
        tags=("simple", "safe-variant"),
    ),
    entry(
        "move_backward",
        "Move the drone backward {d} meters",
        "moveByVelocityAsync(-{d}, 0, 0, duration={d})",
        slots=[("d", M)],
    ),
    entry(
        "move_left",
        "Move the drone left {d} meters",
        "moveByVelocityAsync(0, -{d}, 0, duration={d})",
        slots=[("d", M)],
    ),
    entry(
        "move_right",
        "Move the drone right {d} meters",
        "moveByVelocityAsync(0, {d}, 0, duration={d})",
        slots=[("d", M)],
    ),
    entry(
        "move_up",
        "Move the drone up {d} meters",
        "moveByVelocityAsync(0, 0, -{d}, duration={d})",
        slots=[("d", M)],
    ),
    entry(
        "move_down",
        "Move the drone down {d} meters",
        "moveByVelocityAsync(0, 0, {d}, duration={d})",
        slots=[("d", M)],
    ),
    entry(
        "fly_velocity",
        "Fly with velocity {vx} {vy} {vz} m/s for {t} seconds",
        "moveByVelocityAsync({vx}, {vy}, {vz}, duration={t})",
        slots=[("vx", U), ("vy", U), ("vz", MPS), ("t", S)],
    ),
    # --- absolute position ---
    entry(
        "goto_position",
        "Go to position {x} {y} {z} at {s} m/s",
        "moveToPositionAsync({x}, {y}, {z}, {s})",
        slots=[("x", U), ("y", U), ("z", U), ("s", MPS)],
    ),
    entry(
        "goto_coordinates",
        "Fly to coordinates {x} {y} {z} at speed {s} m/s",
        "moveToPositionAsync({x}, {y}, {z}, {s})",
        slots=[("x", U), ("y", U), ("z", U), ("s", MPS)],
    ),
    entry(
        "goto_home",
        "Return to the home position",
        "moveToPositionAsync(0, 0, -3, 2)",
    ),
    # --- rotation ---
    entry("rotate", "Rotate to {a} degrees", "rotateToYawAsync({a})", slots=[("a", DEG)]),
    entry(
        "rotate_heading",
        "Turn to heading {a} degrees",
        "rotateToYawAsync({a})",
        slots=[("a", DEG)],
    ),
    entry("rotate_yaw", "Set yaw to {a} degrees", "rotateToYawAsync({a})", slots=[("a", DEG)]),
    entry("rotate_north", "Point the drone north", "rotateToYawAsync(0)"),
    # --- state and sensors ---
    entry(
        "gps",
        "Get the drone's GPS data",
        "getGpsData()",
        tags=("simple", "transcript"),
    ),
    entry("gps_position", "What is the current GPS position", "getGpsData()"),
    entry("gps_report", "Report GPS coordinates", "getGpsData()"),
    entry("state", "Get the drone state", "getMultirotorState()"),
    entry("state_show", "Show the multirotor state", "getMultirotorState()"),
    entry("state_status", "What is the drone status", "getMultirotorState()"),
    # --- camera ---
    entry(
        "camera_live",
        "Return to live camera image",
        "simGetImage(0, scene)",
        tags=("simple", "transcript"),
    ),
    entry("camera_photo", "Take a picture", "simGetImage(0, scene)"),
    entry("camera_view", "Show the camera view", "simGetImage(0, scene)"),
    entry("camera_depth", "Capture a depth image", "simGetImage(0, depth)"),
    # --- administration ---
    entry("reset", "Reset the simulation", "reset()"),
    entry("reset_drone", "Reset the drone", "reset()"),
    # --- skills: multi-statement programs ---
    entry(
        "skill_square_patrol",
        "Patrol a square with side {d} meters",
        "takeoffAsync()\n"
        "moveToPositionAsync({d}, 0, -5, 2)\n"
        "moveToPositionAsync({d}, {d}, -5, 2)\n"
        "moveToPositionAsync(0, {d}, -5, 2)\n"
        "moveToPositionAsync(0, 0, -5, 2)",
        slots=[("d", M)],
        defaults={"d": 20.0},
        tags=("complex", "skill"),
    ),
    entry(
        "skill_orbit_polygon",
        "Orbit the home point in a polygon with radius {r} meters",
        "takeoffAsync()\n"
        "moveToPositionAsync({r}, 0, -5, 2)\n"
        "moveToPositionAsync(0, {r}, -5, 2)\n"
        "moveToPositionAsync(-{r}, 0, -5, 2)\n"
        "moveToPositionAsync(0, -{r}, -5, 2)\n"
        "moveToPositionAsync({r}, 0, -5, 2)",
        slots=[("r", M)],
        defaults={"r": 15.0},
        tags=("complex", "skill"),
    ),
    entry(
        "skill_goto_photograph",
        "Fly to {x} {y} and take a photo",
        "takeoffAsync()\n"
        "moveToPositionAsync({x}, {y}, -{h}, 2)\n"
        "simGetImage(0, scene)",
        slots=[("x", U), ("y", U)],
        defaults={"h": 5.0},
        tags=("complex", "skill"),
    ),
    entry(
        "skill_survey_return",
        "Survey point {x} {y} and return home",
        "takeoffAsync()\n"
        "moveToPositionAsync({x}, {y}, -{h}, 2)\n"
        "simGetImage(0, scene)\n"
        "moveToPositionAsync(0, 0, -{h}, 2)\n"
        "landAsync()",
        slots=[("x", U), ("y", U)],
        defaults={"h": 5.0},
        tags=("complex", "skill"),
    ),
]


# Retrieval generalizes across phrasings through shared tokens, so every
# variant of a family carries the family's anchor token ("forward", "gps",
# "velocity", ...) while generic verbs (move/fly/go) repeat across families
# and keep a low IDF.  A held-out phrasing then still shares its strongest
# token with the in-train variants of its own family.
FAMILIES = [
    {
        "family_id": "takeoff",
        "variants": [
            "Take off",
            "Take off now",
            "Lift off",
            "Lift off now",
            "Take off please",
            "Take off right now",
        ],
        "program_template": "takeoffAsync()",
        "slot_ranges": {},
    },
    {
        "family_id": "land",
        "variants": [
            "Land",
            "Land the drone",
            "Land now",
            "Land here",
            "Land immediately",
            "Land the drone now",
        ],
        "program_template": "landAsync()",
        "slot_ranges": {},
    },
    {
        "family_id": "hover",
        "variants": [
            "Hover",
            "Hover in place",
            "Hover now",
            "Just hover",
            "Hover and hold",
            "Hover in place now",
        ],
        "program_template": "hoverAsync()",
        "slot_ranges": {},
    },
    {
        "family_id": "move_forward",
        "variants": [
            "Move the drone forward {d} meters",
            "Fly forward {d} meters",
            "Go forward {d} meters",
            "Move forward {d} meters",
            "Move the drone forward by {d} meters",
            "Fly the drone forward {d} meters",
        ],
        "program_template": "moveByVelocityAsync({d}, 0, 0, duration={d})",
        "slot_ranges": {"d": [1, 8, 1]},
    },
    {
        "family_id": "move_backward",
        "variants": [
            "Move the drone backward {d} meters",
            "Fly backward {d} meters",
            "Go backward {d} meters",
            "Move backward {d} meters",
            "Move the drone backward by {d} meters",
            "Fly the drone backward {d} meters",
        ],
        "program_template": "moveByVelocityAsync(-{d}, 0, 0, duration={d})",
        "slot_ranges": {"d": [1, 8, 1]},
    },
    {
        "family_id": "move_up",
        "variants": [
            "Move the drone up {d} meters",
            "Fly up {d} meters",
            "Go up {d} meters",
            "Move up {d} meters",
            "Move the drone up by {d} meters",
            "Fly the drone up {d} meters",
        ],
        "program_template": "moveByVelocityAsync(0, 0, -{d}, duration={d})",
        "slot_ranges": {"d": [1, 8, 1]},
    },
    {
        "family_id": "goto_position",
        "variants": [
            "Go to position {x} {y} {z} at {s} m/s",
            "Fly to position {x} {y} {z} at {s} m/s",
            "Move to position {x} {y} {z} at {s} m/s",
            "Navigate to position {x} {y} {z} at {s} m/s",
            "Go to the position {x} {y} {z} at {s} m/s",
            "Fly the drone to position {x} {y} {z} at {s} m/s",
        ],
        "program_template": "moveToPositionAsync({x}, {y}, {z}, {s})",
        "slot_ranges": {"x": [-40, 40, 10], "y": [-40, 40, 10], "z": [-20, -5, 5], "s": [2, 5, 1]},
    },
    {
        "family_id": "fly_velocity",
        "variants": [
            "Fly with velocity {vx} {vy} {vz} m/s for {t} seconds",
            "Move with velocity {vx} {vy} {vz} m/s for {t} seconds",
            "Fly at velocity {vx} {vy} {vz} m/s for {t} seconds",
            "Set velocity to {vx} {vy} {vz} m/s for {t} seconds",
            "Apply velocity {vx} {vy} {vz} m/s for {t} seconds",
            "Cruise at velocity {vx} {vy} {vz} m/s for {t} seconds",
        ],
        "program_template": "moveByVelocityAsync({vx}, {vy}, {vz}, duration={t})",
        "slot_ranges": {"vx": [-3, 3, 1], "vy": [-3, 3, 1], "vz": [-1, 0, 1], "t": [1, 4, 1]},
    },
    {
        "family_id": "rotate_yaw",
        "variants": [
            "Rotate to {a} degrees",
            "Rotate to heading {a} degrees",
            "Rotate the drone to {a} degrees",
            "Rotate to yaw {a} degrees",
            "Rotate to {a} degrees now",
            "Rotate the drone to heading {a} degrees",
        ],
        "program_template": "rotateToYawAsync({a})",
        "slot_ranges": {"a": [-150, 180, 30]},
    },
    {
        "family_id": "get_gps",
        "variants": [
            "Get the drone's GPS data",
            "What is the current GPS position",
            "Report GPS coordinates",
            "Read the GPS data",
            "Show me the GPS data",
            "Get the current GPS fix",
        ],
        "program_template": "getGpsData()",
        "slot_ranges": {},
    },
    {
        "family_id": "get_state",
        "variants": [
            "Get the drone state",
            "Show the multirotor state",
            "Report the vehicle state",
            "Read the drone state",
            "Show me the current state",
            "What is the drone state",
        ],
        "program_template": "getMultirotorState()",
        "slot_ranges": {},
    },
    {
        "family_id": "take_photo",
        "variants": [
            "Return to live camera image",
            "Show the camera view",
            "Capture a photo from the camera",
            "Grab a camera frame",
            "Show the live camera image",
            "Get the camera view",
        ],
        "program_template": "simGetImage(0, scene)",
        "slot_ranges": {},
    },
]


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    corpus = Corpus(ENTRIES)
    (DATA_DIR / "corpus.json").write_text(corpus_to_canonical_json(corpus), encoding="utf-8")
    templates_payload = {"families": FAMILIES}
    (DATA_DIR / "templates.json").write_text(
        json.dumps(templates_payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    load_templates(DATA_DIR / "templates.json")  # validation
    print(f"wrote {len(ENTRIES)} corpus entries and {len(FAMILIES)} template families")


if __name__ == "__main__":
    main()
