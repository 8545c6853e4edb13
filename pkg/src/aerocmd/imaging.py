"""Synthetic camera: deterministic PNG renders of the vehicle's forward view.

Pixel content is a pure function of (position, yaw, image_type): a yaw-aligned
horizon, a checkerboard ground plane projected by altitude, and a corner text
block encoding the pose.  Identical states yield byte-identical images.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, ImageDraw

WIDTH, HEIGHT = 256, 144
FOCAL = WIDTH / 2.0  # 90 degree horizontal field of view
CHECKER_CELL = 5.0  # metres
SUPPORTED_CAMERAS = (0,)
IMAGE_TYPES = ("scene", "depth")

SKY_TOP = np.array([70, 110, 200], dtype=np.float64)
SKY_HORIZON = np.array([170, 200, 235], dtype=np.float64)
GROUND_A = np.array([72, 120, 70], dtype=np.float64)
GROUND_B = np.array([120, 168, 110], dtype=np.float64)


class UnknownCamera(ValueError):
    pass


class UnknownImageType(ValueError):
    pass


def render_image(state, camera: int, image_type: str) -> tuple[bytes, dict]:
    """Render the forward camera view, returning (png_bytes, metadata)."""
    if camera not in SUPPORTED_CAMERAS:
        raise UnknownCamera(f"camera {camera} is not available (supported: 0)")
    if image_type not in IMAGE_TYPES:
        raise UnknownImageType(f"image type {image_type!r} (supported: scene, depth)")

    x, y, z = state.position
    yaw_rad = np.radians(state.yaw)
    altitude = max(0.1, -z)  # eye height above the ground plane, metres

    # Ray directions in the camera frame (forward, right, down), NED-aligned
    # at yaw 0, pitch-free.
    cols = np.arange(WIDTH, dtype=np.float64) - (WIDTH - 1) / 2.0
    rows = np.arange(HEIGHT, dtype=np.float64) - (HEIGHT - 1) / 2.0
    right, down = np.meshgrid(cols, rows)
    forward = np.full_like(right, FOCAL)

    cos_y, sin_y = np.cos(yaw_rad), np.sin(yaw_rad)
    dir_n = forward * cos_y - right * sin_y
    dir_e = forward * sin_y + right * cos_y
    dir_d = down

    below = dir_d > 0.0
    t = np.where(below, altitude / np.where(below, dir_d, 1.0), 0.0)
    ground_n = x + t * dir_n
    ground_e = y + t * dir_e

    if image_type == "scene":
        # Sky: vertical gradient down to the horizon row.
        frac = np.clip((down - down.min()) / max(-down.min(), 1.0), 0.0, 1.0)
        sky = SKY_TOP + (SKY_HORIZON - SKY_TOP) * frac[..., None]
        checker = (
            np.floor(ground_n / CHECKER_CELL) + np.floor(ground_e / CHECKER_CELL)
        ).astype(np.int64) % 2
        ground = np.where(checker[..., None] == 0, GROUND_A, GROUND_B)
        pixels = np.where(below[..., None], ground, sky)
    else:
        # Depth: distance along the ray, darker with range; sky is far-field.
        dist = t * np.sqrt(dir_n**2 + dir_e**2 + dir_d**2) / FOCAL
        shade = np.where(below, 255.0 / (1.0 + dist / 25.0), 0.0)
        pixels = np.repeat(shade[..., None], 3, axis=2)

    image = Image.fromarray(pixels.astype(np.uint8), "RGB")
    draw = ImageDraw.Draw(image)
    pose_text = "x={:.1f} y={:.1f} z={:.1f} yaw={:.0f}".format(x, y, z, state.yaw)
    draw.rectangle([2, 2, 170, 14], fill=(0, 0, 0))
    draw.text((4, 3), pose_text, fill=(255, 255, 255))

    buffer = io.BytesIO()
    image.save(buffer, format="PNG")
    metadata = {
        "camera": camera,
        "image_type": image_type,
        "width": WIDTH,
        "height": HEIGHT,
        "position": {"x_val": x, "y_val": y, "z_val": z},
        "yaw": state.yaw,
    }
    return buffer.getvalue(), metadata
