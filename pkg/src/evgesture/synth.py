"""Synthetic event streams with known ground truth.

Everything here is a pure function of (spec, seed). Randomness comes from
numpy's PCG64 generator (``np.random.default_rng(seed)``) and Poisson gaps
are drawn by inversion (``-ln(1-U) / rate``), so streams are reproducible
bit-for-bit across platforms.

Moving stimuli emit events only along their contours, mimicking the
sensor's native contour response; blobs emit on an annulus, bars on their
leading and trailing edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .events import ClipRecord, EventStream, SensorGeometry

US = 1_000_000  # microseconds per second


@dataclass
class LabeledStream:
    stream: EventStream
    tags: list[str]  # one provenance tag per event, aligned with order
    label: str = ""


def _finalize(geometry, rows, label) -> LabeledStream:
    """Sort (t, x, y, p, tag) rows by time and pack into a LabeledStream."""
    if not rows:
        return LabeledStream(EventStream.empty(geometry), [], label)
    rows.sort(key=lambda r: r[0])
    t, x, y, p, tags = zip(*rows)
    return LabeledStream(EventStream(t, x, y, p, geometry), list(tags), label)


def _poisson_times(rate_hz: float, duration_us: int, rng: np.random.Generator):
    """Homogeneous Poisson arrival times in [0, duration), by gap inversion."""
    if rate_hz <= 0:
        return []
    times = []
    t = 0.0
    scale = US / rate_hz
    while True:
        t += -math.log(1.0 - rng.random()) * scale
        if t >= duration_us:
            return times
        times.append(int(t))


@dataclass(frozen=True)
class MovingBarSpec:
    geometry: SensorGeometry
    velocity_px_s: float  # horizontal speed, positive = rightward
    bar_top: int
    bar_height: int
    start_x: int = 0
    travel_px: int | None = None  # default: to the array edge
    jitter_us: int = 100


def gen_moving_bar(spec: MovingBarSpec, seed: int) -> LabeledStream:
    """Vertical bar translating horizontally.

    Each row emits one ON event when the leading edge crosses a pixel
    column and one OFF event when the trailing edge does; crossings of one
    row are 1e6/v microseconds apart before the seeded jitter (<= 100 us).
    """
    if spec.velocity_px_s == 0:
        raise ValueError("degenerate trajectory: zero velocity")
    rng = np.random.default_rng(seed)
    g = spec.geometry
    step = abs(spec.velocity_px_s)
    direction = 1 if spec.velocity_px_s > 0 else -1
    travel = spec.travel_px
    if travel is None:
        travel = (g.width - 1 - spec.start_x) if direction > 0 else spec.start_x
    rows = []
    y_range = range(spec.bar_top, min(spec.bar_top + spec.bar_height, g.height))
    for i in range(travel + 1):
        x = spec.start_x + direction * i
        t_cross = i * US / step
        for y in y_range:
            for p, dx in ((1, 0), (0, -direction)):  # leading ON, trailing OFF
                xe = x + dx
                if 0 <= xe < g.width:
                    t = int(t_cross) + int(rng.integers(0, spec.jitter_us + 1))
                    rows.append((t, xe, y, p, "bar"))
    return _finalize(g, rows, "bar")


@dataclass(frozen=True)
class BlobSpec:
    geometry: SensorGeometry
    duration_us: int
    start_x: float
    start_y: float
    velocity_x_px_s: float
    velocity_y_px_s: float
    radius_px: float
    rate_hz: float  # event rate of the whole contour


def gen_translating_blob(spec: BlobSpec, seed: int,
                         tag: str = "blob", label: str = "") -> LabeledStream:
    """Disk translating at constant velocity, emitting on its contour.

    Events appear on an annulus around the blob edge: ON on the leading
    half (motion direction), OFF on the trailing half. Positions falling
    outside the array are clipped away.
    """
    rng = np.random.default_rng(seed)
    g = spec.geometry
    speed = math.hypot(spec.velocity_x_px_s, spec.velocity_y_px_s)
    rows = []
    for t in _poisson_times(spec.rate_hz, spec.duration_us, rng):
        cx = spec.start_x + spec.velocity_x_px_s * t / US
        cy = spec.start_y + spec.velocity_y_px_s * t / US
        angle = rng.random() * 2 * math.pi
        r = spec.radius_px * (0.9 + 0.2 * rng.random())
        x = int(round(cx + r * math.cos(angle)))
        y = int(round(cy + r * math.sin(angle)))
        if not g.contains(x, y):
            continue
        if speed > 0:
            along = (math.cos(angle) * spec.velocity_x_px_s
                     + math.sin(angle) * spec.velocity_y_px_s)
            p = 1 if along >= 0 else 0
        else:
            p = 1
        rows.append((t, x, y, p, tag))
    return _finalize(g, rows, label)


GESTURE_CLASSES = ("up", "down", "left", "right")

# Coordinate maps taking a canonical rightward clip to each class; "left"
# is the exact x-mirror of "right" with identical parameters.
_CLASS_TRANSFORM = {
    "right": lambda x, y, w, h: (x, y),
    "left": lambda x, y, w, h: (w - 1 - x, y),
    "down": lambda x, y, w, h: (y * (w - 1) // (h - 1) if h > 1 else 0,
                                x * (h - 1) // (w - 1) if w > 1 else 0),
    "up": lambda x, y, w, h: (y * (w - 1) // (h - 1) if h > 1 else 0,
                              h - 1 - (x * (h - 1) // (w - 1) if w > 1 else 0)),
}


def gen_gesture_clip(geometry: SensorGeometry, label: str, seed: int,
                     base_speed_px_s: float = 120.0,
                     base_radius_px: float = 6.0,
                     rate_hz: float = 12_000.0) -> LabeledStream:
    """One directional swipe clip: a blob crossing the array.

    Speed, start offset and blob size are randomized (+-30%) from the seed.
    The clip is generated in canonical rightward form and mapped to the
    class direction, so opposite classes with equal parameters are mirror
    images.
    """
    if label not in GESTURE_CLASSES:
        raise ValueError(f"unknown gesture class {label!r}")
    rng = np.random.default_rng(seed)
    w, h = geometry.width, geometry.height
    speed = base_speed_px_s * (0.7 + 0.6 * rng.random())
    radius = base_radius_px * (0.7 + 0.6 * rng.random())
    y0 = h / 2 + (rng.random() - 0.5) * h * 0.3
    duration = int((w - 1) / speed * US)
    canonical = BlobSpec(
        geometry=geometry, duration_us=duration,
        start_x=0.0, start_y=y0,
        velocity_x_px_s=speed, velocity_y_px_s=0.0,
        radius_px=radius, rate_hz=rate_hz,
    )
    clip = gen_translating_blob(canonical, seed=int(rng.integers(2**32)),
                                tag="gesture", label=label)
    transform = _CLASS_TRANSFORM[label]
    s = clip.stream
    xy = [transform(int(x), int(y), w, h) for x, y in zip(s.x, s.y)]
    if xy:
        xs, ys = zip(*xy)
    else:
        xs, ys = (), ()
    return LabeledStream(
        EventStream(s.t, xs, ys, s.p, geometry, validate=False),
        clip.tags, label,
    )


def gen_gesture_set(geometry: SensorGeometry, clips_per_class: int,
                    seed: int, classes=GESTURE_CLASSES) -> list[ClipRecord]:
    """Labeled clip set: ``clips_per_class`` swipes per direction."""
    records = []
    root = np.random.default_rng(seed)
    for label in classes:
        for _ in range(clips_per_class):
            clip_seed = int(root.integers(2**32))
            clip = gen_gesture_clip(geometry, label, clip_seed)
            records.append(
                ClipRecord(source=f"<synthetic:{label}:{clip_seed}>",
                           label=label, subject=f"s{clip_seed % 7:02d}",
                           _stream=clip.stream)
            )
    return records


@dataclass(frozen=True)
class CompositeSpec:
    geometry: SensorGeometry
    duration_us: int
    fg_region: tuple[int, int, int, int]  # x0, y0, x1, y1 (exclusive)
    fg_rate_hz: float
    bg_rate_hz: float  # spatially uniform over the whole array


def gen_composite(spec: CompositeSpec, seed: int) -> LabeledStream:
    """Dense localized foreground plus sparse uniform background.

    Foreground events fall uniformly inside ``fg_region``; background
    events uniformly over the rest of the array (the foreground object
    occludes the background behind it). Tags record which is which.
    """
    rng = np.random.default_rng(seed)
    g = spec.geometry
    x0, y0, x1, y1 = spec.fg_region
    rows = []
    for t in _poisson_times(spec.fg_rate_hz, spec.duration_us, rng):
        rows.append((t, int(rng.integers(x0, x1)), int(rng.integers(y0, y1)),
                     int(rng.integers(0, 2)), "foreground"))
    for t in _poisson_times(spec.bg_rate_hz, spec.duration_us, rng):
        while True:
            x = int(rng.integers(0, g.width))
            y = int(rng.integers(0, g.height))
            if not (x0 <= x < x1 and y0 <= y < y1):
                break
        rows.append((t, x, y, int(rng.integers(0, 2)), "background"))
    return _finalize(g, rows, "composite")
