"""
Local time-surfaces around an edge
==================================

A time-surface summarizes the recent activity in a small neighborhood
of a pixel: 1.0 where an event just fired, falling off linearly to 0
over a time constant tau. This demo drives a vertical bar across the
array and renders the surface seen by a pixel on its leading edge.
"""

import numpy as np

from evgesture import (
    MovingBarSpec, SensorGeometry, TimeSurfaceConfig, TimestampMemory,
    extract, gen_moving_bar, is_valid,
)

geometry = SensorGeometry(64, 64, 2)
spec = MovingBarSpec(geometry=geometry, velocity_px_s=200.0, bar_top=24,
                     bar_height=16, start_x=4, jitter_us=0)
clip = gen_moving_bar(spec, seed=0)
stream = clip.stream
print(f"bar sweep: {len(stream)} events")

# The memory stores, per pixel and polarity channel, the timestamp of
# the most recent event. Surfaces are cut out of it on demand.
config = TimeSurfaceConfig(radius=3, tau_us=20_000.0, channels=2)
memory = TimestampMemory(geometry)

last_surface = None
for t, x, y, p in zip(stream.t.tolist(), stream.x.tolist(),
                      stream.y.tolist(), stream.p.tolist()):
    memory.record(t, x, y, p)
    if y == 32 and p == 1 and x == 40:  # mid-sweep, away from the border
        surface = extract(memory, t, x, y, p, config)
        if is_valid(surface, config.radius):
            last_surface = surface

# Render the ON channel of the last valid surface as a character grid.
# The center column is the current edge position (always 1.0); columns
# behind it show older crossings, fading with distance because the bar
# moves at constant speed.
assert last_surface is not None
on = last_surface.values[1]
print(f"surface at pixel ({last_surface.x}, {last_surface.y}), "
      f"t = {last_surface.t / 1e3:.1f} ms, ON channel:")
ramp = " .:-=+*#%@"
for row in on:
    cells = [ramp[min(int(v * (len(ramp) - 1) + 0.5), len(ramp) - 1)]
             for v in row]
    print("   " + " ".join(cells))
print("columns left of center are older edge positions; values are the "
      "linear decay 1 - dt/tau")
print("rows below center are blank in the newest column: those pixels "
      "share this crossing's timestamp but their events arrive after "
      "this one, and the surface only sees the past")
