"""Hierarchical layers of time-surface prototypes.

Each layer holds a bank of N prototype surfaces learned by online
clustering: the first N valid surfaces seed the bank, then each valid
surface pulls its nearest prototype toward itself with a learning rate
that decays with the prototype's match count. A prototype that goes
unmatched for too long is reseeded from the next incoming surface.

After training the banks are frozen and the network re-encodes events:
an event's channel becomes the index of the nearest prototype to its
time-surface. Invalid surfaces emit nothing, so streams only shrink as
they pass through layers.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from .events import Event, EventStream, SensorGeometry
from .surfaces import TimeSurfaceConfig, TimestampMemory, extract

DEFAULT_REINIT_WINDOW = 10_000  # valid surfaces without a match before reseed


@dataclass(frozen=True)
class LayerConfig:
    n_prototypes: int
    radius: int
    tau_us: float
    in_channels: int
    reinit_window: int = DEFAULT_REINIT_WINDOW

    def __post_init__(self):
        if self.n_prototypes < 1:
            raise ValueError("prototype count must be >= 1")

    @property
    def surface_config(self) -> TimeSurfaceConfig:
        return TimeSurfaceConfig(
            radius=self.radius, tau_us=self.tau_us, channels=self.in_channels
        )


class UndertrainedLayerError(RuntimeError):
    """A layer saw fewer valid surfaces than it has prototype slots."""


def nearest_prototype(prototypes: np.ndarray, flat_surface: np.ndarray) -> tuple[int, float]:
    """Index and L2 distance of the closest prototype; ties go to the lowest index.

    ``prototypes`` is the (n, d) stacked bank of flattened prototype values.
    """
    if len(prototypes) == 0:
        raise ValueError("empty prototype bank")
    diff = prototypes - flat_surface
    d2 = np.einsum("ij,ij->i", diff, diff)
    i = int(np.argmin(d2))  # argmin returns the first minimum: lowest index wins
    return i, float(np.sqrt(d2[i]))


def learn_update(prototype: np.ndarray, match_count: int, flat_surface: np.ndarray) -> np.ndarray:
    """Pull a prototype toward a surface, weighted by cosine similarity.

    Learning rate is 1/(1 + match_count); the move is scaled by the cosine
    of the angle between surface and prototype, so orthogonal surfaces
    leave the prototype untouched. Returns the updated prototype array.
    """
    rate = 1.0 / (1.0 + match_count)
    ns2 = float(flat_surface @ flat_surface)
    nc2 = float(prototype @ prototype)
    if ns2 == 0.0 or nc2 == 0.0:  # cannot occur for valid surfaces; guarded anyway
        return prototype.copy()
    cos = float(flat_surface @ prototype) / math.sqrt(ns2 * nc2)
    step = rate * cos
    # Surfaces and prototypes are componentwise non-negative, so cos >= 0;
    # clamp keeps the update a convex combination even if that ever breaks.
    step = min(max(step, 0.0), 1.0)
    return prototype + step * (flat_surface - prototype)


class Layer:
    """One stage of the hierarchy: timestamp memory plus a prototype bank.

    Strictly sequential during learning. ``memory`` is per-stream state and
    must be reset between clips; the prototype bank persists.
    """

    def __init__(self, config: LayerConfig, geometry: SensorGeometry):
        self.config = config
        self.geometry = SensorGeometry(geometry.width, geometry.height, config.in_channels)
        self.memory = TimestampMemory(self.geometry)
        self._surface_config = config.surface_config
        self._min_sum = 2 * config.radius  # validity threshold
        # Bank rows are flattened channel-major surfaces; only the first
        # n_filled rows are live.
        self.bank = np.zeros((config.n_prototypes, self._surface_config.size))
        self.n_filled = 0
        self.match_counts: list[int] = []
        self.last_match_tick: list[int] = []
        self.tick = 0  # valid surfaces processed
        self.learning = True

    @property
    def bank_full(self) -> bool:
        return self.n_filled == self.config.n_prototypes

    @property
    def prototypes(self) -> list[np.ndarray]:
        return [self.bank[i].copy() for i in range(self.n_filled)]

    def prototype_matrix(self) -> np.ndarray:
        return self.bank[: self.n_filled].copy()

    def reset_memory(self) -> None:
        self.memory.reset()

    def freeze(self) -> None:
        if not self.bank_full:
            raise UndertrainedLayerError(
                f"layer with N={self.config.n_prototypes} saw only "
                f"{self.n_filled} valid surfaces"
            )
        self.learning = False

    def _stalest(self) -> int | None:
        window = self.config.reinit_window
        worst, worst_age = None, window
        for i, last in enumerate(self.last_match_tick):
            age = self.tick - last
            if age > worst_age:
                worst, worst_age = i, age
        return worst

    def forward_event(self, t: int, x: int, y: int, p: int) -> Event | None:
        """Process one event; returns the re-encoded event or None.

        None means the event was consumed: its surface was invalid, or the
        bank is still warming up (unstable ids are never emitted).
        """
        self.memory.record(t, x, y, p)
        surface = extract(self.memory, t, x, y, p, self._surface_config)
        flat = surface.values.ravel()
        if flat.sum() < self._min_sum:
            return None  # invalid; the event stays recorded for later surfaces
        idx = self.process_surface(flat)
        return None if idx is None else Event(t, x, y, idx)

    def process_surface(self, flat: np.ndarray) -> int | None:
        """Cluster one valid flattened surface; returns the assigned
        prototype id, or None while the bank is warming up.

        During learning the surface either seeds an empty slot, reseeds
        the stalest unmatched prototype, or pulls its nearest prototype
        toward itself. When frozen it is only matched.
        """
        self.tick += 1
        if not self.learning:
            diff = self.bank - flat
            return int(np.einsum("ij,ij->i", diff, diff).argmin())

        if not self.bank_full:
            self.bank[self.n_filled] = flat
            self.n_filled += 1
            self.match_counts.append(1)
            self.last_match_tick.append(self.tick)
            return None  # warm-up: no stable ids yet
        stale = self._stalest()
        if stale is not None:
            self.bank[stale] = flat
            self.match_counts[stale] = 1
            self.last_match_tick[stale] = self.tick
            return stale
        diff = self.bank - flat
        idx = int(np.einsum("ij,ij->i", diff, diff).argmin())
        self.bank[idx] = learn_update(self.bank[idx], self.match_counts[idx], flat)
        self.match_counts[idx] += 1
        self.last_match_tick[idx] = self.tick
        return idx


@dataclass(frozen=True)
class NetworkConfig:
    layers: tuple[LayerConfig, ...]
    merge_polarity: bool = True

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if b.in_channels != a.n_prototypes:
                raise ValueError(
                    "layer chaining broken: next layer expects "
                    f"{b.in_channels} channels, previous emits {a.n_prototypes}"
                )


class Network:
    """Cascade of layers; each event traverses all layers before the next."""

    def __init__(self, config: NetworkConfig, geometry: SensorGeometry):
        self.config = config
        self.geometry = geometry
        self.layers = [Layer(lc, geometry) for lc in config.layers]

    @property
    def out_channels(self) -> int:
        return self.config.layers[-1].n_prototypes

    @property
    def frozen(self) -> bool:
        return all(not layer.learning for layer in self.layers)

    def reset_memories(self) -> None:
        for layer in self.layers:
            layer.reset_memory()

    def _merge(self, p: int) -> int:
        return 0 if self.config.merge_polarity else p

    def forward_stream(self, stream: EventStream, learn_upto: int | None = None) -> EventStream:
        """Push a stream through the cascade; returns the end layer's output.

        ``learn_upto`` bounds the cascade during sequential training: only
        layers [0, learn_upto] see events. Memories are reset first; streams
        are always processed against fresh per-clip context.
        """
        self.reset_memories()
        layers = self.layers if learn_upto is None else self.layers[: learn_upto + 1]
        out_t, out_x, out_y, out_p = [], [], [], []
        merge = self.config.merge_polarity
        ts, xs, ys, ps = (stream.t.tolist(), stream.x.tolist(),
                          stream.y.tolist(), stream.p.tolist())
        for t, x, y, p in zip(ts, xs, ys, ps):
            ev = Event(t, x, y, 0 if merge else p)
            for layer in layers:
                ev = layer.forward_event(ev.t, ev.x, ev.y, ev.p)
                if ev is None:
                    break
            else:
                out_t.append(ev.t)
                out_x.append(ev.x)
                out_y.append(ev.y)
                out_p.append(ev.p)
        geom = SensorGeometry(
            self.geometry.width, self.geometry.height, layers[-1].config.n_prototypes
        )
        if not out_t:
            return EventStream.empty(geom)
        return EventStream(out_t, out_x, out_y, out_p, geom, validate=False)


def train(network: Network, clips, epochs: int = 1, mode: str = "joint") -> Network:
    """Train the prototype banks online and freeze the network.

    ``joint`` (default): every event traverses the full cascade with all
    layers learning, in one or more passes. ``sequential``: layer 1 trains
    to completion and freezes, then layer 2, and so on.

    Raises UndertrainedLayerError (naming the layer) if any bank never
    filled.
    """
    if mode not in ("joint", "sequential"):
        raise ValueError(f"unknown training mode: {mode!r}")
    streams = [c.stream if hasattr(c, "stream") else c for c in clips]
    if mode == "joint":
        for _ in range(epochs):
            for s in streams:
                network.forward_stream(s)
        for i, layer in enumerate(network.layers):
            try:
                layer.freeze()
            except UndertrainedLayerError as e:
                raise UndertrainedLayerError(f"layer {i + 1}: {e}") from None
    else:
        for i, layer in enumerate(network.layers):
            for _ in range(epochs):
                for s in streams:
                    network.forward_stream(s, learn_upto=i)
            try:
                layer.freeze()
            except UndertrainedLayerError as e:
                raise UndertrainedLayerError(f"layer {i + 1}: {e}") from None
    return network


# ---------------------------------------------------------------------------
# Serialization: versioned little-endian binary, bit-exact round-trip.
#
# Layout: magic "HNW1"; u8 merge flag; u32 layer count; per layer a header
# {u32 N, u32 R, f64 tau_us, u32 in_channels, u32 reinit_window} followed by
# N flattened prototypes as f64 little-endian (channel-major) and N u64
# match counts. Geometry {u16 w, u16 h} precedes the layer count.

_NET_MAGIC = b"HNW1"


def save_network(network: Network) -> bytes:
    if not network.frozen:
        raise ValueError("only frozen networks are serialized")
    out = [_NET_MAGIC]
    out.append(struct.pack("<BHHI", int(network.config.merge_polarity),
                           network.geometry.width, network.geometry.height,
                           len(network.layers)))
    for layer in network.layers:
        c = layer.config
        out.append(struct.pack("<IIdII", c.n_prototypes, c.radius, c.tau_us,
                               c.in_channels, c.reinit_window))
        for proto in layer.prototypes:
            out.append(np.asarray(proto, dtype="<f8").tobytes())
        out.append(np.asarray(layer.match_counts, dtype="<u8").tobytes())
    return b"".join(out)


def load_network(data: bytes) -> Network:
    if data[:4] != _NET_MAGIC:
        raise ValueError("bad magic: not a network file")
    off = 4
    merge, width, height, n_layers = struct.unpack_from("<BHHI", data, off)
    off += struct.calcsize("<BHHI")
    layer_configs, banks, counts = [], [], []
    for _ in range(n_layers):
        n, r, tau, in_ch, window = struct.unpack_from("<IIdII", data, off)
        off += struct.calcsize("<IIdII")
        cfg = LayerConfig(n, r, tau, in_ch, window)
        size = cfg.surface_config.size
        protos = np.frombuffer(data, dtype="<f8", count=n * size, offset=off)
        off += n * size * 8
        mc = np.frombuffer(data, dtype="<u8", count=n, offset=off)
        off += n * 8
        layer_configs.append(cfg)
        banks.append(protos.reshape(n, size).copy())
        counts.append([int(v) for v in mc])
    camera_channels = 2 if merge else layer_configs[0].in_channels
    net = Network(NetworkConfig(tuple(layer_configs), merge_polarity=bool(merge)),
                  SensorGeometry(width, height, camera_channels))
    for layer, bank, mc in zip(net.layers, banks, counts):
        layer.bank = bank
        layer.n_filled = len(bank)
        layer.match_counts = mc
        layer.last_match_tick = [0] * len(mc)
        layer.freeze()
    return net
