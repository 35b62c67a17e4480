"""Command-line interface.

Subcommands: convert, filter, train, eval, bench, synth.
Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import os
import struct
import sys

from . import classify, pipeline as pl
from .config import ConfigError, format_kv, parse_config
from .dbs import DbsConfig, DbsFilter, filter_stream
from .events import (
    SensorGeometry, StreamError, load_manifest,
    read_binary_events, read_text_events, write_binary_events, write_text_events,
)
from .network import load_network, save_network
from .synth import GESTURE_CLASSES, gen_gesture_clip

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we use 1
        self.print_usage(sys.stderr)
        raise SystemExit_(EXIT_USAGE, message)


class SystemExit_(Exception):
    def __init__(self, code, message=""):
        super().__init__(message)
        self.code = code


def _parse_geometry(value: str) -> tuple[int, int]:
    try:
        w, h = value.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise StreamError(f"expected WIDTHxHEIGHT, got {value!r}") from None


def _parse_grid(value: str) -> tuple[int, int]:
    r, c = _parse_geometry(value)
    return r, c


def _read_events(path: str, geometry: str | None, channels: int):
    with open(path, "rb") as f:
        data = f.read()
    if path.endswith(".txt"):
        if geometry is None:
            raise StreamError(f"{path}: text input needs --geometry WxH")
        w, h = _parse_geometry(geometry)
        return read_text_events(data, SensorGeometry(w, h, channels))
    try:
        return read_binary_events(data)
    except StreamError as e:
        raise StreamError(f"{path}: {e}") from None


# ---------------------------------------------------------------------------
# Combined model file: config echo + frozen network + k-NN model.

_MODEL_MAGIC = b"EVGM"


def _save_bundle(path, config_text, network, model):
    net_bytes = save_network(network)
    knn_bytes = classify.save_model(model)
    cfg_bytes = config_text.encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MODEL_MAGIC)
        for blob in (cfg_bytes, net_bytes, knn_bytes):
            f.write(struct.pack("<I", len(blob)))
            f.write(blob)


def _load_bundle(path):
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != _MODEL_MAGIC:
        raise StreamError(f"{path}: bad magic: not a model bundle")
    off = 4
    blobs = []
    for _ in range(3):
        (n,) = struct.unpack_from("<I", data, off)
        off += 4
        blobs.append(data[off : off + n])
        off += n
    config = parse_config(blobs[0].decode("utf-8"))
    return config, load_network(blobs[1]), classify.load_model(blobs[2])


# ---------------------------------------------------------------------------
# Subcommands.

def cmd_convert(args) -> int:
    stream = _read_events(args.input, args.geometry, args.channels)
    data = (write_text_events(stream) if args.to == "text"
            else write_binary_events(stream))
    with open(args.output, "wb") as f:
        f.write(data)
    return EXIT_OK


def cmd_filter(args) -> int:
    stream = _read_events(args.input, args.geometry, args.channels)
    rows, cols = _parse_grid(args.grid)
    config = DbsConfig(grid_rows=rows, grid_cols=cols,
                       tau_b_us=args.tau_b, alpha=args.alpha)
    kept, stats = filter_stream(DbsFilter(stream.geometry, config), stream)
    with open(args.output, "wb") as f:
        f.write(write_binary_events(kept))
    report = {
        "filter.grid": f"{rows}x{cols}",
        "filter.tau_b_us": f"{args.tau_b:g}",
        "filter.alpha": f"{args.alpha:g}",
        "filter.total": str(stats.total),
        "filter.kept": str(stats.kept),
        "filter.retention": f"{stats.retention:.4f}",
    }
    sys.stdout.write(format_kv(report))
    return EXIT_OK


def cmd_train(args) -> int:
    with open(args.config, "r", encoding="utf-8") as f:
        config_text = f.read()
    config = parse_config(config_text)
    clips = load_manifest(args.manifest)
    trained = pl.train_pipeline(config, clips)
    _save_bundle(args.model, config_text, trained.network, trained.model)
    print(f"trained {len(config.layers)}-layer network on {len(clips)} clips "
          f"-> {args.model}")
    return EXIT_OK


def cmd_eval(args) -> int:
    config, network, model = _load_bundle(args.model)
    clips = load_manifest(args.manifest)
    trained = pl.TrainedPipeline(config=config, network=network, model=model)
    report = pl.evaluate_pipeline(trained, clips)
    sys.stdout.write(report.to_text())
    if args.report:
        with open(args.report, "w", encoding="utf-8") as f:
            f.write(format_kv(report.to_pairs()))
    return EXIT_OK


def cmd_bench(args) -> int:
    with open(args.config, "r", encoding="utf-8") as f:
        config_text = f.read()
    config = parse_config(config_text)
    clips = load_manifest(args.manifest)
    total = sum(len(c.stream) for c in clips)
    if total == 0:
        print("bench: n/a (no events)")
        return EXIT_OK
    trained = pl.train_pipeline(config, clips)
    bench = pl.benchmark(trained, clips, runs=args.runs)
    sys.stdout.write(format_kv(bench.to_pairs()))
    print(f"# single-threaded, median of {bench.runs} runs, "
          "spread = max-min throughput")
    return EXIT_OK


def cmd_synth(args) -> int:
    import numpy as np
    os.makedirs(args.outdir, exist_ok=True)
    w, h = _parse_geometry(args.geometry)
    geometry = SensorGeometry(w, h, 2)
    root = np.random.default_rng(args.seed)
    manifest_lines = []
    for label in args.classes:
        for i in range(args.clips_per_class):
            clip_seed = int(root.integers(2**32))
            clip = gen_gesture_clip(geometry, label, clip_seed)
            name = f"{label}_{i:03d}.evs"
            with open(os.path.join(args.outdir, name), "wb") as f:
                f.write(write_binary_events(clip.stream))
            with open(os.path.join(args.outdir, name + ".tags"), "w") as f:
                f.write("".join(tag + "\n" for tag in clip.tags))
            manifest_lines.append(f"{name}\t{label}\ts{clip_seed % 7:02d}")
    manifest = os.path.join(args.outdir, "manifest.tsv")
    with open(manifest, "w", encoding="utf-8") as f:
        f.write("".join(line + "\n" for line in manifest_lines))
    print(f"wrote {len(manifest_lines)} clips + manifest to {args.outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evgesture",
                     description="Event-camera gesture recognition pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert between text and EVS1 formats")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--to", choices=("text", "binary"), default="binary")
    p.add_argument("--geometry", help="WxH, required for .txt input")
    p.add_argument("--channels", type=int, default=2)
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("filter", help="dynamic background suppression")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--grid", default="3x3")
    p.add_argument("--tau-b", type=float, default=300.0, help="microseconds")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--geometry")
    p.add_argument("--channels", type=int, default=2)
    p.set_defaults(fn=cmd_filter)

    p = sub.add_parser("train", help="train a pipeline from a manifest")
    p.add_argument("manifest")
    p.add_argument("config")
    p.add_argument("model")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a trained model on a manifest")
    p.add_argument("manifest")
    p.add_argument("model")
    p.add_argument("--report", help="write machine-readable key = value report")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("bench", help="per-stage throughput benchmark")
    p.add_argument("manifest")
    p.add_argument("config")
    p.add_argument("--runs", type=int, default=5)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("synth", help="generate a synthetic gesture dataset")
    p.add_argument("outdir")
    p.add_argument("--classes", nargs="+", default=list(GESTURE_CLASSES))
    p.add_argument("--clips-per-class", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--geometry", default="64x64")
    p.set_defaults(fn=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except SystemExit_ as e:
        if str(e):
            print(f"error: {e}", file=sys.stderr)
        return e.code
    except (StreamError, ConfigError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # internal invariant violation
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
