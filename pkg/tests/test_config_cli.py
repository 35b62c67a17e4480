import os

import numpy as np
import pytest

from evgesture import cli
from evgesture.config import (
    ConfigError, config_echo, format_kv, parse_config, parse_kv,
)
from evgesture.events import (
    SensorGeometry, read_binary_events, read_text_events, write_binary_events,
)
from evgesture.synth import gen_gesture_set

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


class TestConfigParsing:
    def test_e5_architecture(self):
        with open(os.path.join(CONFIG_DIR, "e05.cfg")) as f:
            config = parse_config(f.read())
        assert len(config.layers) == 2
        assert (config.layers[0].n, config.layers[0].r, config.layers[0].tau_us) == (8, 2, 10_000.0)
        assert (config.layers[1].n, config.layers[1].r, config.layers[1].tau_us) == (8, 2, 100_000.0)
        assert config.k == 7
        assert config.dbs is not None
        assert config.dbs.tau_b_us == 300.0
        assert config.dbs.alpha == 2.0
        assert (config.dbs.grid_rows, config.dbs.grid_cols) == (3, 3)

    @pytest.mark.parametrize("name,layers,k,dbs,pool", [
        ("e01.cfg", [(32, 6, 5000.0)], 1, False, (1, 1)),
        ("e02.cfg", [(48, 6, 5000.0)], 1, False, (1, 1)),
        ("e03.cfg", [(64, 6, 5000.0)], 1, False, (1, 1)),
        ("e04.cfg", [(8, 2, 10_000.0)], 7, True, (1, 1)),
        ("e06.cfg", [(8, 2, 10_000.0)], 7, False, (1, 1)),
        ("e07.cfg", [(8, 2, 10_000.0), (8, 2, 100_000.0)], 7, False, (1, 1)),
        ("e08.cfg", [(8, 2, 10_000.0)], 7, True, (1, 1)),
        ("e09.cfg", [(8, 2, 10_000.0), (8, 2, 100_000.0)], 7, True, (1, 1)),
        ("e10.cfg", [(8, 2, 10_000.0), (64, 2, 100_000.0)], 11, False, (3, 3)),
        ("e11.cfg", [(8, 2, 10_000.0), (64, 2, 100_000.0)], 11, False, (3, 3)),
    ])
    def test_all_experiment_rows_parse(self, name, layers, k, dbs, pool):
        with open(os.path.join(CONFIG_DIR, name)) as f:
            config = parse_config(f.read())
        assert [(l.n, l.r, l.tau_us) for l in config.layers] == layers
        assert config.k == k
        assert (config.dbs is not None) == dbs
        assert (config.pooling.grid_rows, config.pooling.grid_cols) == pool

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config("layers.1.n = 8\nlayers.1.r = 2\n"
                         "layers.1.tau_us = 1\nbogus.key = 1\n")

    def test_missing_layer_field(self):
        with pytest.raises(ConfigError, match="layers.1.tau_us"):
            parse_config("layers.1.n = 8\nlayers.1.r = 2\n")

    def test_kv_round_trip(self):
        pairs = {"a.b": "1", "c": "x y", "d.e.f": "3.5"}
        assert parse_kv(format_kv(pairs)) == pairs

    def test_config_echo_reparses(self):
        with open(os.path.join(CONFIG_DIR, "e10.cfg")) as f:
            config = parse_config(f.read())
        again = parse_config(format_kv(config_echo(config)))
        assert again == config


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    geometry = SensorGeometry(48, 48, 2)
    clips = gen_gesture_set(geometry, 4, seed=123)
    lines = []
    for i, clip in enumerate(clips):
        name = f"clip_{i:02d}.evs"
        (root / name).write_bytes(write_binary_events(clip.stream))
        lines.append(f"{name}\t{clip.label}\ts{i % 3}")
    (root / "manifest.tsv").write_text("".join(l + "\n" for l in lines))
    (root / "train.cfg").write_text(
        "seed = 1\ndbs.enabled = true\nlayers.1.n = 4\nlayers.1.r = 2\n"
        "layers.1.tau_us = 10000\npooling.grid = 2x2\nknn.k = 3\n"
    )
    return root


class TestCli:
    def test_convert_round_trip(self, dataset, tmp_path):
        src = str(dataset / "clip_00.evs")
        txt = str(tmp_path / "a.txt")
        back = str(tmp_path / "b.evs")
        assert cli.main(["convert", src, txt, "--to", "text"]) == 0
        assert cli.main(["convert", txt, back, "--geometry", "48x48"]) == 0
        with open(src, "rb") as f:
            original = read_binary_events(f.read())
        with open(back, "rb") as f:
            restored = read_binary_events(f.read())
        # geometry differs (text has no header) but events must match
        assert np.array_equal(original.t, restored.t)
        assert np.array_equal(original.x, restored.x)

    def test_convert_bad_magic_exit_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.evs"
        bad.write_bytes(b"not an event file")
        assert cli.main(["convert", str(bad), str(tmp_path / "o.txt"),
                         "--to", "text"]) == 2
        assert "bad.evs" in capsys.readouterr().err

    def test_usage_error_exit_1(self, capsys):
        assert cli.main(["no-such-command"]) == 1

    def test_filter_defaults_echoed(self, dataset, tmp_path, capsys):
        out = str(tmp_path / "f.evs")
        assert cli.main(["filter", str(dataset / "clip_00.evs"), out]) == 0
        report = parse_kv(capsys.readouterr().out)
        assert report["filter.grid"] == "3x3"
        assert report["filter.tau_b_us"] == "300"
        assert report["filter.alpha"] == "2"
        kept, total = int(report["filter.kept"]), int(report["filter.total"])
        assert float(report["filter.retention"]) == pytest.approx(
            kept / total, abs=1e-4)

    def test_filter_output_subsequence(self, dataset, tmp_path):
        out = tmp_path / "f.evs"
        cli.main(["filter", str(dataset / "clip_01.evs"), str(out)])
        with open(dataset / "clip_01.evs", "rb") as f:
            original = read_binary_events(f.read())
        filtered = read_binary_events(out.read_bytes())
        assert len(filtered) <= len(original)
        assert set(zip(filtered.t, filtered.x, filtered.y)) <= set(
            zip(original.t, original.x, original.y))

    def test_train_eval_and_determinism(self, dataset, tmp_path, capsys):
        manifest = str(dataset / "manifest.tsv")
        config = str(dataset / "train.cfg")
        m1, m2 = str(tmp_path / "m1.bin"), str(tmp_path / "m2.bin")
        assert cli.main(["train", manifest, config, m1]) == 0
        assert cli.main(["train", manifest, config, m2]) == 0
        with open(m1, "rb") as f1, open(m2, "rb") as f2:
            assert f1.read() == f2.read()  # byte-identical models

        r1, r2 = str(tmp_path / "r1.txt"), str(tmp_path / "r2.txt")
        assert cli.main(["eval", manifest, m1, "--report", r1]) == 0
        capsys.readouterr()
        assert cli.main(["eval", manifest, m2, "--report", r2]) == 0
        capsys.readouterr()
        p1, p2 = [parse_kv(open(p).read()) for p in (r1, r2)]
        for volatile in ("wall_clock_s",):
            p1.pop(volatile), p2.pop(volatile)
        assert p1 == p2
        assert 0.0 <= float(p1["accuracy"]) <= 1.0
        # confusion rows sum to per-class test counts (4 clips per class)
        for label in p1["labels"].split(","):
            assert sum(int(v) for v in p1[f"confusion.{label}"].split(",")) == 4

    def test_train_missing_manifest_exit_2(self, dataset, tmp_path):
        assert cli.main(["train", str(tmp_path / "none.tsv"),
                         str(dataset / "train.cfg"), str(tmp_path / "m.bin")]) == 2

    def test_bench_reports_stages(self, dataset, tmp_path, capsys):
        manifest = str(dataset / "manifest.tsv")
        config = str(dataset / "train.cfg")
        assert cli.main(["bench", manifest, config, "--runs", "3"]) == 0
        out = capsys.readouterr().out
        pairs = parse_kv("\n".join(l for l in out.splitlines()
                                   if not l.startswith("#")))
        for stage in ("dbs", "layers", "full"):
            assert float(pairs[f"bench.{stage}.events_per_s"]) > 0

    def test_bench_empty_manifest(self, tmp_path, dataset, capsys):
        manifest = tmp_path / "empty.tsv"
        manifest.write_text("")
        assert cli.main(["bench", str(manifest), str(dataset / "train.cfg")]) == 0
        assert "n/a" in capsys.readouterr().out

    def test_synth_writes_dataset(self, tmp_path, capsys):
        out = str(tmp_path / "synthset")
        assert cli.main(["synth", out, "--clips-per-class", "2",
                         "--seed", "9", "--geometry", "32x32"]) == 0
        lines = open(os.path.join(out, "manifest.tsv")).read().splitlines()
        assert len(lines) == 8
        for line in lines:
            path, label, subject = line.split("\t")
            full = os.path.join(out, path)
            assert os.path.exists(full)
            assert os.path.exists(full + ".tags")
            with open(full, "rb") as f:
                stream = read_binary_events(f.read())
            tags = open(full + ".tags").read().splitlines()
            assert len(tags) == len(stream)

    def test_synth_deterministic(self, tmp_path):
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        for out in (a, b):
            cli.main(["synth", out, "--clips-per-class", "1", "--seed", "5",
                      "--geometry", "32x32"])
        fa = sorted(os.listdir(a))
        assert fa == sorted(os.listdir(b))
        for name in fa:
            with open(os.path.join(a, name), "rb") as f1, \
                 open(os.path.join(b, name), "rb") as f2:
                assert f1.read() == f2.read()
