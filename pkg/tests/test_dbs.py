import math

import numpy as np
import pytest

from evgesture.dbs import (
    DbsConfig, DbsFilter, RetentionStats, cell_index, filter_stream,
    update_activity,
)
from evgesture.events import EventStream, SensorGeometry
from evgesture.oracles import dbs_decisions_eager, dbs_decisions_history
from evgesture.synth import CompositeSpec, gen_composite

DEFAULT_PARAMS = DbsConfig(grid_rows=3, grid_cols=3, tau_b_us=300.0, alpha=2.0)


class TestCellIndex:
    def test_origin(self):
        g = SensorGeometry(304, 240, 2)
        assert cell_index(0, 0, g, DEFAULT_PARAMS) == (0, 0)

    def test_far_corner(self):
        g = SensorGeometry(304, 240, 2)
        assert cell_index(303, 239, g, DEFAULT_PARAMS) == (2, 2)

    def test_center(self):
        g = SensorGeometry(9, 9, 2)
        assert cell_index(4, 4, g, DEFAULT_PARAMS) == (1, 1)

    def test_out_of_bounds(self):
        with pytest.raises(ValueError):
            cell_index(9, 0, SensorGeometry(9, 9, 2), DEFAULT_PARAMS)

    def test_cells_tile_the_array(self):
        g = SensorGeometry(10, 7, 2)
        config = DbsConfig(grid_rows=3, grid_cols=3)
        seen = {cell_index(x, y, g, config)
                for x in range(g.width) for y in range(g.height)}
        assert seen == {(r, c) for r in range(3) for c in range(3)}


class TestUpdateActivity:
    def test_fresh_cell(self):
        assert update_activity(0.0, None, 12345, 300.0) == 1.0

    def test_closed_form_at_delta_tau(self):
        # one decay interval: e^-1 + 1
        assert update_activity(1.0, 0, 300, 300.0) == pytest.approx(
            math.exp(-1) + 1, abs=1e-12)

    def test_simultaneous_events(self):
        a = update_activity(0.0, None, 50, 300.0)
        assert a == 1.0
        assert update_activity(a, 50, 50, 300.0) == 2.0

    def test_time_regression(self):
        with pytest.raises(ValueError, match="regression"):
            update_activity(1.0, 100, 50, 300.0)


class TestProcess:
    def test_first_event_kept(self):
        # A_c = 1, mean = 1/9, 1 >= 2/9
        f = DbsFilter(SensorGeometry(9, 9, 2), DEFAULT_PARAMS)
        assert f.process(0, 4, 4) is True

    def test_concentrated_activity_kept(self):
        f = DbsFilter(SensorGeometry(9, 9, 2), DEFAULT_PARAMS)
        for i in range(20):
            assert f.process(i, 1, 1) is True  # all activity in cell (0,0)

    def test_equal_activity_dropped(self):
        # all 9 cells at identical activity: A_c = mean < 2*mean
        f = DbsFilter(SensorGeometry(9, 9, 2), DEFAULT_PARAMS)
        centers = [(x, y) for y in (1, 4, 7) for x in (1, 4, 7)]
        for x, y in centers:
            f.process(0, x, y)
        decisions = [f.process(0, x, y) for x, y in centers]
        assert decisions == [False] * 9


class TestFilterStream:
    def test_empty(self):
        s = EventStream.empty(SensorGeometry(9, 9, 2))
        kept, stats = filter_stream(DbsFilter(s.geometry, DEFAULT_PARAMS), s)
        assert len(kept) == 0
        assert stats.total == 0
        assert stats.retention == 0.0

    def test_deterministic(self):
        stream = _composite(seed=11)
        masks = []
        for _ in range(2):
            _, stats = filter_stream(DbsFilter(stream.geometry, DEFAULT_PARAMS), stream)
            masks.append(stats.keep_mask)
        assert np.array_equal(*masks)

    def test_output_is_subsequence(self):
        stream = _composite(seed=12)
        kept, stats = filter_stream(DbsFilter(stream.geometry, DEFAULT_PARAMS), stream)
        assert kept == stream.select(stats.keep_mask)

    def test_foreground_background_separation(self):
        ls = _labeled_composite(seed=13)
        _, stats = filter_stream(DbsFilter(ls.stream.geometry, DEFAULT_PARAMS), ls.stream)
        fg = np.array(ls.tags) == "foreground"
        assert stats.keep_mask[fg].mean() >= 0.90
        assert stats.keep_mask[~fg].mean() <= 0.10


def _labeled_composite(seed, n_target=20_000):
    spec = CompositeSpec(
        geometry=SensorGeometry(30, 30, 2), duration_us=200_000,
        fg_region=(0, 0, 10, 10), fg_rate_hz=80_000.0, bg_rate_hz=36_000.0,
    )
    return gen_composite(spec, seed)


def _head(stream, n):
    return stream.select(np.arange(len(stream)) < n)


def _composite(seed):
    return _labeled_composite(seed).stream


class TestAgainstOracles:
    def test_incremental_matches_history_sum(self):
        # literal O(N^2) reference, small stream
        stream = _head(_composite(seed=20), 2000)
        _, stats = filter_stream(DbsFilter(stream.geometry, DEFAULT_PARAMS), stream)
        assert np.array_equal(stats.keep_mask,
                              dbs_decisions_history(stream, DEFAULT_PARAMS))

    def test_eager_oracle_matches_history_sum(self):
        stream = _head(_composite(seed=21), 2000)
        assert np.array_equal(dbs_decisions_eager(stream, DEFAULT_PARAMS),
                              dbs_decisions_history(stream, DEFAULT_PARAMS))

    def test_incremental_matches_eager_at_scale(self):
        stream = _composite(seed=22)
        _, stats = filter_stream(DbsFilter(stream.geometry, DEFAULT_PARAMS), stream)
        assert np.array_equal(stats.keep_mask,
                              dbs_decisions_eager(stream, DEFAULT_PARAMS))


class TestInvariants:
    def test_activity_gains_exactly_one_per_event(self):
        f = DbsFilter(SensorGeometry(9, 9, 2), DEFAULT_PARAMS)
        prev = 0.0
        t = 0
        rng = np.random.default_rng(30)
        for _ in range(100):
            t += int(rng.integers(0, 400))
            f.process(t, 1, 1)
            a = f.activity[0]
            # decayed-from-prev plus the +1 jump
            assert a <= prev + 1.0 + 1e-12
            assert a >= 1.0
            prev = a

    def test_time_scale_invariance(self):
        # decisions depend only on dt/tau
        stream = _head(_composite(seed=31), 3000)
        scaled = EventStream(stream.t * 7, stream.x, stream.y, stream.p,
                             stream.geometry)
        base = DbsConfig(3, 3, 300.0, 2.0)
        big = DbsConfig(3, 3, 2100.0, 2.0)
        _, s1 = filter_stream(DbsFilter(stream.geometry, base), stream)
        _, s2 = filter_stream(DbsFilter(scaled.geometry, big), scaled)
        assert np.array_equal(s1.keep_mask, s2.keep_mask)

    @pytest.mark.parametrize("alpha,expect", [(1.0, True), (0.5, True), (1.5, False)])
    def test_single_cell_grid(self, alpha, expect):
        # 1x1 grid: mean equals the cell, so keep iff alpha <= 1
        config = DbsConfig(1, 1, 300.0, alpha)
        stream = _head(_composite(seed=32), 500)
        _, stats = filter_stream(DbsFilter(stream.geometry, config), stream)
        assert bool(stats.keep_mask.all()) is expect
        if not expect:
            assert not stats.keep_mask.any()
