import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_config, make_weights
from snndse import dse
from snndse.config import ConfigError
from snndse.dse import (
    SweepRow,
    enumerate_configs,
    format_sweep_csv,
    format_sweep_report,
    pareto_front,
    pareto_indices,
    parse_sweep_spec,
    run_sweep,
)
from snndse.spikeio import ImageSet


def _images(rng, count=4, side=4, classes=4):
    return ImageSet(
        images=rng.integers(0, 256, (count, side, side), dtype=np.uint8),
        labels=(np.arange(count) % classes).astype(np.int64),
    )


def _row(config_id, cycles, lut, energy=0.0, accuracy=0.0, **kw):
    return SweepRow(
        config_id=config_id, lhr=(1,), timesteps=1, pcr=1,
        cycles_mean=cycles, lut=lut, reg=0.0, bram=0,
        energy_j=energy, accuracy=accuracy, **kw,
    )


class TestSweepSpec:
    def test_parse(self):
        spec = parse_sweep_spec(
            "[sweep]\nlhr = 1 2 4 / 1 2 / 1\ntimesteps = 8 16\npcr = 30\n"
            "budget = 4\nobjectives = cycles lut\n"
        )
        assert spec.lhr_choices == ((1, 2, 4), (1, 2), (1,))
        assert spec.timestep_choices == (8, 16)
        assert spec.pcr_choices == (30,)
        assert spec.sample_budget == 4
        assert spec.objectives == ("cycles", "lut")

    def test_defaults(self):
        spec = parse_sweep_spec("[sweep]\nlhr = 1\ntimesteps = 4\npcr = 1\n")
        assert spec.sample_budget == 1
        assert spec.objectives == ("cycles", "lut", "energy", "accuracy")

    def test_bad_objective(self):
        with pytest.raises(ConfigError, match="objectives"):
            parse_sweep_spec("[sweep]\nlhr = 1\ntimesteps = 4\npcr = 1\nobjectives = area\n")

    def test_missing_lhr(self):
        with pytest.raises(ConfigError, match="lhr"):
            parse_sweep_spec("[sweep]\ntimesteps = 4\npcr = 1\n")


class TestEnumerate:
    def test_cartesian_product_order(self):
        base = make_config("16-8-4", (1, 1), timesteps=4, classes=4)
        spec = parse_sweep_spec(
            "[sweep]\nlhr = 1 2 4 / 1 2 4\ntimesteps = 2 4 8\npcr = 1\n"
        )
        configs = enumerate_configs(spec, base)
        assert len(configs) == 3 * 3 * 3
        assert [cid for cid, _ in configs] == [f"cfg{i:04d}" for i in range(27)]
        # lexicographic: first block fixes lhr=(1,1) and walks timesteps
        assert configs[0][1].lhr == (1, 1) and configs[0][1].timesteps == 2
        assert configs[1][1].timesteps == 4
        assert configs[3][1].lhr == (1, 2)
        assert configs[9][1].lhr == (2, 1)

    def test_invalid_pcr_skipped_with_warning(self, caplog):
        base = make_config("16-8-4", (1, 1), timesteps=4, classes=4)
        spec = parse_sweep_spec("[sweep]\nlhr = 1 / 1\ntimesteps = 4\npcr = 1 3\n")
        with caplog.at_level(logging.WARNING, logger="snndse.dse"):
            configs = enumerate_configs(spec, base)
        assert len(configs) == 1  # pcr=3 incompatible with 4 outputs over 4 classes
        assert any("skipping" in rec.message for rec in caplog.records)

    def test_memory_plan_follows_lhr(self):
        base = make_config("16-8-4", (1, 1), timesteps=4, classes=4)
        spec = parse_sweep_spec("[sweep]\nlhr = 4 / 1\ntimesteps = 4\npcr = 1\n")
        (_, cfg), = enumerate_configs(spec, base)
        assert cfg.memory[0].block_count == 2
        assert cfg.memory[0].neurons_per_block == 4
        assert cfg.memory[0].block_depth == 4 * 16

    def test_choice_list_length_checked(self):
        base = make_config("16-8-4", (1, 1), timesteps=4, classes=4)
        spec = parse_sweep_spec("[sweep]\nlhr = 1\ntimesteps = 4\npcr = 1\n")
        with pytest.raises(ConfigError, match="choice lists"):
            enumerate_configs(spec, base)


class TestRunSweep:
    def test_deterministic_and_ordered(self, rng, monkeypatch):
        base = make_config("16-8-4", (1, 1), timesteps=3, classes=4)
        ws = make_weights(base, np.random.default_rng(0))
        images = _images(np.random.default_rng(1))
        spec = parse_sweep_spec("[sweep]\nlhr = 1 2 / 1\ntimesteps = 2 3\npcr = 1\nbudget = 2\n")
        configs = enumerate_configs(spec, base)
        rows_a = run_sweep(configs, ws, images, seed=5, budget=2)
        monkeypatch.setenv("SNNDSE_THREADS", "4")
        rows_b = run_sweep(configs, ws, images, seed=5, budget=2)
        monkeypatch.setenv("SNNDSE_THREADS", "1")
        rows_c = run_sweep(configs, ws, images, seed=5, budget=2)
        assert rows_a == rows_b == rows_c
        assert [r.config_id for r in rows_a] == [c[0] for c in configs]

    def test_lhr_rows_share_accuracy_and_order_cycles(self, rng):
        base = make_config("16-8-4", (1, 1), timesteps=3, classes=4)
        ws = make_weights(base, np.random.default_rng(0))
        images = _images(np.random.default_rng(1))
        spec = parse_sweep_spec("[sweep]\nlhr = 1 2 / 1\ntimesteps = 3\npcr = 1\nbudget = 3\n")
        rows = run_sweep(enumerate_configs(spec, base), ws, images, seed=5, budget=3)
        r1, r2 = rows
        assert r1.lhr == (1, 1) and r2.lhr == (2, 1)
        assert r1.accuracy == r2.accuracy  # behavior invariant under LHR
        assert r1.cycles_mean <= r2.cycles_mean

    def test_budget_validated(self, rng):
        base = make_config("16-8-4", (1, 1), timesteps=3, classes=4)
        ws = make_weights(base, np.random.default_rng(0))
        images = _images(np.random.default_rng(1))
        with pytest.raises(ConfigError, match="budget"):
            run_sweep([("cfg0000", base)], ws, images, seed=0, budget=0)
        with pytest.raises(ConfigError, match="budget"):
            run_sweep([("cfg0000", base)], ws, images, seed=0, budget=99)

    def test_row_failure_recorded_not_raised(self, rng):
        base = make_config("16-8-4", (1, 1), timesteps=3, classes=4)
        ws = make_weights(base, np.random.default_rng(0))
        bad = make_weights(make_config("16-6-4", (1, 1), timesteps=3, classes=4),
                           np.random.default_rng(0))
        images = _images(np.random.default_rng(1))
        rows = run_sweep([("cfg0000", base)], bad, images, seed=0, budget=1)
        assert rows[0].error is not None
        assert np.isnan(rows[0].cycles_mean)


class TestPareto:
    def test_hand_example(self):
        rows = [_row("a", 10, 100), _row("b", 20, 50), _row("c", 15, 120)]
        front = pareto_front(rows, ("cycles", "lut"))
        assert [r.config_id for r in front] == ["a", "b"]

    def test_single_row(self):
        rows = [_row("a", 10, 100)]
        assert pareto_front(rows, ("cycles", "lut")) == rows

    def test_duplicates_both_kept(self):
        rows = [_row("a", 10, 100), _row("b", 10, 100)]
        assert len(pareto_front(rows, ("cycles", "lut"))) == 2

    def test_accuracy_maximized(self):
        rows = [_row("a", 10, 100, accuracy=0.5), _row("b", 10, 100, accuracy=0.9)]
        front = pareto_front(rows, ("cycles", "accuracy"))
        assert [r.config_id for r in front] == ["b"]

    def test_failed_rows_excluded(self):
        rows = [_row("a", float("nan"), 1, error="boom"), _row("b", 10, 100)]
        front = pareto_front(rows, ("cycles", "lut"))
        assert [r.config_id for r in front] == ["b"]

    @given(
        n=st.integers(1, 40),
        cols=st.integers(1, 4),
        data=st.data(),
    )
    @settings(max_examples=60, deadline=None)
    def test_matches_brute_force(self, n, cols, data):
        rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
        matrix = rng.integers(0, 6, (n, cols)).astype(float)
        maximize = rng.random(cols) < 0.5
        got = set(pareto_indices(matrix, maximize))
        signed = matrix.copy()
        signed[:, maximize] *= -1
        want = {
            i
            for i in range(n)
            if not any(
                j != i
                and np.all(signed[j] <= signed[i])
                and np.any(signed[j] < signed[i])
                for j in range(n)
            )
        }
        assert got == want


class TestOutput:
    def test_csv_layout(self):
        rows = [
            SweepRow("cfg0000", (1, 2, 3), 8, 30, 1234.0, 60000.0, 41000.0, 12,
                     1.234567e-05, 0.75),
        ]
        csv = format_sweep_csv(rows)
        lines = csv.split("\n")
        assert lines[0] == dse.CSV_HEADER
        assert lines[1] == "cfg0000,(1,2,3),8,30,1234,60000,41000,12,1.23457e-05,0.75"
        assert csv.endswith("\n") and "\r" not in csv

    def test_nan_serialized(self):
        csv = format_sweep_csv([_row("a", float("nan"), 1.0, error="x")])
        assert ",nan," in csv.split("\n")[1]

    def test_report_flags_pareto(self):
        rows = [_row("a", 10, 100), _row("b", 20, 50), _row("c", 15, 120)]
        import json

        doc = json.loads(format_sweep_report(rows, ("cycles", "lut")))
        flags = {r["config_id"]: r["pareto"] for r in doc["rows"]}
        assert flags == {"a": True, "b": True, "c": False}
