"""Configuration ingestion, snapshot persistence, CSV, plots, and the CLI."""

import json
import math
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from bqlp import diagnostics as dg
from bqlp import solver as sv
from bqlp import spectral as sp
from bqlp.cli import main
from bqlp.config import ConfigError, load_config, parse_config
from bqlp.snapshot import SnapshotError, load_snapshot, save_snapshot
from bqlp.svgplot import emit_plots, ledger_table
from bqlp.timeseries import COLUMNS, read_timeseries, reintegrate, write_timeseries
from conftest import coverage_scalar, coverage_solenoidal


MINIMAL = {
    "grid": {"n": 16},
    "physics": {"nu": 0.1, "kappa": 0.1},
    "exponents": {"s": 0.5, "sigma": -0.25},
    "time": {"dt": 1e-3, "t_end": 0.05},
    "initial_condition": {"kind": "taylor_green"},
}


def write_cfg(tmp_path, overrides=None, drop=None):
    data = json.loads(json.dumps(MINIMAL))
    for path, value in (overrides or {}).items():
        node = data
        parts = path.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    if drop:
        node = data
        parts = drop.split(".")
        for part in parts[:-1]:
            node = node[part]
        del node[parts[-1]]
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


class TestConfig:
    def test_minimal_with_defaults(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path))
        assert cfg.physics.c == 1.0
        assert cfg.grid.oversample_factor == 2
        assert cfg.grid.dealias_fraction == pytest.approx(2 / 3)
        assert cfg.cfl_limit == 0.5
        assert cfg.output.directory == "out"

    def test_missing_nu(self, tmp_path):
        with pytest.raises(ConfigError) as err:
            load_config(write_cfg(tmp_path, drop="physics.nu"))
        assert err.value.field_path == "physics.nu"

    def test_s_out_of_range_cites_interval(self, tmp_path):
        with pytest.raises(ConfigError, match="1/2 <= s < 1") as err:
            load_config(write_cfg(tmp_path, {"exponents.s": 1.0}))
        assert err.value.field_path == "exponents.s"

    def test_sigma_out_of_range(self, tmp_path):
        with pytest.raises(ConfigError) as err:
            load_config(write_cfg(tmp_path, {"exponents.sigma": 0.0}))
        assert err.value.field_path == "exponents.sigma"

    def test_bad_grid(self, tmp_path):
        with pytest.raises(ConfigError) as err:
            load_config(write_cfg(tmp_path, {"grid.n": 20}))
        assert err.value.field_path == "grid"

    def test_bad_kind(self, tmp_path):
        with pytest.raises(ConfigError) as err:
            load_config(write_cfg(tmp_path, {"initial_condition.kind": "vortex"}))
        assert err.value.field_path == "initial_condition.kind"

    def test_bad_band(self, tmp_path):
        with pytest.raises(ConfigError) as err:
            load_config(write_cfg(tmp_path, {"initial_condition.band": [3, 1]}))
        assert err.value.field_path == "initial_condition.band"

    def test_bad_format(self, tmp_path):
        with pytest.raises(ConfigError) as err:
            load_config(write_cfg(tmp_path, {"output.formats": ["csv", "png"]}))
        assert err.value.field_path == "output.formats"

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="invalid JSON"):
            load_config(path)

    def test_type_errors_name_field(self):
        data = json.loads(json.dumps(MINIMAL))
        data["time"]["dt"] = "fast"
        with pytest.raises(ConfigError) as err:
            parse_config(data)
        assert err.value.field_path == "time.dt"

    def test_gronwall_block(self, tmp_path):
        cfg = load_config(
            write_cfg(tmp_path, {"gronwall": {"C": 2.0, "C6": 1.0, "N": 3}})
        )
        assert cfg.gronwall is not None and cfg.gronwall.N == 3


class TestSnapshot:
    def make_state(self, grid):
        u = coverage_solenoidal(grid, seed=1)
        theta = coverage_scalar(grid, seed=2)
        return sv.SolverState(u, theta, 0.375)

    def test_round_trip_bit_exact(self, tmp_path, grid16):
        state = self.make_state(grid16)
        path = tmp_path / "state.bqlp"
        save_snapshot(state, path, nu=0.1, kappa=0.2)
        loaded, meta = load_snapshot(path)
        assert np.array_equal(loaded.u.coeffs, state.u.coeffs)
        assert np.array_equal(loaded.theta.coeffs, state.theta.coeffs)
        assert loaded.t == state.t
        assert meta["nu"] == 0.1 and meta["kappa"] == 0.2
        assert meta["grid"] == grid16
        # Re-saving reproduces the file byte for byte.
        path2 = tmp_path / "state2.bqlp"
        save_snapshot(loaded, path2, nu=0.1, kappa=0.2)
        assert path.read_bytes() == path2.read_bytes()

    def test_bad_magic(self, tmp_path, grid16):
        path = tmp_path / "state.bqlp"
        save_snapshot(self.make_state(grid16), path)
        raw = bytearray(path.read_bytes())
        raw[0:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(SnapshotError, match="not a BQLP snapshot"):
            load_snapshot(path)

    def test_unsupported_version(self, tmp_path, grid16):
        path = tmp_path / "state.bqlp"
        save_snapshot(self.make_state(grid16), path)
        raw = bytearray(path.read_bytes())
        raw[4] = 2
        path.write_bytes(bytes(raw))
        with pytest.raises(SnapshotError, match="unsupported snapshot version"):
            load_snapshot(path)

    def test_truncated_payload(self, tmp_path, grid16):
        path = tmp_path / "state.bqlp"
        save_snapshot(self.make_state(grid16), path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) // 2])
        with pytest.raises(SnapshotError, match="truncated"):
            load_snapshot(path)

    def test_grid_mismatch(self, tmp_path, grid16):
        path = tmp_path / "state.bqlp"
        save_snapshot(self.make_state(grid16), path)
        with pytest.raises(SnapshotError, match="grid size"):
            load_snapshot(path, expected_n=32)


def small_ledger(grid, n_samples=4, nu=0.5, kappa=0.5):
    settings = dg.LedgerSettings(s=0.5, sigma=-0.25, nu=nu, kappa=kappa)
    ledger = dg.CriterionLedger(settings)
    for i in range(n_samples):
        u = coverage_solenoidal(grid, seed=i)
        theta = coverage_scalar(grid, seed=i + 40)
        dg.update_ledger(ledger, 0.125 * i, u, theta)
    return ledger


class TestTimeseries:
    def test_header_only_for_empty_ledger(self, tmp_path, grid16):
        ledger = dg.CriterionLedger(
            dg.LedgerSettings(s=0.5, sigma=-0.25, nu=0.1, kappa=0.1)
        )
        path = tmp_path / "ts.csv"
        write_timeseries(ledger, path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1
        assert lines[0] == ",".join(COLUMNS)

    def test_row_count(self, tmp_path, grid16):
        ledger = small_ledger(grid16, 2)
        path = tmp_path / "ts.csv"
        write_timeseries(ledger, path)
        assert len(path.read_text().strip().splitlines()) == 3

    def test_reintegration_matches_ledger(self, tmp_path, grid16):
        ledger = small_ledger(grid16)
        path = tmp_path / "ts.csv"
        write_timeseries(ledger, path)
        table = read_timeseries(path)
        int_f = reintegrate(table["t"], table["f"])
        int_bkm = reintegrate(table["t"], table["bkm"])
        assert abs(int_f - ledger.integral_f) <= 1e-12 * max(1.0, abs(ledger.integral_f))
        assert abs(int_bkm - ledger.integral_bkm) <= 1e-12 * max(1.0, abs(ledger.integral_bkm))
        assert table["int_f"][-1] == pytest.approx(ledger.integral_f, rel=1e-15)

    def test_float_round_trip_is_exact(self, tmp_path, grid16):
        ledger = small_ledger(grid16)
        path = tmp_path / "ts.csv"
        write_timeseries(ledger, path)
        table = read_timeseries(path)
        for i, rec in enumerate(ledger.samples):
            assert table["f"][i] == rec.f
            assert table["hs_u"][i] == rec.hs_u

    def test_nan_columns_for_undefined_cutoff(self, tmp_path, grid16):
        ledger = small_ledger(grid16, 2, nu=0.0)
        path = tmp_path / "ts.csv"
        write_timeseries(ledger, path)
        table = read_timeseries(path)
        assert math.isnan(table["Q"][0])
        assert math.isnan(table["f"][0])


class TestPlots:
    def test_four_well_formed_svgs(self, tmp_path, grid16):
        ledger = small_ledger(grid16)
        paths = emit_plots(ledger_table(ledger), tmp_path / "plots")
        assert len(paths) == 4
        for p in paths:
            tree = ET.parse(p)
            assert tree.getroot().tag.endswith("svg")
            dat = p.with_suffix(".dat")
            lines = dat.read_text().strip().splitlines()
            n_cols = len(lines[0].split()) - 1  # header starts with '#'
            for line in lines[1:]:
                assert len(line.split()) == n_cols

    def test_empty_ledger_charts(self, tmp_path, grid16):
        ledger = dg.CriterionLedger(
            dg.LedgerSettings(s=0.5, sigma=-0.25, nu=0.1, kappa=0.1)
        )
        paths = emit_plots(ledger_table(ledger), tmp_path / "plots")
        for p in paths:
            ET.parse(p)

    def test_dat_column_layout(self, tmp_path, grid16):
        ledger = small_ledger(grid16)
        emit_plots(ledger_table(ledger), tmp_path / "plots")
        header = (tmp_path / "plots" / "criterion_vs_vorticity.dat").read_text().splitlines()[0]
        assert header == "# t f bkm"
        header2 = (tmp_path / "plots" / "dissipation_cutoff.dat").read_text().splitlines()[0]
        assert header2 == "# t Q lambda"


def run_config(tmp_path, t_end=0.02, outdir="out", extra=None):
    data = {
        "grid": {"n": 16},
        "physics": {"nu": 0.05, "kappa": 0.05},
        "exponents": {"s": 0.5, "sigma": -0.25},
        "time": {"dt": 2e-3, "t_end": t_end, "diagnostics_stride": 5},
        "initial_condition": {
            "kind": "taylor_green",
            "amplitude": 0.5,
            "theta": {"kind": "thermal_bubble", "amplitude": 0.25},
        },
        "output": {
            "directory": str(tmp_path / outdir),
            "snapshot_stride": 1,
            "formats": ["csv", "svg", "snapshots"],
        },
    }
    for path, value in (extra or {}).items():
        node = data
        parts = path.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    cfg_path = tmp_path / f"{outdir}.json"
    cfg_path.write_text(json.dumps(data))
    return cfg_path


class TestCli:
    def test_validate_ok(self, tmp_path, capsys):
        rc = main(["validate", str(run_config(tmp_path))])
        assert rc == 0
        assert "RESULT status=ok" in capsys.readouterr().out

    def test_validate_shipped_configs(self, capsys):
        root = Path(__file__).resolve().parent.parent
        for name in ("example.json", "decay_ns.json"):
            rc = main(["validate", str(root / "configs" / name)])
            assert rc == 0, name
        assert "RESULT status=ok" in capsys.readouterr().out

    def test_validate_rejects_bad_exponent(self, tmp_path, capsys):
        cfg = run_config(tmp_path, extra={"exponents.s": 1.0})
        rc = main(["validate", str(cfg)])
        assert rc == 1
        out = capsys.readouterr()
        assert "status=invalid" in out.out
        assert "1/2 <= s < 1" in out.err

    def test_unknown_subcommand(self, capsys):
        rc = main(["frobnicate"])
        assert rc == 1
        assert "usage" in capsys.readouterr().err

    def test_run_produces_outputs(self, tmp_path, capsys):
        rc = main(["run", str(run_config(tmp_path))])
        assert rc == 0
        out = tmp_path / "out"
        assert (out / "timeseries.csv").exists()
        assert (out / "final.bqlp").exists()
        assert (out / "plots" / "norms.svg").exists()
        assert list((out / "snapshots").glob("*.bqlp"))
        assert "RESULT status=ok" in capsys.readouterr().out

    def test_run_determinism_byte_identical(self, tmp_path):
        rc1 = main(["run", str(run_config(tmp_path, outdir="a"))])
        rc2 = main(["run", str(run_config(tmp_path, outdir="b"))])
        assert rc1 == rc2 == 0
        csv_a = (tmp_path / "a" / "timeseries.csv").read_bytes()
        csv_b = (tmp_path / "b" / "timeseries.csv").read_bytes()
        assert csv_a == csv_b

    def test_analyze_zero_field_snapshot(self, tmp_path, capsys):
        grid = sp.GridSpec(16)
        state = sv.SolverState(sp.zeros_vector(grid), sp.zeros_scalar(grid), 0.0)
        snap = tmp_path / "zero.bqlp"
        save_snapshot(state, snap, nu=0.1, kappa=0.1)
        out_csv = tmp_path / "an.csv"
        rc = main(["analyze", str(snap), "--s", "0.5", "--sigma", "-0.25", "--out", str(out_csv)])
        assert rc == 0
        table = read_timeseries(out_csv)
        assert table["f"][0] == 0.0
        assert table["Q"][0] == 0.0
        assert table["hs_u"][0] == 0.0
        assert table["bkm"][0] == 0.0

    def test_analyze_matches_in_run_records(self, tmp_path):
        main(["run", str(run_config(tmp_path, outdir="c"))])
        out = tmp_path / "c"
        snaps = sorted((out / "snapshots").glob("*.bqlp"))
        an_csv = tmp_path / "an.csv"
        rc = main(["analyze", *map(str, snaps), "--s", "0.5", "--sigma", "-0.25", "--out", str(an_csv)])
        assert rc == 0
        run_table = read_timeseries(out / "timeseries.csv")
        an_table = read_timeseries(an_csv)
        assert an_table["t"] == run_table["t"]
        for col in ("energy_u", "hs_u", "hsigma_theta", "f", "bkm", "i1", "i2", "i3", "Q"):
            for a, b in zip(an_table[col], run_table[col]):
                assert abs(a - b) <= 1e-12 * max(1.0, abs(b))

    def test_plot_subcommand(self, tmp_path):
        main(["run", str(run_config(tmp_path, outdir="d"))])
        rc = main([
            "plot", str(tmp_path / "d" / "timeseries.csv"),
            "--out", str(tmp_path / "replot"),
        ])
        assert rc == 0
        for name in ("criterion_vs_vorticity", "dissipation_cutoff", "norms", "criterion_integral"):
            ET.parse(tmp_path / "replot" / f"{name}.svg")

    def test_analyze_rejects_corrupt_snapshot(self, tmp_path, capsys):
        bad = tmp_path / "bad.bqlp"
        bad.write_bytes(b"JUNKJUNKJUNK")
        rc = main(["analyze", str(bad)])
        assert rc == 1
        assert "not a BQLP snapshot" in capsys.readouterr().err

    def test_guard_termination_exits_two(self, tmp_path, capsys):
        cfg = run_config(tmp_path, extra={"time.h_half_ceiling": 1e-9})
        rc = main(["run", str(cfg)])
        assert rc == 2
        out = capsys.readouterr().out
        assert "status=terminated" in out
        assert "reason=blowup" in out
        # The last valid state is persisted for post-mortem analysis.
        assert (tmp_path / "out" / "final.bqlp").exists()


class TestThreadControl:
    def test_env_caps_workers(self, monkeypatch):
        monkeypatch.setenv("BQLP_THREADS", "3")
        assert sp.fft_workers() == 3
        monkeypatch.setenv("BQLP_THREADS", "not-a-number")
        assert sp.fft_workers() == 1

    def test_worker_count_does_not_change_results(self, monkeypatch, grid16):
        phys = np.random.default_rng(1).standard_normal(grid16.shape)
        monkeypatch.setenv("BQLP_THREADS", "1")
        one = sp.forward_transform(grid16, phys).coeffs
        monkeypatch.setenv("BQLP_THREADS", "4")
        four = sp.forward_transform(grid16, phys).coeffs
        assert np.max(np.abs(one - four)) < 1e-14
