import json
import os

import pytest

import faith_bench
from conftest import PROTOCOL_CONFIG
from faith_bench import BenchResult
from faith_errors import ConfigError, InvalidEncodingError

SIZES = [8192, 16384, 32768]


def _frame(tmp_path, results):
    path = str(tmp_path / "synthetic.csv")
    faith_bench.write_csv(results, path)
    return faith_bench.read_csv(path)


def _row(scenario, size, mean, **kwargs):
    return BenchResult(scenario, size, 5, mean, mean, 0.0, **kwargs)


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    out_dir = str(tmp_path_factory.mktemp("bench"))
    summary = faith_bench.bench_suite(
        sizes=SIZES, reps=5, out_dir=out_dir, config=PROTOCOL_CONFIG, processes=1,
        pre_iterations=5, ledger_records=5, seed=3,
    )
    return out_dir, summary


# -------------------------------------------------------------------------
def test_from_samples():
    result = BenchResult.from_samples("se_enc", 10, [1.0, 2.0, 3.0, 4.0, 5.0], threads=2)
    assert (result.reps, result.mean_ms, result.median_ms, result.threads) == (5, 3.0, 3.0, 2)
    assert result.stddev_ms == pytest.approx(1.5811, rel=1e-3)


def test_csv_schema_line(tmp_path):
    frame = _frame(tmp_path, [_row("se_enc", 1, 1.0)])
    assert list(frame.columns) == faith_bench.CSV_COLUMNS
    assert (tmp_path / "synthetic.csv").read_text().splitlines()[0] == "# schema faith-bench-v1"

    (tmp_path / "old.csv").write_text("scenario,size_bytes\nse_enc,1\n")
    with pytest.raises(InvalidEncodingError):
        faith_bench.read_csv(str(tmp_path / "old.csv"))


def test_linear_fit(tmp_path):
    frame = _frame(tmp_path, [_row("se_enc", size, 2.0 * size + 5) for size in (1, 2, 3, 4)]
                   + [_row("se_dec", 1, 1.0), _row("se_dec", 2, 2.0)])
    assert faith_bench.linear_fit_r2(frame, "se_enc") == pytest.approx(1.0)
    assert faith_bench.linear_fit_r2(frame, "se_dec") is None


def test_ratios(tmp_path):
    frame = _frame(tmp_path, [
        _row("verify_time", 1, 10.0), _row("verify_time", 2, 12.0),
        _row("zkp_verify", 1, 5.0), _row("zkp_verify", 4, 20.0),
        _row("flat_hash_recompute", 1, 10.0), _row("flat_hash_recompute", 4, 100.0),
        _row("proof_size", 1, 0.1, proof_bytes=1000), _row("proof_size", 4, 0.1, proof_bytes=1100),
        _row("verify_time", 8, 0.0, error="boom"),
    ])
    assert faith_bench.constancy_ratio(frame) == pytest.approx(1.2)
    assert faith_bench.speedup_ratio(frame) == {"size_bytes": 4, "ratio": 0.2, "reduction_percent": pytest.approx(80.0)}
    assert faith_bench.proof_size_spread(frame) == pytest.approx(0.1)
    assert faith_bench.summarize(frame)["failed_scenarios"] == ["verify_time"]


def test_suite_argument_checks(tmp_path):
    with pytest.raises(ConfigError):
        faith_bench.bench_suite(["nothing"], SIZES, out_dir=str(tmp_path))
    with pytest.raises(ConfigError):
        faith_bench.bench_suite(["se_enc"], SIZES, reps=4, out_dir=str(tmp_path))
    with pytest.raises(ConfigError):
        faith_bench.bench_suite(["pre_ops"], SIZES, pre_iterations=2, out_dir=str(tmp_path))
    with pytest.raises(ConfigError):
        faith_bench.bench_suite(["se_enc"], [0], out_dir=str(tmp_path))


# -------------------------------------------------------------------------
def test_suite_rows(suite):
    out_dir, summary = suite
    frame = faith_bench.read_csv(os.path.join(out_dir, faith_bench.CSV_NAME))
    assert summary["failed_scenarios"] == []
    for scenario in ("se_enc", "se_dec", "prove_time", "proof_size", "verify_time", "zkp_verify",
                     "flat_hash_recompute", "commit_recompute"):
        assert sorted(frame[frame["scenario"] == scenario]["size_bytes"]) == SIZES
    assert sorted(summary["pre_ops_ms"]) == sorted(faith_bench.PRE_OPERATIONS)
    assert set(frame[frame["scenario"].isin(["ledger_put", "ledger_get"])]["size_bytes"]) == {0}
    assert (frame["reps"] >= 5).all()
    assert (frame[frame["scenario"] == "proof_size"]["proof_bytes"] > 0).all()


def test_suite_summary(suite):
    out_dir, summary = suite
    with open(os.path.join(out_dir, faith_bench.SUMMARY_NAME), encoding="utf-8") as handle:
        assert json.load(handle) == summary
    assert summary["schema"] == "faith-bench-v1"
    assert summary["speedup"]["size_bytes"] == SIZES[-1]
    assert summary["se_enc_r2"] is not None
    assert summary["verify_constancy_ratio"] >= 1.0
    assert not os.listdir(os.path.join(out_dir, "work")) or all(
        name.startswith("ledger-") for name in os.listdir(os.path.join(out_dir, "work"))
    )


def test_suite_plots(suite, tmp_path):
    out_dir, summary = suite
    names = sorted(os.path.basename(path) for path in summary["plots"])
    assert names == sorted(list(faith_bench.PLOTS) + ["pre_ops.svg"])

    again = faith_bench.plot_results(summary["csv"], str(tmp_path))
    for path in again:
        with open(path, "rb") as fresh, open(os.path.join(out_dir, os.path.basename(path)), "rb") as first:
            assert fresh.read() == first.read()


def test_failing_scenario_is_recorded(tmp_path, monkeypatch):
    def broken(run, size):
        raise RuntimeError("disk on fire")

    monkeypatch.setitem(faith_bench.SCENARIOS, "se_dec", broken)
    summary = faith_bench.bench_suite(["se_dec", "pre_ops"], [8192], reps=5, out_dir=str(tmp_path),
                                      config=PROTOCOL_CONFIG, processes=1, pre_iterations=5, plots=False)
    assert summary["failed_scenarios"] == ["se_dec"]
    assert summary["plots"] == []
    frame = faith_bench.read_csv(summary["csv"])
    assert frame[frame["scenario"] == "se_dec"]["error"].iloc[0] == "disk on fire"


# -------------------------------------------------------------------------
# Full-size runs on the native curve.  The chunk hash is sha256 so that re-hashing the opened
# chunks runs in hashlib rather than the pure-Python Poseidon2 permutation.
NATIVE_CONFIG = {"curve": "bn254", "hash_alg": "sha256"}
NATIVE_SIZES = [faith_bench.MIB, 16 * faith_bench.MIB, 256 * faith_bench.MIB]


@pytest.fixture(scope="module")
def native_suite(tmp_path_factory):
    pytest.importorskip("charm.toolbox.pairinggroup")
    return faith_bench.bench_suite(
        ["pre_ops", "proof_size", "zkp_verify", "flat_hash_recompute"], NATIVE_SIZES, reps=5,
        out_dir=str(tmp_path_factory.mktemp("native-bench")), config=NATIVE_CONFIG,
        pre_iterations=1000, seed=5, plots=False,
    )


@pytest.mark.slow
def test_native_pre_operations_under_50_ms(native_suite):
    assert native_suite["failed_scenarios"] == []
    assert sorted(native_suite["pre_ops_ms"]) == sorted(faith_bench.PRE_OPERATIONS)
    for name, mean_ms in native_suite["pre_ops_ms"].items():
        assert mean_ms < 50.0, name


@pytest.mark.slow
def test_native_verify_within_tenth_of_flat_hash(native_suite):
    speedup = native_suite["speedup"]
    assert speedup["size_bytes"] == 256 * faith_bench.MIB
    assert speedup["ratio"] <= 0.10


@pytest.mark.slow
def test_native_proof_size_flat_across_sizes(native_suite):
    assert native_suite["proof_size_spread"] <= 0.10
