"""End-to-end tests of the ptnn-lrtc harness, driven in-process through main()."""

import asyncio
import csv

import numpy as np
import pytest
from PIL import Image

from lrtc_cli.cli import build_parser, main, spec_from_args
from lrtc_cli.controller import ExperimentController, exit_code_for
from lrtc_cli.runners import ExperimentSpec, PSweepRunner, UsageError
from lrtc_cli.runners.base import summary_path
from lrtc_cli.runners.sweeps import p_grid
from ptnn import gen_mask, read_tensor, write_mask, write_tensor
from ptnn.errors import (
    DimensionMismatchError,
    DomainError,
    MetricError,
    NumericalFailureError,
    TensorFormatError,
)

FAST = ["--max-iters", "15"]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# Parsing and dispatch
# ---------------------------------------------------------------------------


def test_parser_maps_flags_to_spec(tmp_path):
    args = build_parser().parse_args(
        ["p-sweep", "--p-values=-1,0.5", "--lambda", "0.2", "--beta-max", "50",
         "--dims", "8,8,3", "--rank", "2", "--sr", "0.4", "--out", str(tmp_path / "o.csv")]
    )
    spec = spec_from_args(args)
    assert spec.kind == "p-sweep"
    assert spec.ps == [-1.0, 0.5]
    assert spec.dims == (8, 8, 3)
    assert spec.ranks == [2] and spec.srs == [0.4]
    assert spec.overrides == {"lam": 0.2, "beta_max": 50.0}
    assert spec.trials == 3 and spec.base_seed == 0


def test_paper_scale_flag_and_alias():
    parser = build_parser()
    for flag in ("--paper-scale", "--full-scale"):
        spec = spec_from_args(parser.parse_args(["phase-diagram", flag]))
        assert spec.full_scale
    assert not spec_from_args(parser.parse_args(["phase-diagram"])).full_scale


def test_image_flags_map_to_inputs(tmp_path):
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    spec = spec_from_args(build_parser().parse_args(["image", "--images", f"{a},{b}"]))
    assert spec.kind == "image"
    assert spec.inputs["images"] == [a, b]
    assert spec.ps is None and spec.srs is None


def test_no_command_is_usage_error():
    assert main([]) == 1


def test_unknown_flag_is_usage_error(tmp_path):
    assert main(["p-sweep", "--bogus", "--out", str(tmp_path / "o.csv")]) == 1


def test_bad_list_is_usage_error(tmp_path):
    assert main(["size-sweep", "--sizes", "4,x", "--out", str(tmp_path / "o.csv")]) == 1


def test_invalid_solver_parameter_is_usage_error(tmp_path):
    out = tmp_path / "o.csv"
    code = main(["p-sweep", "--p-values", "2", "--dims", "6,6,2", "--out", str(out)])
    assert code == 1


def test_zero_trials_is_usage_error(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["phase-diagram", "--trials", "0", "--out", str(out)]) == 1
    assert not out.exists()


@pytest.mark.parametrize(
    "exc, code",
    [
        (UsageError("x"), 1),
        (DomainError("x"), 1),
        (DimensionMismatchError("x"), 1),
        (MetricError("x"), 1),
        (FileNotFoundError("x"), 2),
        (TensorFormatError("x"), 2),
        (NumericalFailureError("x", slice_index=0), 3),
        (RuntimeError("x"), 3),
    ],
)
def test_exit_codes(exc, code):
    assert exit_code_for(exc) == code


def test_controller_unknown_command(tmp_path):
    controller = ExperimentController()
    controller.register_runner(PSweepRunner())
    assert controller.list_runners() == ["p-sweep"]
    spec = ExperimentSpec(kind="nope", out=tmp_path / "o")
    result = asyncio.run(controller.execute("nope", spec))
    assert result["exit_code"] == 1
    assert not result["success"]


# ---------------------------------------------------------------------------
# complete
# ---------------------------------------------------------------------------


def test_complete_full_sampling_recovers_input(tmp_path, tensor_file):
    out = tmp_path / "run.csv"
    assert main(["complete", "--input", str(tensor_file), "--sr", "1", "--out", str(out)]) == 0
    recovered = read_tensor(tmp_path / "run_recovered.tns")
    np.testing.assert_array_equal(recovered, read_tensor(tensor_file))
    (row,) = read_rows(out)
    assert float(row["rse"]) == 0.0
    assert float(row["psnr"]) == 300.0
    assert float(row["ssim"]) == 1.0
    assert float(row["sr"]) == 1.0
    assert int(row["converged"]) == 1
    assert int(row["iterations"]) == 0
    assert row["objective"] == ""


def test_complete_with_mask_file_and_trace(tmp_path, tensor_file):
    mask_path = tmp_path / "m.msk"
    write_mask(mask_path, gen_mask((6, 6, 3), 0.6, seed=5))
    out, trace = tmp_path / "run.csv", tmp_path / "trace.csv"
    code = main(["complete", "--input", str(tensor_file), "--mask", str(mask_path),
                 "--out", str(out), "--trace", str(trace), *FAST])
    assert code == 0
    (row,) = read_rows(out)
    assert row["mask"] == str(mask_path)
    assert float(row["sr"]) == pytest.approx(round(0.6 * 108) / 108)
    trace_rows = read_rows(trace)
    assert len(trace_rows) == int(row["iterations"])
    assert {"f_value", "step_norm", "residual", "gamma", "beta", "f_raw"} <= set(trace_rows[0])
    scale = float(row["scale"])
    assert float(row["lambda_effective"]) == pytest.approx(float(row["lambda"]) * scale)
    assert float(row["objective"]) == pytest.approx(float(trace_rows[-1]["f_raw"]))
    assert float(trace_rows[-1]["f_raw"]) == pytest.approx(
        float(trace_rows[-1]["f_value"]) * scale**2
    )


def test_complete_missing_mask_writes_nothing(tmp_path, tensor_file):
    out = tmp_path / "run.csv"
    code = main(["complete", "--input", str(tensor_file), "--mask", str(tmp_path / "nope.msk"),
                 "--out", str(out)])
    assert code == 1
    assert not out.exists()
    assert not (tmp_path / "run_recovered.tns").exists()


def test_complete_needs_mask_or_rate(tmp_path, tensor_file):
    assert main(["complete", "--input", str(tensor_file), "--out", str(tmp_path / "o.csv")]) == 1


def test_complete_mask_dims_mismatch(tmp_path, tensor_file):
    mask_path = tmp_path / "m.msk"
    write_mask(mask_path, gen_mask((6, 6, 4), 0.5, seed=5))
    code = main(["complete", "--input", str(tensor_file), "--mask", str(mask_path),
                 "--out", str(tmp_path / "o.csv")])
    assert code == 1


def test_complete_malformed_tensor_is_io_error(tmp_path):
    bad = tmp_path / "bad.tns"
    bad.write_bytes(b"TNS3 garbage")
    assert main(["complete", "--input", str(bad), "--sr", "0.5",
                 "--out", str(tmp_path / "o.csv")]) == 2


def test_complete_image(tmp_path, rng):
    src = tmp_path / "card.ppm"
    Image.fromarray(rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)).save(src)
    out = tmp_path / "img.csv"
    assert main(["complete", "--input", str(src), "--sr", "0.7", "--out", str(out), *FAST]) == 0
    assert (tmp_path / "img_recovered.ppm").exists()
    with Image.open(tmp_path / "img_recovered.ppm") as img:
        assert img.size == (16, 16)
    (row,) = read_rows(out)
    assert -1.0 <= float(row["ssim"]) <= 1.0


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def test_metrics_identical_files(tmp_path, rng):
    path = tmp_path / "x.tns"
    write_tensor(path, rng.standard_normal((4, 5, 2)))
    out = tmp_path / "metrics.csv"
    args = ["metrics", "--truth", str(path), "--estimate", str(path),
            "--out", str(out)]
    assert main(args) == 0
    assert main(args) == 0
    rows = read_rows(out)
    assert len(rows) == 2
    assert float(rows[0]["rse"]) == 0.0
    assert float(rows[0]["psnr"]) == 300.0
    assert rows[0]["ssim"] == ""


def test_metrics_rgb_has_ssim(tmp_path, rng):
    x = rng.random((8, 8, 3))
    truth, est = tmp_path / "t.tns", tmp_path / "e.tns"
    write_tensor(truth, x)
    write_tensor(est, np.clip(x + 0.05, 0, 1))
    out = tmp_path / "metrics.csv"
    assert main(["metrics", "--truth", str(truth), "--estimate", str(est),
                 "--out", str(out)]) == 0
    (row,) = read_rows(out)
    assert 0 < float(row["ssim"]) < 1


def test_metrics_zero_truth_is_usage_error(tmp_path):
    truth, est = tmp_path / "t.tns", tmp_path / "e.tns"
    write_tensor(truth, np.zeros((3, 3, 2)))
    write_tensor(est, np.ones((3, 3, 2)))
    out = tmp_path / "m.csv"
    assert main(["metrics", "--truth", str(truth), "--estimate", str(est),
                 "--out", str(out)]) == 1
    assert not out.exists()


def test_metrics_shape_mismatch(tmp_path):
    a, b = tmp_path / "a.tns", tmp_path / "b.tns"
    write_tensor(a, np.ones((2, 2, 2)))
    write_tensor(b, np.ones((2, 2, 3)))
    assert main(["metrics", "--truth", str(a), "--estimate", str(b),
                 "--out", str(tmp_path / "m.csv")]) == 1


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def test_default_p_grid():
    grid = p_grid()
    assert len(grid) == 30
    assert grid[0] == -2.0 and grid[-1] == 0.9
    assert -1.0 in grid


def p_sweep_args(out, *extra):
    return ["p-sweep", "--dims", "8,8,3", "--rank", "1", "--sr", "0.5", "--p-values=-1,0.5",
            "--trials", "2", "--seed", "4", "--out", str(out), *FAST, *extra]


def test_p_sweep_rows_and_summary(tmp_path):
    out = tmp_path / "p.csv"
    assert main(p_sweep_args(out)) == 0
    rows = read_rows(out)
    assert [(r["p"], r["trial"], r["seed"]) for r in rows] == [
        ("-1.0", "0", "4"), ("-1.0", "1", "5"), ("0.5", "0", "4"), ("0.5", "1", "5"),
    ]
    summary = read_rows(summary_path(out))
    assert [r["p"] for r in summary] == ["-1.0", "0.5"]
    for cell in summary:
        trials = [float(r["rse"]) for r in rows if r["p"] == cell["p"]]
        assert float(cell["mean_rse"]) == pytest.approx(np.mean(trials))
    assert all(v != "" for r in rows for v in r.values())


def test_p_sweep_is_deterministic(tmp_path):
    first, second, parallel = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert main(p_sweep_args(first)) == 0
    assert main(p_sweep_args(second)) == 0
    assert main(p_sweep_args(parallel, "--workers", "3")) == 0
    assert first.read_bytes() == second.read_bytes() == parallel.read_bytes()
    assert summary_path(first).read_bytes() == summary_path(parallel).read_bytes()


def test_size_sweep_grid(tmp_path):
    out = tmp_path / "size.csv"
    code = main(["size-sweep", "--sizes", "5,6", "--srs", "0.3,0.6", "--rank", "1",
                 "--trials", "2", "--out", str(out), *FAST])
    assert code == 0
    rows = read_rows(out)
    assert len(rows) == 8
    assert [(r["n"], r["sr"]) for r in rows[::2]] == [
        ("5", "0.3"), ("5", "0.6"), ("6", "0.3"), ("6", "0.6"),
    ]
    assert len(read_rows(summary_path(out))) == 4


def test_depth_sweep_grid(tmp_path):
    out = tmp_path / "depth.csv"
    code = main(["depth-sweep", "--dims", "6,6,1", "--depths", "2,3", "--srs", "0.5",
                 "--rank", "1", "--trials", "1", "--out", str(out), *FAST])
    assert code == 0
    rows = read_rows(out)
    assert [(r["i"], r["i3"]) for r in rows] == [("6", "2"), ("6", "3")]


def test_sweep_rank_too_large_is_usage_error(tmp_path):
    code = main(["size-sweep", "--sizes", "4", "--srs", "0.5", "--rank", "9", "--trials", "1",
                 "--out", str(tmp_path / "o.csv")])
    assert code == 1


def test_phase_diagram_cells(tmp_path):
    out = tmp_path / "phase.csv"
    code = main(["phase-diagram", "--dims", "6,6,2", "--ranks", "1,2", "--srs", "0.5,1.0",
                 "--trials", "2", "--out", str(out), *FAST])
    assert code == 0
    rows = read_rows(out)
    assert [(r["rank"], r["sr"]) for r in rows] == [
        ("1", "0.5"), ("1", "1.0"), ("2", "0.5"), ("2", "1.0"),
    ]
    for row in rows:
        assert row["trials"] == "2"
        assert 0.0 <= float(row["success_fraction"]) <= 1.0
    full = [r for r in rows if r["sr"] == "1.0"]
    assert all(float(r["success_fraction"]) == 1.0 for r in full)


def test_image_sweep_rows_and_summary(tmp_path, rng):
    paths = []
    for name in ("card", "tile"):
        path = tmp_path / f"{name}.png"
        Image.fromarray(rng.integers(0, 256, size=(12, 12, 3), dtype=np.uint8)).save(path)
        paths.append(path)
    out = tmp_path / "image.csv"
    code = main(["image", "--images", ",".join(map(str, paths)), "--srs", "0.3,0.6",
                 "--trials", "2", "--seed", "5", "--out", str(out), *FAST])
    assert code == 0

    rows = read_rows(out)
    assert len(rows) == 2 * 2 * 2 * 2
    assert [(r["image"], r["sr"], r["p"]) for r in rows[:4]] == [
        ("card.png", "0.3", "-1.0"), ("card.png", "0.3", "-1.0"),
        ("card.png", "0.3", "1.0"), ("card.png", "0.3", "1.0"),
    ]
    assert [r["seed"] for r in rows[:2]] == ["5", "6"]
    for row in rows:
        assert -1.0 <= float(row["ssim"]) <= 1.0
        assert float(row["rse"]) >= 0

    summary = read_rows(summary_path(out))
    assert len(summary) == 8
    assert {"mean_rse", "mean_psnr", "mean_ssim"} <= set(summary[0])


def test_image_sweep_missing_file_is_usage_error(tmp_path):
    out = tmp_path / "image.csv"
    assert main(["image", "--images", str(tmp_path / "nope.png"), "--out", str(out)]) == 1
    assert not out.exists()


# ---------------------------------------------------------------------------
# Recovery trends at desk scale
# ---------------------------------------------------------------------------


def inversions(values, slack=0.0):
    """Adjacent pairs where the later value rises above the earlier by more than slack."""
    return sum(1 for a, b in zip(values, values[1:]) if b > a + slack)


@pytest.mark.slow
def test_p_sweep_small_p_beats_near_convex(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["p-sweep", "--p-values=-1,0.9", "--trials", "3", "--out", str(out)]) == 0
    mean = {r["p"]: float(r["mean_rse"]) for r in read_rows(summary_path(out))}
    assert mean["-1.0"] <= mean["0.9"]


@pytest.mark.slow
def test_p_sweep_is_stable_for_very_small_p(tmp_path):
    out = tmp_path / "p.csv"
    small = [round(-2.0 + 0.1 * k, 1) for k in range(11)]
    convex_side = [round(0.1 * k, 1) for k in range(10)]
    values = ",".join(str(p) for p in small + convex_side)
    assert main(["p-sweep", f"--p-values={values}", "--trials", "3", "--out", str(out)]) == 0
    mean = {float(r["p"]): float(r["mean_rse"]) for r in read_rows(summary_path(out))}

    def spread(ps):
        picked = [mean[p] for p in ps]
        return max(picked) - min(picked)

    assert spread(small) <= 2 * spread(convex_side)
    assert mean[-1.0] <= mean[0.9]


@pytest.mark.slow
def test_error_falls_with_sampling_rate_at_desk_scale(tmp_path):
    out = tmp_path / "trend.csv"
    code = main(["depth-sweep", "--dims", "40,40,10", "--depths", "10", "--rank", "3",
                 "--srs", "0.1,0.2,0.3,0.4,0.5", "--trials", "2", "--out", str(out)])
    assert code == 0
    means = [float(r["mean_rse"]) for r in read_rows(summary_path(out))]
    # both ends of a recovered tail sit near zero; ignore wiggles below 1e-3
    rises = sum(1 for a, b in zip(means, means[1:]) if b > a and b > 1e-3)
    assert rises <= 1


@pytest.mark.slow
def test_larger_tensors_recover_better(tmp_path):
    out = tmp_path / "size.csv"
    code = main(["size-sweep", "--sizes", "20,30,40", "--srs", "0.3", "--trials", "2",
                 "--out", str(out)])
    assert code == 0
    means = [float(r["mean_rse"]) for r in read_rows(summary_path(out))]
    assert inversions(means, slack=0.02) == 0


@pytest.mark.slow
def test_deeper_tensors_recover_better(tmp_path):
    out = tmp_path / "depth.csv"
    code = main(["depth-sweep", "--dims", "30,30,5", "--depths", "5,10,20", "--srs", "0.3",
                 "--trials", "2", "--out", str(out)])
    assert code == 0
    means = [float(r["mean_rse"]) for r in read_rows(summary_path(out))]
    assert inversions(means, slack=0.02) == 0


@pytest.mark.slow
def test_phase_diagram_is_monotone(tmp_path):
    out = tmp_path / "phase.csv"
    ranks, srs = [2, 5, 10, 20, 30, 40], [0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
    code = main(["phase-diagram", "--dims", "50,50,10",
                 "--ranks", ",".join(map(str, ranks)), "--srs", ",".join(map(str, srs)),
                 "--trials", "2", "--out", str(out)])
    assert code == 0
    cells = {(int(r["rank"]), float(r["sr"])): float(r["success_fraction"])
             for r in read_rows(out)}

    for r in ranks:
        # success never falls as sr grows, one boundary cell excepted
        falls = sum(1 for a, b in zip(srs, srs[1:]) if cells[(r, b)] < cells[(r, a)])
        assert falls <= 1
    for sr in srs:
        rises = sum(1 for a, b in zip(ranks, ranks[1:]) if cells[(b, sr)] > cells[(a, sr)])
        assert rises <= 1
    assert cells[(40, 0.05)] == 0.0
    assert cells[(2, 0.5)] == 1.0
