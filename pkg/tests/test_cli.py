import numpy as np
import pytest

from semiseg.cli import main
from semiseg.core import TransitionModel
from semiseg.data_io import (
    ClassDictionary,
    generate_benchmark,
    read_segments,
    write_scores,
    write_segments,
    write_transitions,
)
from semiseg.data_io.formats import write_matrix


@pytest.fixture
def instance(tmp_path):
    S, gt, model = generate_benchmark(40, 3, 4, 2.0, seed=3)
    classes = ClassDictionary(("a", "b", "c"))
    write_scores(tmp_path / "s.csv", S, classes)
    write_transitions(tmp_path / "t.txt", model, classes)
    (tmp_path / "train").mkdir()
    write_segments(tmp_path / "train" / "gt.segments", gt, classes)
    return tmp_path, S, gt, model


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def energy_of(stdout):
    return float(stdout.split("energy: ")[1].split()[0])


# -- decode -------------------------------------------------------------------------


def test_decode_single_segment(instance, capsys):
    d, *_ = instance
    code, out, _ = run(
        capsys, "decode", "--scores", d / "s.csv", "--transitions", d / "t.txt",
        "--K", 1, "--out", d / "p.segments",
    )
    assert code == 0
    assert "segments: 1" in out
    seg, _ = read_segments(d / "p.segments")
    assert len(seg) == 1 and seg.total_frames == 40


def test_decode_unconstrained_agree(instance, capsys):
    d, *_ = instance
    base = ["decode", "--scores", d / "s.csv", "--transitions", d / "t.txt"]
    _, out_k, _ = run(capsys, *base, "--algo", "constrained", "--K", 40)
    _, out_d, _ = run(capsys, *base, "--algo", "segviterbi", "--D", 40)
    assert energy_of(out_k) == pytest.approx(energy_of(out_d), abs=1e-6)


def test_decode_from_training_segments(instance, capsys):
    d, *_ = instance
    code, out_a, _ = run(capsys, "decode", "--scores", d / "s.csv", "--train-segments", d / "train", "--K", 4)
    _, out_b, _ = run(capsys, "decode", "--scores", d / "s.csv", "--transitions", d / "t.txt", "--K", 4)
    assert code == 0 and energy_of(out_a) == energy_of(out_b)


def test_decode_mean_prior_with_duration(instance, capsys):
    d, *_ = instance
    code, out, _ = run(
        capsys, "decode", "--scores", d / "s.csv", "--transitions", d / "t.txt", "--K", 6,
        "--variant", "mean-prior", "--duration", "quadratic", "--duration-weights", "0.0,-0.01",
    )
    assert code == 0 and "segments:" in out


@pytest.mark.parametrize(
    "extra",
    [
        ["--algo", "segviterbi"],
        ["--algo", "constrained"],
        ["--K", "3", "--duration", "quadratic"],
        ["--K", "3", "--duration-weights", "1"],
        ["--K", "3", "--algo", "nope"],
    ],
)
def test_decode_usage_errors(instance, capsys, extra):
    d, *_ = instance
    code, _, err = run(capsys, "decode", "--scores", d / "s.csv", "--transitions", d / "t.txt", *extra)
    assert code == 1 and err


def test_decode_both_transition_sources_is_usage_error(instance, capsys):
    d, *_ = instance
    code, _, _ = run(
        capsys, "decode", "--scores", d / "s.csv", "--transitions", d / "t.txt",
        "--train-segments", d / "train", "--K", 2,
    )
    assert code == 1


def test_decode_bad_scores_is_data_error(instance, capsys):
    d, *_ = instance
    (d / "bad.csv").write_text("a,b,c\n1,2,NaN\n")
    code, _, err = run(capsys, "decode", "--scores", d / "bad.csv", "--transitions", d / "t.txt", "--K", 1)
    assert code == 2 and "bad.csv:2" in err


def test_decode_class_count_mismatch(instance, capsys):
    d, *_ = instance
    write_transitions(d / "t2.txt", TransitionModel.zeros(2), ClassDictionary.auto(2))
    code, _, _ = run(capsys, "decode", "--scores", d / "s.csv", "--transitions", d / "t2.txt", "--K", 2)
    assert code == 2


def test_decode_infeasible_exit_code(instance, capsys):
    d, *_ = instance
    model = TransitionModel(np.zeros((3, 3)), np.full(3, -np.inf))
    write_transitions(d / "dead.txt", model, ClassDictionary(("a", "b", "c")))
    code, _, err = run(
        capsys, "decode", "--scores", d / "s.csv", "--transitions", d / "dead.txt",
        "--K", 3, "--variant", "mean-prior",
    )
    assert code == 3 and "infeasible" in err


def test_decode_csv(instance, capsys):
    d, *_ = instance
    code, out, _ = run(
        capsys, "decode", "--scores", d / "s.csv", "--transitions", d / "t.txt", "--K", 2, "--format", "csv"
    )
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "energy,segments" and len(lines) == 2


# -- eval ---------------------------------------------------------------------------


def seg_file(path, rows):
    path.write_text("".join(f"{n},{s},{d}\n" for n, s, d in rows))
    return path


def test_eval_identical(tmp_path, capsys):
    g = seg_file(tmp_path / "g.segments", [("A", 0, 3), ("B", 3, 2)])
    code, out, _ = run(capsys, "eval", "--gt", g, "--pred", g)
    assert code == 0 and out.strip() == "Edit: 100.00 Acc: 100.00"


def test_eval_deletion(tmp_path, capsys):
    g = seg_file(tmp_path / "g.segments", [("A", 0, 2), ("B", 2, 2), ("C", 4, 2)])
    p = seg_file(tmp_path / "p.segments", [("A", 0, 3), ("C", 3, 3)])
    code, out, _ = run(capsys, "eval", "--gt", g, "--pred", p)
    assert code == 0 and out.startswith("Edit: 66.67")


def test_eval_with_scores_and_csv(tmp_path, capsys):
    g = seg_file(tmp_path / "g.segments", [("c0", 0, 2), ("c1", 2, 1)])
    write_matrix(tmp_path / "s.csv", np.eye(2)[[0, 0, 1]], ["c0", "c1"])
    code, out, _ = run(capsys, "eval", "--gt", g, "--pred", g, "--scores", tmp_path / "s.csv", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "edit,accuracy,classification"
    assert [float(x) for x in lines[1].split(",")] == [100.0, 100.0, 100.0]


def test_eval_missing_file(tmp_path, capsys):
    g = seg_file(tmp_path / "g.segments", [("A", 0, 3)])
    code, _, _ = run(capsys, "eval", "--gt", g, "--pred", tmp_path / "nope.segments")
    assert code == 2


def test_eval_length_mismatch(tmp_path, capsys):
    g = seg_file(tmp_path / "g.segments", [("A", 0, 3)])
    p = seg_file(tmp_path / "p.segments", [("A", 0, 4)])
    code, _, _ = run(capsys, "eval", "--gt", g, "--pred", p)
    assert code == 2


# -- bench --------------------------------------------------------------------------


def test_bench_bad_reps(capsys):
    code, _, _ = run(capsys, "bench", "--reps", 0)
    assert code == 1


def test_bench_reports_theoretical_speedup(capsys):
    code, out, _ = run(capsys, "bench", "--T", 300, "--C", 3, "--D", 230, "--K", 7, "--reps", 1)
    assert code == 0 and "32.86" in out


def test_bench_energies_agree_when_not_binding(capsys):
    _, gt, _ = generate_benchmark(120, 4, 5, 50.0, seed=0)
    D = max(s.duration for s in gt)
    code, out, _ = run(
        capsys, "bench", "--T", 120, "--C", 4, "--K", 5, "--D", D, "--snr", 50.0, "--reps", 1, "--format", "csv"
    )
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "algo,median_seconds,energy,measured_speedup,theoretical_speedup"
    energies = [float(l.split(",")[2]) for l in lines[1:]]
    assert len(energies) == 2 and energies[0] == pytest.approx(energies[1], abs=1e-6)


# -- train --------------------------------------------------------------------------


@pytest.fixture
def train_dir(tmp_path):
    rng = np.random.default_rng(0)
    d = tmp_path / "data"
    d.mkdir()
    for i in range(4):
        y = rng.integers(0, 2, 12)
        X = np.where(y[:, None] == 0, -1.0, 1.0) + 0.1 * rng.normal(size=(12, 1))
        write_matrix(d / f"seq{i}.csv", X)
        (d / f"seq{i}.labels").write_text("".join(("neg", "pos")[v] + "\n" for v in y))
    return d


def test_train_separable(train_dir, tmp_path, capsys):
    code, out, _ = run(
        capsys, "train", "--data", train_dir, "--potentials", "data,class_prior", "--epochs", 20,
        "--out", tmp_path / "w.txt",
    )
    assert code == 0
    assert out.strip().splitlines()[-1] == "training hamming error: 0"
    assert out.startswith("epoch 1 objective")


def test_train_then_framewise_decode(train_dir, tmp_path, capsys):
    run(capsys, "train", "--data", train_dir, "--out", tmp_path / "w.txt")
    code, out, _ = run(
        capsys, "decode", "--algo", "framewise", "--scores", train_dir / "seq0.csv",
        "--weights", tmp_path / "w.txt", "--out", tmp_path / "p.segments",
    )
    assert code == 0 and "segments:" in out
    seg, classes = read_segments(tmp_path / "p.segments")
    assert seg.total_frames == 12 and set(classes.names) <= {"neg", "pos"}


def test_train_unknown_potential(train_dir, tmp_path, capsys):
    code, _, err = run(capsys, "train", "--data", train_dir, "--potentials", "data,bogus", "--out", tmp_path / "w")
    assert code == 1 and "bogus" in err


def test_train_deterministic(train_dir, tmp_path, capsys):
    argv = ["train", "--data", train_dir, "--potentials", "data,pair_class", "--epochs", 3, "--seed", 5]
    run(capsys, *argv, "--out", tmp_path / "w1.txt")
    run(capsys, *argv, "--out", tmp_path / "w2.txt")
    assert (tmp_path / "w1.txt").read_bytes() == (tmp_path / "w2.txt").read_bytes()


def test_train_csv(train_dir, tmp_path, capsys):
    code, out, _ = run(
        capsys, "train", "--data", train_dir, "--epochs", 4, "--out", tmp_path / "w.txt", "--format", "csv"
    )
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "epoch,objective" and len(lines) == 5


def test_train_missing_labels(train_dir, tmp_path, capsys):
    (train_dir / "seq0.labels").unlink()
    code, _, _ = run(capsys, "train", "--data", train_dir, "--out", tmp_path / "w.txt")
    assert code == 2


# -- toy ----------------------------------------------------------------------------


def test_toy(capsys, tmp_path):
    code, out, _ = run(capsys, "toy", "--plot-data", tmp_path / "p1.csv")
    assert code == 0
    vals = dict(line.split(": ") for line in out.strip().splitlines())
    assert float(vals["acc_with"]) == 100.0
    assert float(vals["acc_without"]) < 100.0
    run(capsys, "toy", "--plot-data", tmp_path / "p2.csv")
    assert (tmp_path / "p1.csv").read_bytes() == (tmp_path / "p2.csv").read_bytes()
    lines = (tmp_path / "p1.csv").read_text().splitlines()
    assert lines[0] == "frame,score,pred_without,pred_with,seglen_without,seglen_with"
    assert len(lines) == 101


def test_toy_csv(capsys):
    code, out, _ = run(capsys, "toy", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "acc_without,acc_with" and len(lines) == 2


def test_toy_bad_config(capsys):
    code, _, _ = run(capsys, "toy", "--segment-length", 1)
    assert code == 1


def test_no_subcommand(capsys):
    code, _, _ = run(capsys)
    assert code == 1


def test_train_boundary_window_defaults_to_mean_segment_length(tmp_path, capsys):
    d = tmp_path / "data"
    d.mkdir()
    write_matrix(d / "a.csv", np.zeros((9, 1)))
    (d / "a.labels").write_text("x\nx\nx\ny\ny\ny\nx\nx\nx\n")
    run(capsys, "train", "--data", d, "--potentials", "boundary_start", "--epochs", 1, "--out", tmp_path / "w.txt")
    assert "# boundary_window: 3" in (tmp_path / "w.txt").read_text()
    run(capsys, "train", "--data", d, "--potentials", "boundary_start", "--epochs", 1,
        "--boundary-window", 2, "--out", tmp_path / "w2.txt")
    assert "# boundary_window: 2" in (tmp_path / "w2.txt").read_text()
