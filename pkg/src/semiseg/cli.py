"""Command-line interface: decode, eval, bench, train, toy.

Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible decode.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from .bench import run_benchmark
from .core import InfeasibleError, Segmentation, labels_to_segments
from .data_io import (
    ClassDictionary,
    ToyConfig,
    read_scores,
    read_segments,
    read_transitions,
    read_weights,
    run_toy_experiment,
    write_segments,
    write_weights,
)
from .data_io.formats import read_labels, read_matrix, read_segment_rows
from .framewise import Potential, PotentialConfig, framewise_decode, framewise_energy
from .learning import Regularizer, TrainConfig, train_ssvm, training_error
from .losses import Loss
from .metrics import evaluate
from .segmental import (
    DurationFeature,
    DurationKind,
    NO_DURATION,
    Scoring,
    constrained_decode,
    estimate_transitions,
    segmental_viterbi,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 1, 2, 3

log = logging.getLogger("semiseg")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; that code is reserved for data errors here
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit(args, header: list[str], rows: list[tuple], text: str) -> None:
    if args.format == "csv":
        print(",".join(header))
        for r in rows:
            print(",".join(_cell(x) for x in r))
    else:
        print(text)


def _cell(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


# -- decode -------------------------------------------------------------------


def _duration_from_args(args) -> DurationFeature:
    kind = DurationKind(args.duration)
    if kind is DurationKind.NONE:
        if args.duration_weights:
            raise UsageError("--duration-weights given without --duration")
        return NO_DURATION
    if not args.duration_weights:
        raise UsageError(f"--duration {args.duration} needs --duration-weights")
    try:
        weights = tuple(float(x) for x in args.duration_weights.split(","))
        return DurationFeature(kind, weights)
    except ValueError as e:
        raise UsageError(f"bad --duration-weights: {e}") from None


def _load_train_segments(directory: Path, classes: ClassDictionary) -> list[Segmentation]:
    files = sorted(directory.glob("*.segments"))
    if not files:
        raise FileNotFoundError(f"no *.segments files in {directory}")
    out = []
    for f in files:
        seg, _ = read_segments(f, classes)
        out.append(seg)
    return out


def cmd_decode(args) -> int:
    if args.algo == "framewise":
        if args.weights is None:
            raise UsageError("--algo framewise needs --weights")
        w, cfg, classes = read_weights(args.weights)
        X, _ = read_matrix(args.scores)
        y = framewise_decode(w, X, cfg)
        energy = framewise_energy(w, X, y, cfg)
        seg = labels_to_segments(y)
    else:
        if (args.transitions is None) == (args.train_segments is None):
            raise UsageError("give exactly one of --transitions and --train-segments")
        if args.algo == "constrained" and args.K is None:
            raise UsageError("--algo constrained needs --K")
        if args.algo == "segviterbi" and args.D is None:
            raise UsageError("--algo segviterbi needs --D")
        duration = _duration_from_args(args)
        variant = Scoring(args.variant)
        S, classes = read_scores(args.scores)
        if args.transitions is not None:
            model, _ = read_transitions(args.transitions)
            if model.num_classes != S.shape[1]:
                raise ValueError(
                    f"transitions have {model.num_classes} classes, scores have {S.shape[1]}"
                )
        else:
            train = _load_train_segments(Path(args.train_segments), classes)
            model = estimate_transitions(train, S.shape[1])
        if args.algo == "constrained":
            seg, energy, _ = constrained_decode(S, model, args.K, variant, duration)
        else:
            seg, energy = segmental_viterbi(S, model, args.D, variant, duration)
    if args.out:
        write_segments(args.out, seg, classes)
    _emit(
        args,
        ["energy", "segments"],
        [(float(energy), len(seg))],
        f"energy: {energy!r}\nsegments: {len(seg)}",
    )
    return EXIT_OK


# -- eval ---------------------------------------------------------------------


def cmd_eval(args) -> int:
    scores = None
    if args.scores:
        scores, classes = read_scores(args.scores)
    else:
        names = [r[0] for r in read_segment_rows(args.gt)]
        names += [r[0] for r in read_segment_rows(args.pred)]
        classes = ClassDictionary(tuple(dict.fromkeys(names)))
    gt, _ = read_segments(args.gt, classes)
    pred, _ = read_segments(args.pred, classes)
    if gt.total_frames != pred.total_frames:
        raise ValueError(f"gt covers {gt.total_frames} frames, pred covers {pred.total_frames}")
    if scores is not None and scores.shape[0] != gt.total_frames:
        raise ValueError(f"scores have {scores.shape[0]} frames, gt covers {gt.total_frames}")
    ignore = None
    if args.ignore_label is not None and args.ignore_label in classes.names:
        ignore = classes.index(args.ignore_label)
    rep = evaluate(gt, pred, scores, ignore)
    header = ["edit", "accuracy"]
    row = [rep.edit_score, 100 * rep.frame_accuracy]
    if rep.classification_accuracy is not None:
        header.append("classification")
        row.append(100 * rep.classification_accuracy)
    _emit(args, header, [tuple(row)], rep.format())
    return EXIT_OK


# -- bench --------------------------------------------------------------------


def cmd_bench(args) -> int:
    if args.reps < 1:
        raise UsageError("--reps must be at least 1")
    if not (1 <= args.K <= args.T and 1 <= args.D <= args.T):
        raise UsageError("need 1 <= K <= T and 1 <= D <= T")
    if args.C < 2:
        raise UsageError("--C must be at least 2")
    res = run_benchmark(args.T, args.C, args.K, args.D, args.reps, args.seed, args.snr)
    rows = list(res.rows())
    lines = [f"{'algo':<12} {'median_s':>12} {'energy':>16} {'speedup':>10} {'D/K':>10}"]
    for algo, secs, energy, meas, theo in rows:
        lines.append(f"{algo:<12} {secs:>12.6f} {energy:>16.6f} {meas:>10.2f} {theo:>10.2f}")
    _emit(
        args,
        ["algo", "median_seconds", "energy", "measured_speedup", "theoretical_speedup"],
        rows,
        "\n".join(lines),
    )
    return EXIT_OK


# -- train --------------------------------------------------------------------


def _parse_potentials(text: str) -> frozenset[Potential]:
    out = set()
    for name in text.split(","):
        name = name.strip()
        try:
            out.add(Potential[name.upper()])
        except KeyError:
            valid = ",".join(p.value for p in Potential)
            raise UsageError(f"unknown potential {name!r} (choose from {valid})") from None
    return frozenset(out)


def _load_training_dir(directory: Path):
    feats = sorted(directory.glob("*.csv"))
    if not feats:
        raise FileNotFoundError(f"no *.csv feature files in {directory}")
    names = []
    for f in feats:
        lab = f.with_suffix(".labels")
        if not lab.exists():
            raise FileNotFoundError(f"missing labels file {lab}")
        names += [r for r in lab.read_text().split()]
    classes = ClassDictionary(tuple(dict.fromkeys(names)))
    data = []
    feat_dim = None
    for f in feats:
        X, _ = read_matrix(f)
        y, _ = read_labels(f.with_suffix(".labels"), classes)
        if X.shape[0] != y.size:
            raise ValueError(f"{f}: {X.shape[0]} feature rows but {y.size} labels")
        if feat_dim is not None and X.shape[1] != feat_dim:
            raise ValueError(f"{f}: feature dimension {X.shape[1]}, expected {feat_dim}")
        feat_dim = X.shape[1]
        data.append((X, y))
    if len(classes) < 2:
        raise ValueError("training labels use fewer than 2 classes")
    return data, classes, feat_dim


def cmd_train(args) -> int:
    enabled = _parse_potentials(args.potentials)
    data, classes, feat_dim = _load_training_dir(Path(args.data))
    window = args.boundary_window
    if window is None:
        # boundary priors look at roughly one average segment at each end
        durations = [d for _, y in data for d in labels_to_segments(y).durations]
        window = max(1, round(sum(durations) / len(durations)))
    cfg = PotentialConfig(
        enabled=enabled,
        skip=args.skip,
        canonical_length=args.canonical_length,
        feature_dim=feat_dim,
        boundary_window=window,
    )
    tc = TrainConfig(
        C_reg=args.C_reg,
        eta=args.eta,
        epochs=args.epochs,
        regularizer=Regularizer(args.reg),
        loss=Loss(args.loss),
        seed=args.seed,
        batch_size=args.batch_size,
    )
    w, trace = train_ssvm(data, cfg, tc, len(classes))
    write_weights(args.out, w, cfg, classes)
    err = training_error(w, data, cfg)
    lines = [f"epoch {i + 1} objective {j:.6f}" for i, j in enumerate(trace)]
    lines.append(f"training hamming error: {err}")
    _emit(
        args,
        ["epoch", "objective"],
        [(i + 1, float(j)) for i, j in enumerate(trace)],
        "\n".join(lines),
    )
    return EXIT_OK


# -- toy ----------------------------------------------------------------------


def cmd_toy(args) -> int:
    try:
        cfg = ToyConfig(
            segment_length=args.segment_length,
            phase_shift=args.phase_shift,
            offset=args.offset,
            cycles_per_segment=args.cycles,
            noise_sd=args.noise_sd,
            num_train_instances=args.train_instances,
            seed=args.seed,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None
    rep = run_toy_experiment(cfg)
    if args.plot_data:
        with open(args.plot_data, "w", encoding="utf-8") as fh:
            fh.write("frame,score,pred_without,pred_with,seglen_without,seglen_with\n")
            for row in rep.plot_rows():
                fh.write(",".join(_cell(x) for x in row) + "\n")
    a0, a1 = 100 * rep.acc_without_duration, 100 * rep.acc_with_duration
    _emit(
        args,
        ["acc_without", "acc_with"],
        [(a0, a1)],
        f"acc_without: {a0:.1f}\nacc_with: {a1:.1f}",
    )
    return EXIT_OK


# -- wiring -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["text", "csv"], default="text")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="semiseg", description="Temporal segmentation of frame-score sequences.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("decode", parents=[common], help="decode a score file into segments")
    d.add_argument("--scores", required=True, help="scores file (features for framewise)")
    d.add_argument("--transitions", help="transitions file")
    d.add_argument("--train-segments", help="directory of *.segments files to estimate transitions")
    d.add_argument("--algo", choices=["segviterbi", "constrained", "framewise"], default="constrained")
    d.add_argument("--K", type=int, help="maximum number of segments")
    d.add_argument("--D", type=int, help="maximum segment duration")
    d.add_argument("--variant", choices=[v.value for v in Scoring], default="sum")
    d.add_argument("--duration", choices=[k.value for k in DurationKind], default="none")
    d.add_argument("--duration-weights", help="comma-separated duration weights")
    d.add_argument("--weights", help="weights file (framewise only)")
    d.add_argument("--out", help="output segments file")
    d.set_defaults(func=cmd_decode)

    e = sub.add_parser("eval", parents=[common], help="score predicted segments against ground truth")
    e.add_argument("--gt", required=True)
    e.add_argument("--pred", required=True)
    e.add_argument("--scores")
    e.add_argument("--ignore-label")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", parents=[common], help="time both segmental decoders")
    b.add_argument("--T", type=int, default=3000)
    b.add_argument("--C", type=int, default=10)
    b.add_argument("--K", type=int, default=20)
    b.add_argument("--D", type=int, default=600)
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--snr", type=float, default=1.0)
    b.set_defaults(func=cmd_bench)

    t = sub.add_parser("train", parents=[common], help="train frame-wise weights with an SSVM")
    t.add_argument("--data", required=True, help="directory of NAME.csv / NAME.labels pairs")
    t.add_argument("--potentials", default="data")
    t.add_argument("--loss", choices=[l.value for l in Loss], default="hamming")
    t.add_argument("--reg", choices=[r.value for r in Regularizer], default="l2")
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--C-reg", type=float, default=1.0, dest="C_reg")
    t.add_argument("--eta", type=float, default=1.0)
    t.add_argument("--batch-size", type=int, default=1)
    t.add_argument("--skip", type=int, default=1)
    t.add_argument("--canonical-length", type=int, default=50)
    t.add_argument(
        "--boundary-window", type=int, help="frames per boundary prior (default: mean training segment length)"
    )
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    y = sub.add_parser("toy", parents=[common], help="sine-wave duration experiment")
    y.add_argument("--seed", type=int, default=0)
    y.add_argument("--segment-length", type=int, default=50)
    y.add_argument("--phase-shift", type=float, default=math.pi / 2)
    y.add_argument("--offset", type=float, default=1.0)
    y.add_argument("--cycles", type=float, default=1.0)
    y.add_argument("--noise-sd", type=float, default=0.05)
    y.add_argument("--train-instances", type=int, default=10)
    y.add_argument("--plot-data", help="write per-frame plot data here")
    y.set_defaults(func=cmd_toy)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, ValueError, KeyError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
