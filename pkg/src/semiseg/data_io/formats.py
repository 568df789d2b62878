"""Plain-text readers and writers for scores, labels, segments, weights and transitions.

Every reader validates the whole file before returning and reports the
offending line number. Floats are written with 17 significant digits so a
write/read cycle reproduces them bit for bit.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..core import Segment, Segmentation, SegmentationError, TransitionModel
from ..framewise import Potential, PotentialConfig, WeightSet

PathLike = str | os.PathLike


class FormatError(ValueError):
    """Malformed input file; the message names the file and line."""

    def __init__(self, path, line: int | None, msg: str):
        where = f"{path}:{line}" if line is not None else f"{path}"
        super().__init__(f"{where}: {msg}")
        self.path = path
        self.line = line


def fmt_float(x: float) -> str:
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return format(float(x), ".17g")


@dataclass(frozen=True)
class ClassDictionary:
    """Ordered class names; position in the list is the class id."""

    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        object.__setattr__(self, "names", names)
        if any(not n or n != n.strip() or "," in n for n in names):
            raise ValueError("class names must be non-empty, without commas or surrounding blanks")
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique")

    @classmethod
    def auto(cls, num_classes: int) -> "ClassDictionary":
        return cls(tuple(f"c{i}" for i in range(num_classes)))

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown class name {name!r}") from None

    def name(self, idx: int) -> str:
        return self.names[idx]

    def extended(self, new_names: Iterable[str]) -> "ClassDictionary":
        """Copy with any unseen names appended in order."""
        names = list(self.names)
        for n in new_names:
            if n not in names:
                names.append(n)
        return ClassDictionary(tuple(names))


def _lines(path: PathLike):
    """Yield ``(line_number, stripped_text)`` for non-blank lines."""
    with open(path, encoding="utf-8") as fh:
        for i, raw in enumerate(fh, 1):
            s = raw.strip()
            if s:
                yield i, s


def _parse_float(path, lineno: int, cell: str) -> float:
    try:
        x = float(cell)
    except ValueError:
        raise FormatError(path, lineno, f"non-numeric value {cell!r}") from None
    if math.isnan(x) or math.isinf(x):
        raise FormatError(path, lineno, f"non-finite value {cell!r}")
    return x


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


# -- scores -----------------------------------------------------------------


def read_matrix(
    path: PathLike, min_columns: int = 1
) -> tuple[np.ndarray, tuple[str, ...] | None]:
    """Comma-separated rows of decimals, optionally preceded by a header of names."""
    lines = list(_lines(path))
    if not lines:
        raise FormatError(path, None, "empty file")
    header = None
    first_no, first = lines[0]
    cells = [c.strip() for c in first.split(",")]
    if not all(_is_number(c) for c in cells):
        header = tuple(cells)
        lines = lines[1:]
        if not lines:
            raise FormatError(path, first_no, "header without data rows")
    width = len(cells)
    if width < min_columns:
        raise FormatError(path, first_no, f"need at least {min_columns} columns, got {width}")
    rows = []
    for lineno, text in lines:
        row = [c.strip() for c in text.split(",")]
        if len(row) != width:
            raise FormatError(path, lineno, f"expected {width} values, got {len(row)}")
        rows.append([_parse_float(path, lineno, c) for c in row])
    return np.array(rows, dtype=float), header


def read_scores(path: PathLike) -> tuple[np.ndarray, ClassDictionary]:
    """T x C score matrix with an optional header row of class names."""
    S, header = read_matrix(path, min_columns=2)
    if header is None:
        return S, ClassDictionary.auto(S.shape[1])
    try:
        return S, ClassDictionary(header)
    except ValueError as e:
        raise FormatError(path, 1, f"bad header: {e}") from None


def write_matrix(path: PathLike, X: np.ndarray, header: Sequence[str] | None = None) -> None:
    X = np.asarray(X, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in X:
            fh.write(",".join(fmt_float(x) for x in row) + "\n")


def write_scores(path: PathLike, S: np.ndarray, classes: ClassDictionary | None = None) -> None:
    S = np.asarray(S, dtype=float)
    classes = classes or ClassDictionary.auto(S.shape[1])
    if len(classes) != S.shape[1]:
        raise ValueError(f"{len(classes)} class names for {S.shape[1]} columns")
    write_matrix(path, S, classes.names)


# -- labels -----------------------------------------------------------------


def read_labels(
    path: PathLike, classes: ClassDictionary | None = None
) -> tuple[np.ndarray, ClassDictionary]:
    """One class name per line.

    With ``classes`` given, unknown names are an error; otherwise the
    dictionary is built from names in order of first appearance.
    """
    names = []
    for lineno, text in _lines(path):
        if "," in text:
            raise FormatError(path, lineno, "labels file takes one name per line")
        if classes is not None and text not in classes.names:
            raise FormatError(path, lineno, f"unknown class name {text!r}")
        names.append(text)
    if not names:
        raise FormatError(path, None, "empty labels file")
    if classes is None:
        classes = ClassDictionary(tuple(dict.fromkeys(names)))
    return np.array([classes.index(n) for n in names], dtype=np.int64), classes


def write_labels(path: PathLike, y: Sequence[int], classes: ClassDictionary) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in y:
            fh.write(classes.name(int(c)) + "\n")


# -- segments ---------------------------------------------------------------


def read_segment_rows(path: PathLike) -> list[tuple[str, int, int, int]]:
    """Raw ``(name, start, duration, line_number)`` rows, checked for contiguity."""
    rows = []
    pos = 0
    for lineno, text in _lines(path):
        cells = [c.strip() for c in text.split(",")]
        if len(cells) != 3:
            raise FormatError(path, lineno, f"expected label,start,duration, got {text!r}")
        name, start_s, dur_s = cells
        try:
            start, dur = int(start_s), int(dur_s)
        except ValueError:
            raise FormatError(path, lineno, "start and duration must be integers") from None
        if not name:
            raise FormatError(path, lineno, "empty label")
        if dur < 1:
            raise FormatError(path, lineno, f"non-positive duration {dur}")
        if start != pos:
            kind = "gap" if start > pos else "overlap"
            raise FormatError(path, lineno, f"{kind}: segment starts at {start}, expected {pos}")
        pos = start + dur
        rows.append((name, start, dur, lineno))
    if not rows:
        raise FormatError(path, None, "empty segments file")
    return rows


def read_segments(
    path: PathLike, classes: ClassDictionary | None = None
) -> tuple[Segmentation, ClassDictionary]:
    rows = read_segment_rows(path)
    if classes is None:
        classes = ClassDictionary(tuple(dict.fromkeys(r[0] for r in rows)))
    for name, _, _, lineno in rows:
        if name not in classes.names:
            raise FormatError(path, lineno, f"unknown class name {name!r}")
    segs = tuple(Segment(classes.index(n), s, d) for n, s, d, _ in rows)
    return Segmentation(segs, segs[-1].end), classes


def write_segments(path: PathLike, seg: Segmentation, classes: ClassDictionary) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in seg:
            fh.write(f"{classes.name(s.label)},{s.start},{s.duration}\n")


# -- sectioned matrices (weights, transitions) -------------------------------


def write_sections(
    path: PathLike, sections: dict[str, np.ndarray], meta: dict[str, str] | None = None
) -> None:
    """``# key: value`` comment lines, then ``[NAME]`` headers each followed by matrix rows."""
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}: {v}\n")
        for name, arr in sections.items():
            arr = np.asarray(arr, dtype=float)
            fh.write(f"[{name}]\n")
            for row in np.atleast_2d(arr.reshape(arr.shape[0], -1) if arr.ndim > 1 else arr):
                fh.write(",".join(fmt_float(x) for x in row) + "\n")


def read_sections(
    path: PathLike, allow_neg_inf: bool = False
) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Inverse of :func:`write_sections`; every section comes back 2-D."""
    sections: dict[str, list] = {}
    meta: dict[str, str] = {}
    current = None
    width = None
    with open(path, encoding="utf-8") as fh:
        numbered = list(enumerate(fh, 1))
    for lineno, raw in numbered:
        text = raw.strip()
        if not text:
            continue
        if text.startswith("#"):
            if ":" in text:
                k, v = text[1:].split(":", 1)
                meta[k.strip()] = v.strip()
            continue
        if text.startswith("["):
            if not text.endswith("]") or len(text) < 3:
                raise FormatError(path, lineno, f"bad section header {text!r}")
            current = text[1:-1].strip()
            if current in sections:
                raise FormatError(path, lineno, f"duplicate section {current!r}")
            sections[current] = []
            width = None
            continue
        if current is None:
            raise FormatError(path, lineno, "data before the first section header")
        cells = [c.strip() for c in text.split(",")]
        if width is not None and len(cells) != width:
            raise FormatError(path, lineno, f"expected {width} values, got {len(cells)}")
        width = len(cells)
        row = []
        for c in cells:
            if allow_neg_inf and c.lower() == "-inf":
                row.append(-math.inf)
            else:
                row.append(_parse_float(path, lineno, c))
        sections[current].append(row)
    if not sections:
        raise FormatError(path, None, "no sections found")
    for name, rows in sections.items():
        if not rows:
            raise FormatError(path, None, f"section {name!r} is empty")
    return {k: np.array(v, dtype=float) for k, v in sections.items()}, meta


def write_transitions(
    path: PathLike, model: TransitionModel, classes: ClassDictionary | None = None
) -> None:
    classes = classes or ClassDictionary.auto(model.num_classes)
    write_sections(
        path,
        {"LOG_TRANSITION": model.log_transition, "LOG_PRIOR": model.log_prior[None, :]},
        {"classes": ",".join(classes.names)},
    )


def read_transitions(path: PathLike) -> tuple[TransitionModel, ClassDictionary]:
    secs, meta = read_sections(path, allow_neg_inf=True)
    for need in ("LOG_TRANSITION", "LOG_PRIOR"):
        if need not in secs:
            raise FormatError(path, None, f"missing section [{need}]")
    A, prior = secs["LOG_TRANSITION"], secs["LOG_PRIOR"].ravel()
    try:
        model = TransitionModel(A, prior)
    except ValueError as e:
        raise FormatError(path, None, str(e)) from None
    classes = _meta_classes(path, meta, model.num_classes)
    return model, classes


def _meta_classes(path, meta: dict[str, str], num_classes: int) -> ClassDictionary:
    if "classes" not in meta:
        return ClassDictionary.auto(num_classes)
    names = tuple(n.strip() for n in meta["classes"].split(","))
    if len(names) != num_classes:
        raise FormatError(path, None, f"{len(names)} class names for {num_classes} classes")
    return ClassDictionary(names)


_CFG_KEYS = ("skip", "canonical_length", "feature_dim", "boundary_window", "pair_data_skip")


def write_weights(
    path: PathLike, w: WeightSet, cfg: PotentialConfig, classes: ClassDictionary | None = None
) -> None:
    """Weights sectioned by potential name; the potential config rides along as comments."""
    C = w.num_classes
    classes = classes or ClassDictionary.auto(C)
    meta = {"classes": ",".join(classes.names)}
    order = [p for p in Potential if p in cfg.enabled]
    meta["potentials"] = ",".join(p.name for p in order)
    for k in _CFG_KEYS:
        v = getattr(cfg, k)
        meta[k] = "none" if v is None else str(v)
    sections = {p.name: w.arrays[p] for p in order}
    write_sections(path, sections, meta)


def read_weights(path: PathLike) -> tuple[WeightSet, PotentialConfig, ClassDictionary]:
    secs, meta = read_sections(path)
    try:
        enabled = tuple(Potential[n] for n in secs)
    except KeyError as e:
        raise FormatError(path, None, f"unknown potential section {e.args[0]!r}") from None
    kwargs = {}
    for k in _CFG_KEYS:
        if k in meta:
            kwargs[k] = None if meta[k] == "none" else int(meta[k])
    try:
        cfg = PotentialConfig(enabled=frozenset(enabled), **kwargs)
    except (TypeError, ValueError) as e:
        raise FormatError(path, None, f"bad potential config: {e}") from None
    C = secs[enabled[0].name].shape[0]
    shapes = cfg.shapes(C)
    arrays = {}
    for p in enabled:
        flat = secs[p.name]
        want = shapes[p]
        if flat.size != int(np.prod(want)):
            raise FormatError(path, None, f"section {p.name} has {flat.size} values, expected shape {want}")
        arrays[p] = flat.reshape(want)
    classes = _meta_classes(path, meta, C)
    return WeightSet(arrays), cfg, classes


__all__ = [
    "FormatError",
    "ClassDictionary",
    "fmt_float",
    "read_matrix",
    "write_matrix",
    "read_scores",
    "write_scores",
    "read_labels",
    "write_labels",
    "read_segment_rows",
    "read_segments",
    "write_segments",
    "write_sections",
    "read_sections",
    "read_transitions",
    "write_transitions",
    "read_weights",
    "write_weights",
    "SegmentationError",
]
