"""Dataset loading (IDX, CSV), sampling and model files."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import arnnet
from .arnnet import ArnConfig, L1Node, L2Node, PerturbSpec, TrainedModel

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
SIDE = 28
PIXELS = SIDE * SIDE
MODEL_VERSION = 1


class IdxError(ValueError):
    """Base class for malformed IDX input."""


class IdxMagicError(IdxError):
    pass


class IdxDimensionError(IdxError):
    pass


class IdxCountError(IdxError):
    pass


class IdxTruncatedError(IdxError):
    pass


class CsvFormatError(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    images: np.ndarray  # (n, 28, 28) uint8
    labels: np.ndarray  # (n,) int64

    def __post_init__(self) -> None:
        if len(self.images) != len(self.labels):
            raise ValueError("images and labels differ in length")

    def __len__(self) -> int:
        return len(self.labels)

    def normalized(self) -> np.ndarray:
        return self.images.astype(float) / 255.0

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.images[idx], self.labels[idx])


@dataclass(frozen=True)
class SampleSpec:
    per_class: int
    seed: int = 0
    split: str = "train"

    def __post_init__(self) -> None:
        if self.per_class < 1:
            raise ValueError("per_class must be at least 1")
        if self.split not in ("train", "test"):
            raise ValueError("split is 'train' or 'test'")


# ---------------------------------------------------------------------- IDX


def _read(path) -> bytes:
    p = Path(path)
    data = p.read_bytes()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def _header(data: bytes, ndims: int, what: str) -> tuple[int, ...]:
    need = 4 + 4 * ndims
    if len(data) < need:
        raise IdxTruncatedError(f"{what}: header needs {need} bytes, file has {len(data)}")
    return struct.unpack(">" + "I" * (1 + ndims), data[:need])


def parse_idx_images(data: bytes) -> np.ndarray:
    if len(data) >= 4 and struct.unpack(">I", data[:4])[0] != IMAGE_MAGIC:
        raise IdxMagicError(f"image file magic is {data[:4].hex()}, expected 00000803")
    magic, n, rows, cols = _header(data, 3, "image file")
    if (rows, cols) != (SIDE, SIDE):
        raise IdxDimensionError(f"images are {rows}x{cols}, expected 28x28")
    need = 16 + n * PIXELS
    if len(data) < need:
        raise IdxTruncatedError(
            f"image file is missing {need - len(data)} bytes for {n} images")
    return np.frombuffer(data, dtype=np.uint8, count=n * PIXELS, offset=16).reshape(n, SIDE, SIDE)


def parse_idx_labels(data: bytes) -> np.ndarray:
    if len(data) >= 4 and struct.unpack(">I", data[:4])[0] != LABEL_MAGIC:
        raise IdxMagicError(f"label file magic is {data[:4].hex()}, expected 00000801")
    magic, n = _header(data, 1, "label file")
    need = 8 + n
    if len(data) < need:
        raise IdxTruncatedError(f"label file is missing {need - len(data)} bytes for {n} labels")
    labels = np.frombuffer(data, dtype=np.uint8, count=n, offset=8).astype(np.int64)
    if labels.size and labels.max() > 9:
        raise IdxError(f"label value {int(labels.max())} is outside 0-9")
    return labels


def load_idx(image_path, label_path) -> Dataset:
    images = parse_idx_images(_read(image_path))
    labels = parse_idx_labels(_read(label_path))
    if len(images) != len(labels):
        raise IdxCountError(f"{len(images)} images but {len(labels)} labels")
    return Dataset(images.copy(), labels)


def save_idx(ds: Dataset, image_path, label_path) -> None:
    n = len(ds)
    Path(image_path).write_bytes(
        struct.pack(">IIII", IMAGE_MAGIC, n, SIDE, SIDE) + ds.images.astype(np.uint8).tobytes())
    Path(label_path).write_bytes(
        struct.pack(">II", LABEL_MAGIC, n) + ds.labels.astype(np.uint8).tobytes())


# ---------------------------------------------------------------------- CSV


def load_csv(path, rows: int | None = None) -> Dataset:
    """Label-first CSV: one row per image, the label then 784 pixel bytes."""
    images = []
    labels = []
    with open(path, "r", encoding="ascii") as fh:
        for n, line in enumerate(fh, start=1):
            if rows is not None and len(labels) >= rows:
                break
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != PIXELS + 1:
                raise CsvFormatError(f"row {n}: expected 785 columns, got {len(cells)}")
            try:
                vals = [int(c) for c in cells]
            except ValueError:
                bad = next(c for c in cells if not c.strip().lstrip("-").isdigit())
                raise CsvFormatError(f"row {n}: non-numeric cell {bad!r}") from None
            if not 0 <= vals[0] <= 9:
                raise CsvFormatError(f"row {n}: label {vals[0]} is outside 0-9")
            px = vals[1:]
            if min(px) < 0 or max(px) > 255:
                raise CsvFormatError(f"row {n}: pixel value outside 0-255")
            labels.append(vals[0])
            images.append(px)
    img = np.asarray(images, dtype=np.uint8).reshape(-1, SIDE, SIDE)
    return Dataset(img, np.asarray(labels, dtype=np.int64))


def save_csv(ds: Dataset, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for img, lab in zip(ds.images, ds.labels):
            fh.write(str(int(lab)) + "," + ",".join(str(int(v)) for v in img.ravel()) + "\n")


def load_dataset(path, label_path=None) -> Dataset:
    """CSV when only one path is given, IDX when a label file is given too."""
    if label_path is not None:
        return load_idx(path, label_path)
    return load_csv(path)


# ------------------------------------------------------------------ sampling


def sample_indices(ds: Dataset, spec: SampleSpec, exclude: Sequence[int] = ()) -> np.ndarray:
    """Positions of a seeded per-class draw, grouped by class, file order within a class."""
    rng = np.random.default_rng(spec.seed)
    excluded = np.asarray(sorted(set(int(i) for i in exclude)), dtype=np.int64)
    out = []
    for c in range(10):
        pool = np.flatnonzero(ds.labels == c)
        if excluded.size:
            pool = np.setdiff1d(pool, excluded)
        if pool.size < spec.per_class:
            raise ValueError(
                f"class {c} has {pool.size} samples available, {spec.per_class} requested")
        pick = rng.choice(pool, spec.per_class, replace=False)
        out.append(np.sort(pick))
    return np.concatenate(out)


def sample(ds: Dataset, spec: SampleSpec, exclude: Sequence[int] = ()) -> Dataset:
    return ds.subset(sample_indices(ds, spec, exclude))


def train_test_indices(ds: Dataset, train_per_class: int, test_per_class: int,
                       seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint train and test draws from one pool."""
    tr = sample_indices(ds, SampleSpec(train_per_class, seed, "train"))
    te = sample_indices(ds, SampleSpec(test_per_class, seed + 1, "test"), exclude=tr)
    return tr, te


# ---------------------------------------------------------------- model files


def _fmt(v: float, exact_hex: bool) -> str:
    return float(v).hex() if exact_hex else repr(float(v))


def dump_model(model: TrainedModel, exact_hex: bool = False) -> str:
    c = model.config
    lines = [
        f"ARNMODEL {MODEL_VERSION}",
        f"encoding {'hex' if exact_hex else 'decimal'}",
        f"rho {_fmt(c.rho, exact_hex)}",
        f"T {_fmt(c.T, exact_hex)}",
        f"rho2 {_fmt(c.rho2, exact_hex)}",
        f"T2 {_fmt(c.T2, exact_hex)}",
        f"train_size {c.train_size}",
        f"seed {c.seed}",
        f"method {c.method}",
        f"perturb {c.perturb.describe()}",
        f"l2_patterns {c.l2_patterns}",
        f"layer1 {model.n_l1}",
        f"layer2 {model.n_l2}",
    ]
    for node in model.layer1:
        px = " ".join(_fmt(v, exact_hex) for v in node.resonant)
        lines.append(f"L1 {node.index} {_fmt(node.rho, exact_hex)} {_fmt(node.T, exact_hex)} {px}")
    for node in model.layer2:
        pat = " ".join(str(v) for v in node.pattern)
        lines.append(
            f"L2 {node.index} {node.label} {_fmt(node.rho2, exact_hex)} {_fmt(node.T2, exact_hex)} {pat}")
    return "\n".join(lines) + "\n"


def save_model(model: TrainedModel, path, exact_hex: bool = False) -> None:
    Path(path).write_text(dump_model(model, exact_hex), encoding="ascii")


def _num(tok: str) -> float:
    if "0x" in tok or "p" in tok:
        return float.fromhex(tok)
    return float(tok)


def parse_model(text: str) -> TrainedModel:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("ARNMODEL "):
        raise ModelFormatError("not a model file (missing ARNMODEL header)")
    try:
        version = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise ModelFormatError("unreadable model version") from None
    if version != MODEL_VERSION:
        raise ModelFormatError(f"model version {version} is not supported (expected {MODEL_VERSION})")
    head: dict[str, str] = {}
    l1: list[L1Node] = []
    l2: list[L2Node] = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        key, _, rest = line.partition(" ")
        try:
            if key == "L1":
                tok = rest.split()
                if len(tok) != 3 + arnnet.TILE_PIXELS:
                    raise ModelFormatError(f"line {n}: layer-1 node needs 52 fields")
                l1.append(L1Node(int(tok[0]), tuple(_num(t) for t in tok[3:]),
                                 _num(tok[1]), _num(tok[2])))
            elif key == "L2":
                tok = rest.split()
                if len(tok) != 4 + arnnet.N_TILES:
                    raise ModelFormatError(f"line {n}: layer-2 node needs 20 fields")
                l2.append(L2Node(int(tok[0]), tuple(int(t) for t in tok[4:]), int(tok[1]),
                                 _num(tok[2]), _num(tok[3])))
            else:
                head[key] = rest.strip()
        except ValueError as e:
            if isinstance(e, ModelFormatError):
                raise
            raise ModelFormatError(f"line {n}: {e}") from None
    try:
        cfg = ArnConfig(
            rho=_num(head["rho"]), T=_num(head["T"]), rho2=_num(head["rho2"]),
            T2=_num(head["T2"]), train_size=int(head["train_size"]), seed=int(head["seed"]),
            method=head["method"], perturb=PerturbSpec.parse(head.get("perturb", "")),
            l2_patterns=head.get("l2_patterns", "final"),
        )
        n1, n2 = int(head["layer1"]), int(head["layer2"])
    except KeyError as e:
        raise ModelFormatError(f"header field {e.args[0]!r} is missing") from None
    if (n1, n2) != (len(l1), len(l2)):
        raise ModelFormatError(
            f"header declares {n1}/{n2} nodes, file holds {len(l1)}/{len(l2)}")
    for node in l2:
        for idx in node.pattern:
            if not 1 <= idx <= len(l1):
                raise ModelFormatError(
                    f"layer-2 node {node.index} references layer-1 node {idx}, "
                    f"but layer 1 has {len(l1)} nodes")
    try:
        return arnnet.build_model(cfg, l1, l2)
    except ValueError as e:
        raise ModelFormatError(str(e)) from None


def load_model(path) -> TrainedModel:
    return parse_model(Path(path).read_text(encoding="ascii"))
