"""Two-layer ARN image classifier.

Each 28x28 image is cut into 16 tiles of 7x7 pixels. Layer 1 holds feature
nodes: a node stores one tile as the resonant input of 49 resonators, and
its output for a tile is the normalized aggregate of those resonators. A
tile that makes no node fire above ``T`` becomes a new node. Every image is
thus reduced to 16 layer-1 node indices.

Layer 2 holds labeled patterns of such indices. A pattern's score against a
stored node is the fraction of the 16 positions whose indices agree. During
training a pattern is stored when no node of the same label scores at least
``T2``. Classification takes the best score per class; equal best scores in
several classes give a multiple-winner verdict, which can optionally be
resolved by relaxing the resonance control parameter.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .resonance import coverage_bounds, rho_from_sigma

IMG = 28
TILE = 7
N_TILES = 16
TILE_PIXELS = TILE * TILE
LEVELS = 255
MAX_ROTATION = 15.0
MISS = 0

SINGLE = "single"
MULTIPLE = "multiple"
NONE = "none"


# ------------------------------------------------------------------ tiling


def tile_image(img) -> np.ndarray:
    """Split a 28x28 image into 16 row-major 7x7 tiles, each flattened to 49 pixels."""
    a = np.asarray(img, dtype=float)
    if a.shape != (IMG, IMG):
        raise ValueError(f"expected a 28x28 image, got shape {a.shape}")
    return a.reshape(4, TILE, 4, TILE).transpose(0, 2, 1, 3).reshape(N_TILES, TILE_PIXELS)


def untile(tiles) -> np.ndarray:
    t = np.asarray(tiles, dtype=float).reshape(4, 4, TILE, TILE)
    return t.transpose(0, 2, 1, 3).reshape(IMG, IMG)


# ------------------------------------------------------------------ types


@dataclass(frozen=True)
class L1Node:
    index: int
    resonant: tuple[float, ...]
    rho: float
    T: float


@dataclass(frozen=True)
class L2Node:
    index: int
    pattern: tuple[int, ...]
    label: int
    rho2: float
    T2: float


@dataclass(frozen=True)
class PerturbSpec:
    rotations: tuple[float, ...] = ()
    translations: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        for a in self.rotations:
            if abs(a) > MAX_ROTATION:
                raise ValueError(f"rotation {a} deg is not a small perturbation (limit 15)")
        for dr, dc in self.translations:
            if abs(dr) > 1 or abs(dc) > 1:
                raise ValueError(f"translation {(dr, dc)} exceeds one pixel")

    @property
    def count(self) -> int:
        return len(self.rotations) + len(self.translations)

    def describe(self) -> str:
        rot = ",".join(f"{a:g}" for a in self.rotations)
        tr = ",".join(f"{r}:{c}" for r, c in self.translations)
        return f"rot={rot};shift={tr}"

    @classmethod
    def parse(cls, text: str) -> "PerturbSpec":
        if not text or text == "none":
            return cls()
        parts = dict(p.split("=", 1) for p in text.split(";") if p)
        rot = tuple(float(v) for v in parts.get("rot", "").split(",") if v)
        tr = tuple(
            tuple(int(x) for x in v.split(":")) for v in parts.get("shift", "").split(",") if v
        )
        return cls(rot, tr)


STANDARD_PERTURB = PerturbSpec(
    rotations=(-5.0, 5.0),
    translations=((0, 1), (0, -1), (1, 0), (-1, 0)),
)


@dataclass(frozen=True)
class ArnConfig:
    rho: float = 2.42
    T: float = 0.9
    rho2: float = 2.42
    T2: float = 0.9
    train_size: int = 0
    seed: int = 0
    method: str = "pwl"
    perturb: PerturbSpec = field(default_factory=PerturbSpec)
    l2_patterns: str = "final"

    def __post_init__(self) -> None:
        if not self.rho > 0 or not self.rho2 > 0:
            raise ValueError("rho values must be positive")
        if not (0 < self.T < 1 and 0 < self.T2 < 1):
            raise ValueError("thresholds must lie in (0, 1)")
        if self.l2_patterns not in ("online", "final"):
            raise ValueError("l2_patterns is 'online' or 'final'")


# ------------------------------------------------------------- layer one


def _is_quantized(a: np.ndarray) -> bool:
    s = a * LEVELS
    return bool(np.all(np.abs(s - np.rint(s)) < 1e-9))


def _response_table(rho: float) -> np.ndarray:
    """4 X(1-X) for every pixel difference k/255, k = -255..255."""
    d = np.arange(-LEVELS, LEVELS + 1) / LEVELS
    X = 1.0 / (1.0 + np.exp(-rho * d))
    return 4.0 * X * (1.0 - X)


def node_output(resonant, tile, rho: float) -> float:
    """Normalized aggregate of 49 resonators (reference formula)."""
    r = np.asarray(resonant, dtype=float)
    t = np.asarray(tile, dtype=float)
    X = 1.0 / (1.0 + np.exp(-rho * (t - r)))
    return float(np.mean(4.0 * X * (1.0 - X)))


class Layer1:
    """Append-only store of layer-1 nodes with fast output evaluation.

    Nodes whose pixels are multiples of 1/255 are evaluated from a per-rho
    table indexed by the integer pixel difference when the tile is quantized
    too. The choice is made per node, so a node's output never depends on
    which other nodes are stored.
    """

    def __init__(self, capacity: int = 256) -> None:
        self.n = 0
        self.resonant = np.zeros((capacity, TILE_PIXELS))
        self.levels = np.zeros((capacity, TILE_PIXELS), dtype=np.int16)
        self.rho = np.zeros(capacity)
        self.T = np.zeros(capacity)
        self.qmask = np.zeros(capacity, dtype=bool)
        self._tables: dict[float, np.ndarray] = {}

    def _grow(self) -> None:
        cap = 2 * self.resonant.shape[0]
        for name in ("resonant", "levels", "rho", "T", "qmask"):
            old = getattr(self, name)
            new = np.zeros((cap,) + old.shape[1:], dtype=old.dtype)
            new[: self.n] = old[: self.n]
            setattr(self, name, new)

    def _table(self, rho: float) -> np.ndarray:
        t = self._tables.get(rho)
        if t is None:
            t = self._tables[rho] = _response_table(rho)
        return t

    def add(self, tile: np.ndarray, rho: float, T: float) -> int:
        if self.n == self.resonant.shape[0]:
            self._grow()
        i = self.n
        self.resonant[i] = tile
        if _is_quantized(tile):
            self.levels[i] = np.rint(tile * LEVELS).astype(np.int16)
            self.qmask[i] = True
        self.rho[i] = rho
        self.T[i] = T
        self.n += 1
        return i + 1  # node indices start at 1

    def outputs(self, tile: np.ndarray, start: int = 0, rho_scale: float = 1.0) -> np.ndarray:
        """Outputs of nodes ``start+1 .. n`` for one tile."""
        if start >= self.n:
            return np.zeros(0)
        rhos = self.rho[start: self.n] * rho_scale
        out = np.empty(self.n - start)
        fast = self.qmask[start: self.n].copy() if _is_quantized(tile) else np.zeros(len(out), bool)
        if fast.any():
            lv = np.rint(tile * LEVELS).astype(np.int16)
            stored = self.levels[start: self.n]
            all_fast = bool(fast.all())
            diff = lv[None, :] - (stored if all_fast else stored[fast]) + LEVELS
            fr = rhos if all_fast else rhos[fast]
            uniq = np.unique(fr)
            if uniq.size == 1:
                vals = self._table(float(uniq[0]))[diff].mean(axis=1)
            else:
                vals = np.empty(len(fr))
                for r in uniq:
                    sel = fr == r
                    vals[sel] = self._table(float(r))[diff[sel]].mean(axis=1)
            if all_fast:
                return vals
            out[fast] = vals
        slow = ~fast
        if slow.any():
            d = tile[None, :] - self.resonant[start: self.n][slow]
            X = 1.0 / (1.0 + np.exp(-rhos[slow][:, None] * d))
            out[slow] = (4.0 * X * (1.0 - X)).mean(axis=1)
        return out

    @property
    def quantized(self) -> bool:
        """True when every stored node uses the table path."""
        return bool(self.qmask[: self.n].all())

    def match(self, tile: np.ndarray) -> tuple[int, float]:
        """Winning node index (or MISS) and its output."""
        if self.n == 0:
            return MISS, 0.0
        out = self.outputs(tile)
        fired = out > self.T[: self.n]
        if not fired.any():
            return MISS, 0.0
        masked = np.where(fired, out, -np.inf)
        k = int(np.argmax(masked))  # first maximum, i.e. lowest index
        return k + 1, float(out[k])

    def copy(self) -> "Layer1":
        c = Layer1(max(1, self.n))
        c.n = self.n
        c.resonant[: self.n] = self.resonant[: self.n]
        c.levels[: self.n] = self.levels[: self.n]
        c.rho[: self.n] = self.rho[: self.n]
        c.T[: self.n] = self.T[: self.n]
        c.qmask[: self.n] = self.qmask[: self.n]
        return c


class _MatchCache:
    """Remembers tile winners and only checks nodes added since."""

    def __init__(self, layer: Layer1) -> None:
        self.layer = layer
        self.memo: dict[bytes, tuple[int, int, float]] = {}

    def match(self, tile: np.ndarray) -> tuple[int, float]:
        layer = self.layer
        key = tile.tobytes()
        hit = self.memo.get(key)
        if hit is None:
            w, o = layer.match(tile)
        else:
            seen, w, o = hit
            if seen < layer.n:
                out = layer.outputs(tile, start=seen)
                fired = out > layer.T[seen: layer.n]
                if fired.any():
                    masked = np.where(fired, out, -np.inf)
                    k = int(np.argmax(masked))
                    if w == MISS or out[k] > o:
                        w, o = seen + k + 1, float(out[k])
        self.memo[key] = (layer.n, w, o)
        return w, o


def l1_match(layer1, tile, rho: float | None = None, T: float | None = None) -> int | None:
    """Index of the winning layer-1 node, or None on a miss.

    ``layer1`` may be a Layer1, a TrainedModel or a sequence of L1Node. When
    ``rho`` or ``T`` is given it overrides the per-node values.
    """
    nodes = _as_layer(layer1)
    if rho is not None or T is not None:
        nodes = nodes.copy()
        if rho is not None:
            nodes.rho[: nodes.n] = rho
        if T is not None:
            nodes.T[: nodes.n] = T
    w, _ = nodes.match(np.asarray(tile, dtype=float).ravel())
    return None if w == MISS else w


def _as_layer(obj) -> Layer1:
    if isinstance(obj, Layer1):
        return obj
    if isinstance(obj, TrainedModel):
        return obj._l1
    layer = Layer1(max(1, len(obj)))
    for node in obj:
        layer.add(np.asarray(node.resonant, dtype=float), node.rho, node.T)
    return layer


# ------------------------------------------------------------------ model


@dataclass(frozen=True, eq=False)
class TrainedModel:
    config: ArnConfig
    _l1: Layer1 = field(repr=False)
    patterns: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    rho2: np.ndarray = field(repr=False)
    T2: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.patterns.size and (self.patterns.max() > self._l1.n or self.patterns.min() < 1):
            raise ValueError("a layer-2 pattern references a missing layer-1 node")

    @property
    def n_l1(self) -> int:
        return self._l1.n

    @property
    def n_l2(self) -> int:
        return int(self.patterns.shape[0])

    @property
    def layer1(self) -> list[L1Node]:
        L = self._l1
        return [
            L1Node(i + 1, tuple(float(v) for v in L.resonant[i]), float(L.rho[i]), float(L.T[i]))
            for i in range(L.n)
        ]

    @property
    def layer2(self) -> list[L2Node]:
        return [
            L2Node(i + 1, tuple(int(v) for v in self.patterns[i]), int(self.labels[i]),
                   float(self.rho2[i]), float(self.T2[i]))
            for i in range(self.n_l2)
        ]

    def l1_outputs(self, tile) -> np.ndarray:
        return self._l1.outputs(np.asarray(tile, dtype=float).ravel())

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrainedModel):
            return NotImplemented
        a, b = self._l1, other._l1
        return (
            self.config == other.config
            and a.n == b.n
            and np.array_equal(a.resonant[: a.n], b.resonant[: b.n])
            and np.array_equal(a.rho[: a.n], b.rho[: b.n])
            and np.array_equal(a.T[: a.n], b.T[: b.n])
            and np.array_equal(self.patterns, other.patterns)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.rho2, other.rho2)
            and np.array_equal(self.T2, other.T2)
        )


def build_model(config: ArnConfig, layer1: Sequence[L1Node], layer2: Sequence[L2Node]) -> TrainedModel:
    """Assemble a model from node lists (used by the model file loader)."""
    for i, node in enumerate(layer1, start=1):
        if node.index != i:
            raise ValueError(f"layer-1 node {node.index} out of order (expected {i})")
        if len(node.resonant) != TILE_PIXELS:
            raise ValueError(f"layer-1 node {i} has {len(node.resonant)} pixels")
    layer = _as_layer(list(layer1))
    m = len(layer2)
    patterns = np.zeros((m, N_TILES), dtype=np.int64)
    labels = np.zeros(m, dtype=np.int64)
    rho2 = np.zeros(m)
    T2 = np.zeros(m)
    for i, node in enumerate(layer2):
        if node.index != i + 1:
            raise ValueError(f"layer-2 node {node.index} out of order (expected {i + 1})")
        if len(node.pattern) != N_TILES:
            raise ValueError(f"layer-2 node {node.index} pattern has {len(node.pattern)} entries")
        if not 0 <= node.label <= 9:
            raise ValueError(f"layer-2 node {node.index} has label {node.label}")
        patterns[i] = node.pattern
        labels[i] = node.label
        rho2[i] = node.rho2
        T2[i] = node.T2
    return TrainedModel(config, layer, patterns, labels, rho2, T2)


def with_l1_node(model: TrainedModel, tile, rho: float | None = None,
                 T: float | None = None) -> TrainedModel:
    """A copy of ``model`` with one more layer-1 node appended."""
    layer = model._l1.copy()
    layer.add(np.asarray(tile, dtype=float).ravel(),
              model.config.rho if rho is None else rho,
              model.config.T if T is None else T)
    return replace(model, _l1=layer)


# --------------------------------------------------------------- perturbing


def rotate_nn(img, degrees: float) -> np.ndarray:
    """Rotate about the image centre with nearest-neighbour sampling and zero fill."""
    a = np.asarray(img, dtype=float)
    if degrees == 0:
        return a.copy()
    h, w = a.shape
    cy, cx = (h - 1) / 2, (w - 1) / 2
    t = math.radians(degrees)
    cos, sin = math.cos(t), math.sin(t)
    rr, cc = np.mgrid[0:h, 0:w]
    y = rr - cy
    x = cc - cx
    # inverse mapping: where did each output pixel come from?
    sy = cos * y + sin * x + cy
    sx = -sin * y + cos * x + cx
    iy = np.floor(sy + 0.5).astype(int)
    ix = np.floor(sx + 0.5).astype(int)
    ok = (iy >= 0) & (iy < h) & (ix >= 0) & (ix < w)
    out = np.zeros_like(a)
    out[ok] = a[iy[ok], ix[ok]]
    return out


def translate(img, dr: int, dc: int) -> np.ndarray:
    """Shift by whole pixels (positive = down/right), filling with zeros."""
    a = np.asarray(img, dtype=float)
    out = np.zeros_like(a)
    h, w = a.shape
    src_r = slice(max(0, -dr), min(h, h - dr))
    dst_r = slice(max(0, dr), min(h, h + dr))
    src_c = slice(max(0, -dc), min(w, w - dc))
    dst_c = slice(max(0, dc), min(w, w + dc))
    out[dst_r, dst_c] = a[src_r, src_c]
    return out


def perturb(img, spec: PerturbSpec) -> list[np.ndarray]:
    """Perturbed variants of ``img``: rotations first, then translations."""
    if not isinstance(spec, PerturbSpec):
        spec = PerturbSpec(*spec)
    out = [rotate_nn(img, a) for a in spec.rotations]
    out += [translate(img, dr, dc) for dr, dc in spec.translations]
    return out


# ---------------------------------------------------------------- training


def _check_labels(labels) -> np.ndarray:
    lab = np.asarray(labels)
    if lab.size and (lab.min() < 0 or lab.max() > 9):
        bad = lab[(lab < 0) | (lab > 9)][0]
        raise ValueError(f"label {bad} is outside 0-9")
    return lab.astype(np.int64)


def _l1_pattern(cache: _MatchCache, tiles: np.ndarray) -> np.ndarray:
    return np.array([cache.match(t)[0] for t in tiles], dtype=np.int64)


def train(images, labels, cfg: ArnConfig = ArnConfig()) -> TrainedModel:
    """Grow both layers by presenting the images in the given order.

    Each image is followed by its perturbed variants when ``cfg.perturb``
    lists any. With ``cfg.l2_patterns == "final"`` layer 2 is built after
    layer 1 is complete, from patterns computed against the finished layer
    1 exactly as classification computes them; with ``"online"`` each
    pattern is taken while layer 1 is still growing.
    """
    lab = _check_labels(labels)
    imgs = np.asarray(images, dtype=float)
    if imgs.ndim != 3 or imgs.shape[1:] != (IMG, IMG):
        raise ValueError(f"expected images of shape (n, 28, 28), got {imgs.shape}")
    if len(imgs) != len(lab):
        raise ValueError("images and labels differ in length")

    layer = Layer1()
    cache = _MatchCache(layer)
    seq_tiles: list[np.ndarray] = []
    seq_labels: list[int] = []
    online: list[np.ndarray] = []
    for img, y in zip(imgs, lab):
        for variant in [img] + perturb(img, cfg.perturb):
            tiles = tile_image(variant)
            pattern = np.empty(N_TILES, dtype=np.int64)
            for j, t in enumerate(tiles):
                w, _ = cache.match(t)
                if w == MISS:
                    w = layer.add(t, cfg.rho, cfg.T)
                pattern[j] = w
            seq_tiles.append(tiles)
            seq_labels.append(int(y))
            online.append(pattern)

    if cfg.l2_patterns == "final":
        patterns = [_l1_pattern(cache, tiles) for tiles in seq_tiles]
    else:
        patterns = online

    stored: list[np.ndarray] = []
    stored_labels: list[int] = []
    by_label: dict[int, list[int]] = {}
    for pat, y in zip(patterns, seq_labels):
        rows = by_label.get(y, [])
        if rows:
            mat = np.stack([stored[i] for i in rows])
            best = float((mat == pat).mean(axis=1).max())
        else:
            best = 0.0
        if best < cfg.T2:
            by_label.setdefault(y, []).append(len(stored))
            stored.append(pat)
            stored_labels.append(y)

    m = len(stored)
    P = np.stack(stored) if m else np.zeros((0, N_TILES), dtype=np.int64)
    model = TrainedModel(
        cfg,
        layer,
        P,
        np.asarray(stored_labels, dtype=np.int64),
        np.full(m, cfg.rho2),
        np.full(m, cfg.T2),
    )
    return model


# ------------------------------------------------------------ classifying


class Winner(NamedTuple):
    node: int
    label: int
    output: float


@dataclass(frozen=True, eq=False)
class Verdict:
    kind: str
    label: int | None
    winners: tuple[Winner, ...]
    pattern: tuple[int, ...]
    tiles: np.ndarray | None = field(default=None, repr=False)
    resolved: bool = False

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(sorted({w.label for w in self.winners}))

    @property
    def path(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Layer-1 winners per tile and the winning layer-2 node(s)."""
        return self.pattern, tuple(w.node for w in self.winners)


def _l2_verdict(model: TrainedModel, pattern: np.ndarray, tiles=None) -> Verdict:
    pat = tuple(int(v) for v in pattern)
    if model.n_l2 == 0:
        return Verdict(NONE, None, (), pat, tiles)
    scores = (model.patterns == pattern).mean(axis=1)
    best = float(scores.max())
    if best <= 0.0:
        return Verdict(NONE, None, (), pat, tiles)
    winners = []
    for c in range(10):
        idx = np.flatnonzero((model.labels == c) & (scores == best))
        if idx.size:
            k = int(idx[0])
            winners.append(Winner(k + 1, c, best))
    if len(winners) == 1:
        return Verdict(SINGLE, winners[0].label, tuple(winners), pat, tiles)
    return Verdict(MULTIPLE, None, tuple(winners), pat, tiles)


def l1_pattern(model: TrainedModel, image) -> np.ndarray:
    tiles = tile_image(image)
    return np.array([model._l1.match(t)[0] for t in tiles], dtype=np.int64)


def classify(model: TrainedModel, image, policy: str = "report",
             delta: float = 0.05) -> Verdict:
    """Classify one image; ``policy`` is applied to multiple-winner verdicts."""
    if model.n_l1 == 0:
        raise ValueError("the model has no nodes")
    tiles = tile_image(image)
    pattern = np.array([model._l1.match(t)[0] for t in tiles], dtype=np.int64)
    v = _l2_verdict(model, pattern, tiles)
    return resolve_ambiguity(model, v, policy, delta)


def replay(model: TrainedModel, pattern: Sequence[int]) -> Verdict:
    """Re-derive a verdict from a recorded layer-1 path."""
    p = np.asarray(pattern, dtype=np.int64)
    if p.shape != (N_TILES,):
        raise ValueError("a path has 16 layer-1 indices")
    return _l2_verdict(model, p)


def relaxed_output(model: TrainedModel, node: int, tiles: np.ndarray, delta: float) -> float:
    """Mean layer-1 output of the image's tiles against layer-2 node ``node``'s
    constituent layer-1 nodes, with every rho scaled by ``1 - delta``."""
    L = model._l1
    pat = model.patterns[node - 1]
    total = 0.0
    for j in range(N_TILES):
        i = int(pat[j]) - 1
        total += node_output(L.resonant[i], tiles[j], float(L.rho[i]) * (1.0 - delta))
    return total / N_TILES


def resolve_ambiguity(model: TrainedModel, verdict: Verdict, policy: str = "relax-rho",
                      delta: float = 0.05) -> Verdict:
    if policy not in ("relax-rho", "report"):
        raise ValueError(f"unknown ambiguity policy {policy!r}")
    if verdict.kind != MULTIPLE or policy == "report" or delta == 0:
        return verdict
    if verdict.tiles is None:
        raise ValueError("relax-rho needs the verdict's tiles")
    scores = model.patterns == np.asarray(verdict.pattern)
    best = verdict.winners[0].output
    tied = np.flatnonzero(scores.mean(axis=1) == best)
    relaxed = [(relaxed_output(model, int(k) + 1, verdict.tiles, delta), int(k) + 1) for k in tied]
    top = max(r for r, _ in relaxed)
    top_nodes = [k for r, k in relaxed if r == top]
    classes = {}
    for k in top_nodes:
        c = int(model.labels[k - 1])
        classes.setdefault(c, k)
    winners = tuple(Winner(k, c, top) for c, k in sorted(classes.items()))
    if len(winners) == 1:
        return Verdict(SINGLE, winners[0].label, winners, verdict.pattern, verdict.tiles, True)
    return Verdict(MULTIPLE, None, winners, verdict.pattern, verdict.tiles, True)


# --------------------------------------------------------------- evaluation


@dataclass(frozen=True, eq=False)
class ConfusionResult:
    matrix: np.ndarray
    accuracy: float
    counts: dict
    verdicts: tuple

    @property
    def n(self) -> int:
        return len(self.verdicts)

    @property
    def wrong_rate(self) -> float:
        return self.counts.get("wrong", 0) / self.n if self.n else 0.0

    @property
    def multiple_rate(self) -> float:
        return self.counts.get("multiple", 0) / self.n if self.n else 0.0

    def to_csv(self) -> str:
        lines = ["true," + ",".join(str(c) for c in range(10)) + ",total"]
        totals = Counter(self.counts.get("_true", ()))
        for r in range(10):
            cells = ",".join(f"{v:.2f}" for v in self.matrix[r])
            lines.append(f"{r},{cells},{totals.get(r, 0)}")
        return "\n".join(lines) + "\n"


def confusion_matrix(model: TrainedModel, images, labels, policy: str = "report",
                     delta: float = 0.05) -> ConfusionResult:
    """Rows are true classes, columns predictions.

    A multiple-winner verdict spreads its unit of mass evenly over the tied
    classes. Accuracy is the trace over the number of images.
    """
    lab = _check_labels(labels)
    M = np.zeros((10, 10))
    counts = Counter()
    verdicts = []
    for img, y in zip(images, lab):
        v = classify(model, img, policy, delta)
        verdicts.append(v)
        y = int(y)
        if v.kind == SINGLE:
            M[y, v.label] += 1
            counts["correct" if v.label == y else "wrong"] += 1
        elif v.kind == MULTIPLE:
            share = 1.0 / len(v.labels)
            for c in v.labels:
                M[y, c] += share
            counts["multiple"] += 1
        else:
            counts["none"] += 1
    n = len(lab)
    acc = float(np.trace(M) / n) if n else 0.0
    out = dict(counts)
    out["_true"] = tuple(int(v) for v in lab)
    return ConfusionResult(M, acc, out, tuple(verdicts))


def node_counts(images, labels, cfgs: Iterable[ArnConfig]) -> list[tuple[ArnConfig, int, int]]:
    res = []
    for cfg in cfgs:
        m = train(images, labels, cfg)
        res.append((cfg, m.n_l1, m.n_l2))
    return res


# ------------------------------------------------------------ retuning


def retune_layer1(model: TrainedModel, images, rho_min: float = 0.5,
                  rho_max: float = 10.0) -> TrainedModel:
    """Optional pass: set each layer-1 node's rho from the spread of the tiles it wins.

    The spread is the standard deviation of the pixel differences between a
    node and the tiles it won; rho then follows from matching the resonance
    coverage to the half-power width of a Gaussian with that spread. Nodes
    that won fewer than two tiles keep their rho.
    """
    L = model._l1
    sums = np.zeros(L.n)
    sq = np.zeros(L.n)
    cnt = np.zeros(L.n)
    for img in images:
        for t in tile_image(img):
            w, _ = L.match(t)
            if w == MISS:
                continue
            d = t - L.resonant[w - 1]
            sums[w - 1] += d.sum()
            sq[w - 1] += (d * d).sum()
            cnt[w - 1] += TILE_PIXELS
    layer = L.copy()
    for i in range(L.n):
        if cnt[i] < 2 * TILE_PIXELS:
            continue
        mean = sums[i] / cnt[i]
        var = max(sq[i] / cnt[i] - mean * mean, 0.0)
        sigma = math.sqrt(var)
        if sigma > 0:
            layer.rho[i] = min(max(rho_from_sigma(sigma), rho_min), rho_max)
    return replace(model, _l1=layer)


def coverage_of(node: L1Node) -> tuple:
    """Per-pixel half-power coverage of a layer-1 node."""
    return tuple(coverage_bounds(node.rho, x) for x in node.resonant)


__all__ = [
    "tile_image", "untile", "L1Node", "L2Node", "PerturbSpec", "STANDARD_PERTURB",
    "ArnConfig", "Layer1", "l1_match", "TrainedModel", "build_model", "with_l1_node",
    "rotate_nn", "translate", "perturb", "train", "Verdict", "Winner", "classify",
    "replay", "resolve_ambiguity", "relaxed_output", "confusion_matrix",
    "ConfusionResult", "node_counts", "retune_layer1", "node_output", "l1_pattern",
    "coverage_of",
]
