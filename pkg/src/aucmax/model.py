"""Trained-model containers and the text model-file format.

A model file is self-describing: it holds the standardizer, the embedding
map, and the linear weights, so prediction needs nothing but the file.
Floats are written with 17 significant digits, which round-trips binary64
exactly, making saved models bit-reproducible.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .dataio import Dataset, SparseVector, Standardizer, standardize_apply
from .embedding import LandmarkSet, NystroemMap, RffMap, embed, embed_point
from .errors import DataError, ParseError
from .kernels import GaussianKernelParams

_MAGIC = "aucmax-model 1"


@dataclass
class LinearModel:
    """Weight vector over the embedded space plus training provenance."""

    w: np.ndarray
    trained_by: str
    hyperparameters: dict
    embedding_id: str = ""
    diagnostics: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 1:
            raise DataError("weights must be a vector")
        if not np.all(np.isfinite(self.w)):
            raise DataError("weights must be finite")
        if self.trained_by not in ("batch", "sgd"):
            raise DataError(f"unknown solver tag {self.trained_by!r}")

    @property
    def r(self) -> int:
        return self.w.shape[0]


def embedding_digest(m: NystroemMap | RffMap) -> str:
    """Stable identifier binding weights to the exact embedding arrays."""
    h = hashlib.sha256()
    if isinstance(m, NystroemMap):
        h.update(b"nystroem")
        h.update(np.ascontiguousarray(m.landmarks.centroids).tobytes())
        h.update(np.ascontiguousarray(m.projection).tobytes())
        h.update(repr(m.kernel.sigma2).encode())
    else:
        h.update(b"rff")
        h.update(np.ascontiguousarray(m.frequencies).tobytes())
        h.update(np.ascontiguousarray(m.phases).tobytes())
        h.update(repr(m.kernel.sigma2).encode())
    return h.hexdigest()


@dataclass
class TrainedPipeline:
    """standardize -> embed -> dot product, the full scoring path."""

    standardizer: Standardizer
    embedding: NystroemMap | RffMap
    linear: LinearModel
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.linear.r != self.embedding_rank:
            raise DataError(
                f"weight length {self.linear.r} does not match embedding rank "
                f"{self.embedding_rank}"
            )

    @property
    def embedding_rank(self) -> int:
        return self.embedding.rank

    @property
    def dim(self) -> int:
        return self.standardizer.dim

    def score(self, data: Dataset) -> np.ndarray:
        if data.dim != self.dim:
            raise DataError(f"model expects dimension {self.dim}, data has {data.dim}")
        emb = embed(self.embedding, standardize_apply(self.standardizer, data))
        return emb.features @ self.linear.w

    def score_point(self, x: SparseVector | np.ndarray) -> float:
        xv = x.to_dense(self.dim) if isinstance(x, SparseVector) else np.asarray(x, dtype=np.float64)
        if xv.shape[0] != self.dim:
            raise DataError(f"model expects dimension {self.dim}, point has {xv.shape[0]}")
        z = (xv - self.standardizer.mean) / self.standardizer.stdev
        return float(embed_point(self.embedding, z) @ self.linear.w)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_matrix(out: list[str], name: str, M: np.ndarray):
    M = np.atleast_2d(M)
    out.append(f"{name} {M.shape[0]} {M.shape[1]}")
    for row in M:
        out.append(" ".join(_fmt(v) for v in row))


def save_model(path: str, pipe: TrainedPipeline):
    lines = [_MAGIC, "[meta]", f"solver {pipe.linear.trained_by}"]
    for key, value in sorted(pipe.meta.items()):
        lines.append(f"{key} {value}")

    lines.append("[standardizer]")
    lines.append(f"dim {pipe.standardizer.dim}")
    _write_matrix(lines, "mean", pipe.standardizer.mean)
    _write_matrix(lines, "stdev", pipe.standardizer.stdev)

    emb = pipe.embedding
    if isinstance(emb, NystroemMap):
        lines.append("[nystroem]")
        lines.append(f"v {emb.landmarks.v}")
        lines.append(f"r {emb.rank}")
        lines.append(f"d {emb.landmarks.dim}")
        lines.append(f"sigma2 {_fmt(emb.kernel.sigma2)}")
        if emb.seed is not None:
            lines.append(f"seed {emb.seed}")
        _write_matrix(lines, "centroids", emb.landmarks.centroids)
        _write_matrix(lines, "projection", emb.projection)
        _write_matrix(lines, "eigenvalues", emb.eigenvalues)
    else:
        lines.append("[rff]")
        lines.append(f"D {emb.rank}")
        lines.append(f"d {emb.frequencies.shape[1]}")
        lines.append(f"sigma2 {_fmt(emb.kernel.sigma2)}")
        if emb.seed is not None:
            lines.append(f"seed {emb.seed}")
        _write_matrix(lines, "frequencies", emb.frequencies)
        _write_matrix(lines, "phases", emb.phases)

    lin = pipe.linear
    lines.append("[linear]")
    lines.append(f"r {lin.r}")
    lines.append(f"trained_by {lin.trained_by}")
    for key, value in sorted(lin.hyperparameters.items()):
        val = _fmt(value) if isinstance(value, float) else value
        lines.append(f"{key} {val}")
    lines.append(f"embedding_id {lin.embedding_id}")
    _write_matrix(lines, "weights", lin.w)

    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


class _Reader:
    def __init__(self, lines: list[str]):
        self.lines = lines
        self.pos = 0

    def peek(self) -> str | None:
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def next(self) -> str:
        line = self.peek()
        if line is None:
            raise ParseError("unexpected end of model file", self.pos)
        self.pos += 1
        return line

    def read_matrix(self, name: str) -> np.ndarray:
        lineno = self.pos + 1
        head = self.next().split()
        if len(head) != 3 or head[0] != name:
            raise ParseError(f"expected matrix header {name!r}", lineno)
        rows, cols = int(head[1]), int(head[2])
        M = np.empty((rows, cols))
        for i in range(rows):
            vals = self.next().split()
            if len(vals) != cols:
                raise ParseError(f"matrix {name!r} row has {len(vals)} values, expected {cols}", self.pos)
            M[i] = [float(v) for v in vals]
        return M

    def read_kv(self) -> dict:
        """Consume `key value` lines until the next section header."""
        out = {}
        while True:
            line = self.peek()
            if line is None or line.startswith("["):
                return out
            parts = line.split(None, 1)
            if len(parts) == 1 or parts[0] in (
                "mean",
                "stdev",
                "centroids",
                "projection",
                "eigenvalues",
                "frequencies",
                "phases",
                "weights",
            ):
                return out
            self.next()
            out[parts[0]] = parts[1]

    def expect_section(self, name: str):
        lineno = self.pos + 1
        line = self.next()
        if line != f"[{name}]":
            raise ParseError(f"expected section [{name}], got {line!r}", lineno)


def load_model(path: str) -> TrainedPipeline:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    rd = _Reader(lines)
    if rd.next() != _MAGIC:
        raise ParseError("not a model file (bad magic line)", 1)

    rd.expect_section("meta")
    meta = rd.read_kv()
    meta.pop("solver", None)

    rd.expect_section("standardizer")
    std_kv = rd.read_kv()
    mean = rd.read_matrix("mean").ravel()
    stdev = rd.read_matrix("stdev").ravel()
    if int(std_kv["dim"]) != mean.shape[0]:
        raise ParseError("standardizer dim does not match its arrays")
    standardizer = Standardizer(mean, stdev)

    section = rd.next()
    if section == "[nystroem]":
        kv = rd.read_kv()
        centroids = rd.read_matrix("centroids")
        projection = rd.read_matrix("projection")
        lam = rd.read_matrix("eigenvalues").ravel()
        seed = int(kv["seed"]) if "seed" in kv else None
        embedding = NystroemMap(
            LandmarkSet(centroids),
            GaussianKernelParams(float(kv["sigma2"])),
            projection,
            lam,
            seed=seed,
        )
    elif section == "[rff]":
        kv = rd.read_kv()
        freqs = rd.read_matrix("frequencies")
        phases = rd.read_matrix("phases").ravel()
        seed = int(kv["seed"]) if "seed" in kv else None
        embedding = RffMap(freqs, phases, GaussianKernelParams(float(kv["sigma2"])), seed=seed)
    else:
        raise ParseError(f"expected an embedding section, got {section!r}")

    rd.expect_section("linear")
    kv = rd.read_kv()
    w = rd.read_matrix("weights").ravel()
    hyper = {
        k: v for k, v in kv.items() if k not in ("r", "trained_by", "embedding_id")
    }
    for key in ("c", "lambda", "t0", "grad_tol", "cg_tol"):
        if key in hyper:
            hyper[key] = float(hyper[key])
    for key in ("epochs", "rskip", "askip", "seed", "max_outer", "cg_max"):
        if key in hyper:
            hyper[key] = int(hyper[key])
    linear = LinearModel(
        w,
        kv.get("trained_by", "batch"),
        hyper,
        embedding_id=kv.get("embedding_id", ""),
    )
    return TrainedPipeline(standardizer, embedding, linear, meta=meta)
