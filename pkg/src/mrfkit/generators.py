"""Seeded instance generators for tests and benchmarks.

Every generator is a pure function of (params, seed): identical inputs
produce identical instances byte-for-byte.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .energy import EnergyFunction

__all__ = ["generate", "GENERATOR_KINDS"]

GENERATOR_KINDS = (
    "grid-potts",
    "denoise-trunc-l2",
    "random-binary",
    "random-nonsubmodular",
    "random-submodular",
    "random-multilabel",
)


def _grid_edges(h: int, w: int) -> list[tuple[int, int]]:
    edges = []
    for r in range(h):
        for c in range(w):
            i = r * w + c
            if c + 1 < w:
                edges.append((i, i + 1))
            if r + 1 < h:
                edges.append((i, i + w))
    return edges


def _voronoi_field(rng: np.random.Generator, h: int, w: int, labels: int) -> np.ndarray:
    """Piecewise-constant label field: nearest of a few random seed points."""
    k = max(2, labels)
    pr = rng.integers(0, h, size=k)
    pc = rng.integers(0, w, size=k)
    pl = rng.integers(0, labels, size=k)
    rows = np.arange(h)[:, None, None]
    cols = np.arange(w)[None, :, None]
    dist = np.abs(rows - pr[None, None, :]) + np.abs(cols - pc[None, None, :])
    return pl[np.argmin(dist, axis=2)].reshape(h * w)


def _random_graph(rng: np.random.Generator, n: int, edge_prob: float) -> list[tuple[int, int]]:
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < edge_prob:
                edges.append((u, v))
    return edges


def generate(kind: str, params: Mapping | None = None, seed: int = 0) -> EnergyFunction:
    """Build a deterministic instance of the requested kind.

    grid-potts: 4-connected grid, indicator unaries from a noisy label
        field, unit Potts coupling scaled by ``lam``.
        params: h, w, labels, lam, noise, unary_scale.
    denoise-trunc-l2: squared-distance unaries to a noisy observation of a
        piecewise-constant signal, truncated quadratic pairwise.
        params: h, w, labels, lam, trunc, noise.
    random-binary / random-nonsubmodular / random-submodular: i.i.d. uniform
        tables on a random graph; the latter two force the submodularity of
        every edge one way or the other. params: n, edge_prob, scale.
    random-multilabel: same with ``labels`` per node.
    """
    p = dict(params or {})
    rng = np.random.default_rng(seed)

    if kind == "grid-potts":
        h, w = int(p.get("h", 8)), int(p.get("w", 8))
        labels = int(p.get("labels", 3))
        lam = float(p.get("lam", 1.0))
        noise = float(p.get("noise", 0.1))
        unary_scale = float(p.get("unary_scale", 1.0))
        if h < 1 or w < 1 or labels < 1:
            raise ValueError("grid dims and label count must be positive")
        field = _voronoi_field(rng, h, w, labels)
        obs = field.copy()
        flips = rng.random(h * w) < noise
        obs[flips] = rng.integers(0, labels, size=int(flips.sum()))
        unaries = [
            unary_scale * (np.arange(labels) != obs[i]).astype(float)
            for i in range(h * w)
        ]
        potts = lam * (1.0 - np.eye(labels))
        edges = _grid_edges(h, w)
        return EnergyFunction([labels] * (h * w), unaries, edges, [potts] * len(edges))

    if kind == "denoise-trunc-l2":
        h, w = int(p.get("h", 16)), int(p.get("w", 16))
        labels = int(p.get("labels", 8))
        lam = float(p.get("lam", 0.4))
        trunc = float(p.get("trunc", 4.0))
        noise = float(p.get("noise", 1.0))
        if h < 1 or w < 1 or labels < 1:
            raise ValueError("grid dims and label count must be positive")
        base = _voronoi_field(rng, h, w, labels).astype(float)
        obs = np.clip(base + rng.normal(0.0, noise, size=h * w), 0.0, labels - 1.0)
        lab = np.arange(labels, dtype=float)
        unaries = [(lab - obs[i]) ** 2 for i in range(h * w)]
        diff2 = (lab[:, None] - lab[None, :]) ** 2
        table = lam * np.minimum(diff2, trunc)
        edges = _grid_edges(h, w)
        return EnergyFunction([labels] * (h * w), unaries, edges, [table] * len(edges))

    if kind in ("random-binary", "random-nonsubmodular", "random-submodular"):
        n = int(p.get("n", 8))
        edge_prob = float(p.get("edge_prob", 0.35))
        scale = float(p.get("scale", 1.5))
        if n < 1:
            raise ValueError("need at least one node")
        edges = _random_graph(rng, n, edge_prob)
        if kind == "random-nonsubmodular" and not edges and n >= 2:
            edges = [(0, 1)]
        unaries = [rng.uniform(-scale, scale, size=2) for _ in range(n)]
        tables = [rng.uniform(-scale, scale, size=(2, 2)) for _ in edges]
        if kind == "random-submodular":
            for t in tables:
                if t[0, 0] + t[1, 1] > t[0, 1] + t[1, 0]:
                    t[0, 0], t[0, 1] = t[0, 1], t[0, 0]
                    t[1, 1], t[1, 0] = t[1, 0], t[1, 1]
        if kind == "random-nonsubmodular":
            if not edges:
                raise ValueError("non-submodular instances need at least two nodes")
            t = tables[0]
            while t[0, 0] + t[1, 1] <= t[0, 1] + t[1, 0]:
                t = rng.uniform(-scale, scale, size=(2, 2))
            tables[0] = t
        return EnergyFunction([2] * n, unaries, edges, tables)

    if kind == "random-multilabel":
        n = int(p.get("n", 6))
        labels = int(p.get("labels", 3))
        edge_prob = float(p.get("edge_prob", 0.35))
        scale = float(p.get("scale", 1.5))
        if n < 1 or labels < 1:
            raise ValueError("node and label counts must be positive")
        edges = _random_graph(rng, n, edge_prob)
        unaries = [rng.uniform(-scale, scale, size=labels) for _ in range(n)]
        tables = [rng.uniform(-scale, scale, size=(labels, labels)) for _ in edges]
        return EnergyFunction([labels] * n, unaries, edges, tables)

    raise ValueError(f"unknown instance kind {kind!r}")
