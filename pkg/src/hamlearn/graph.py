"""Network digraph: input/hidden partition, arc-indexed weights, outputs.

Vertices are 1-based at the public boundary (``build_graph`` arguments,
``arc``/``parents``/``children`` helpers, CSV column names) and 0-based in
the stored arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class StructureError(ValueError):
    """The digraph violates the input-vertex constraints."""


@dataclass(frozen=True)
class NetGraph:
    n: int
    d: int
    arcs: tuple[tuple[int, int], ...]
    outputs: tuple[int, ...]
    # 0-based arrays, one entry per weight in flat order
    src: np.ndarray = field(repr=False, compare=False)
    dst: np.ndarray = field(repr=False, compare=False)
    pa: tuple[tuple[int, ...], ...] = field(repr=False, compare=False)
    ch: tuple[tuple[int, ...], ...] = field(repr=False, compare=False)
    _index: dict = field(repr=False, compare=False)

    @property
    def n_hidden(self) -> int:
        return self.n - self.d

    @property
    def n_weights(self) -> int:
        return len(self.arcs)

    @property
    def output_hidden(self) -> np.ndarray:
        """0-based positions of the output vertices inside the state vector."""
        return np.array([o - 1 - self.d for o in self.outputs], dtype=np.intp)

    def parents(self, i: int) -> tuple[int, ...]:
        return tuple(j + 1 for j in self.pa[i - 1])

    def children(self, i: int) -> tuple[int, ...]:
        return tuple(k + 1 for k in self.ch[i - 1])

    def arc(self, j: int, i: int) -> int:
        """Flat weight index of arc (j, i), i.e. of w_ij."""
        try:
            return self._index[(j, i)]
        except KeyError:
            raise KeyError(f"no arc ({j}, {i})") from None

    def by_arc(self, w: np.ndarray) -> dict[tuple[int, int], float]:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n_weights,):
            raise ValueError(f"expected {self.n_weights} weights, got shape {w.shape}")
        return {a: float(w[k]) for k, a in enumerate(self.arcs)}

    def flatten(self, weights: dict[tuple[int, int], float]) -> np.ndarray:
        if set(weights) != set(self.arcs):
            raise ValueError("weight mapping does not match the arc set")
        return np.array([weights[a] for a in self.arcs], dtype=float)

    def weight_labels(self) -> list[str]:
        return [f"{i}_{j}" for j, i in self.arcs]

    def is_hidden_dag(self) -> bool:
        return topological_order(self) is not None


def build_graph(n: int, d: int, arcs: Iterable[Sequence[int]], outputs: Iterable[int]) -> NetGraph:
    """Validate and index a network digraph.

    ``arcs`` holds 1-based pairs (j, i) meaning j -> i. Weights are laid out
    as (w_{1*}, ..., w_{n*}), each block sorted by ascending parent.
    """
    n, d = int(n), int(d)
    if not 0 < d < n:
        raise ValueError(f"need 0 < d < n, got d={d}, n={n}")
    arc_list = [tuple(int(v) for v in a) for a in arcs]
    for a in arc_list:
        if len(a) != 2:
            raise ValueError(f"arc {a} is not a pair")
        for v in a:
            if not 1 <= v <= n:
                raise IndexError(f"arc {a} references vertex {v} outside 1..{n}")
    if len(set(arc_list)) != len(arc_list):
        dup = next(a for a in arc_list if arc_list.count(a) > 1)
        raise StructureError(f"duplicate arc {dup}")

    outs = tuple(int(o) for o in outputs)
    if not outs:
        raise StructureError("output set is empty")
    for o in outs:
        if not 1 <= o <= n:
            raise IndexError(f"output vertex {o} outside 1..{n}")
        if o <= d:
            raise StructureError(f"output vertex {o} is an input vertex")
    if len(set(outs)) != len(outs):
        raise StructureError("duplicate output vertex")

    for j, i in arc_list:
        if i <= d:
            raise StructureError(f"input vertex {i} has an incoming arc from {j}")
    for v in range(1, d + 1):
        if not any(j == v and i > d for j, i in arc_list):
            raise StructureError(f"input vertex {v} has no outgoing arc into the hidden set")

    ordered = sorted(arc_list, key=lambda a: (a[1], a[0]))
    pa = [[] for _ in range(n)]
    ch = [[] for _ in range(n)]
    for j, i in ordered:
        pa[i - 1].append(j - 1)
        ch[j - 1].append(i - 1)
    return NetGraph(
        n=n,
        d=d,
        arcs=tuple(ordered),
        outputs=outs,
        src=np.array([j - 1 for j, _ in ordered], dtype=np.intp),
        dst=np.array([i - 1 for _, i in ordered], dtype=np.intp),
        pa=tuple(tuple(p) for p in pa),
        ch=tuple(tuple(sorted(c)) for c in ch),
        _index={a: k for k, a in enumerate(ordered)},
    )


def full_graph(n_hidden: int, d: int = 1, outputs: Iterable[int] | None = None,
               self_loops: bool = True) -> NetGraph:
    """Fully connected recurrent block with every input wired to every hidden vertex."""
    n = d + n_hidden
    hidden = range(d + 1, n + 1)
    arcs = [(j, i) for i in hidden for j in range(1, d + 1)]
    arcs += [(j, i) for i in hidden for j in hidden if self_loops or i != j]
    return build_graph(n, d, arcs, outputs if outputs is not None else [n])


def layered_graph(sizes: Sequence[int], outputs: Iterable[int] | None = None) -> NetGraph:
    """Feed-forward DAG; ``sizes[0]`` is the input count."""
    bounds = np.cumsum([0, *sizes])
    arcs = []
    for layer in range(len(sizes) - 1):
        for j in range(bounds[layer] + 1, bounds[layer + 1] + 1):
            for i in range(bounds[layer + 1] + 1, bounds[layer + 2] + 1):
                arcs.append((j, i))
    n = int(bounds[-1])
    if outputs is None:
        outputs = range(int(bounds[-2]) + 1, n + 1)
    return build_graph(n, sizes[0], arcs, outputs)


def switch_sums_check(g: NetGraph) -> bool:
    """Enumerate arcs by destination-then-parent and by source-then-child; compare."""
    by_dst = sorted((m, k) for k in range(g.d, g.n) for m in g.pa[k])
    by_src = sorted((m, k) for m in range(g.n) for k in g.ch[m])
    return by_dst == by_src == sorted((j - 1, i - 1) for j, i in g.arcs)


def topological_order(g: NetGraph) -> list[int] | None:
    """Topological order (0-based) of the hidden vertices, or None on a cycle."""
    indeg = {v: sum(1 for j in g.pa[v] if j >= g.d) for v in range(g.d, g.n)}
    ready = sorted(v for v, k in indeg.items() if k == 0)
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for k in g.ch[v]:
            indeg[k] -= 1
            if indeg[k] == 0:
                ready.append(k)
    return order if len(order) == g.n_hidden else None
