"""Max-flow / min-cut on explicit residual networks.

Dinic's algorithm with the current-arc optimization and an iterative
blocking-flow search (no recursion, so graph size is not limited by the
interpreter stack). Capacities are real; residuals below a small floor
count as saturated so augmentation terminates cleanly on float inputs.
"""

from __future__ import annotations

from collections import deque

RESIDUAL_FLOOR = 1e-12

__all__ = ["FlowNetwork", "MaxFlowResult", "max_flow"]


class FlowNetwork:
    """Directed arcs with paired reverse arcs between ``num_nodes`` nodes.

    Arc ``a`` and ``a ^ 1`` are mutual reverses; pushing flow on one frees
    capacity on the other.
    """

    __slots__ = ("num_nodes", "source", "sink", "head", "arc_to", "arc_cap", "arc_next", "_orig_cap")

    def __init__(self, num_nodes: int, source: int, sink: int) -> None:
        if source == sink:
            raise ValueError("source and sink must differ")
        if not (0 <= source < num_nodes and 0 <= sink < num_nodes):
            raise ValueError("source/sink outside node range")
        self.num_nodes = num_nodes
        self.source = source
        self.sink = sink
        self.head = [-1] * num_nodes
        self.arc_to: list[int] = []
        self.arc_cap: list[float] = []
        self.arc_next: list[int] = []
        self._orig_cap: list[float] = []

    def add_arc(self, u: int, v: int, cap: float, rev_cap: float = 0.0) -> None:
        if cap < 0 or rev_cap < 0:
            raise ValueError("capacities must be non-negative")
        for a, b, c in ((u, v, cap), (v, u, rev_cap)):
            self.arc_to.append(b)
            self.arc_cap.append(float(c))
            self._orig_cap.append(float(c))
            self.arc_next.append(self.head[a])
            self.head[a] = len(self.arc_to) - 1

    def add_arcs(self, us, vs, caps) -> None:
        """Bulk add_arc without reverse capacity; inputs are sequences."""
        head, arc_to, arc_cap, nxt = self.head, self.arc_to, self.arc_cap, self.arc_next
        orig = self._orig_cap
        a = len(arc_to)
        for u, v, c in zip(us, vs, caps):
            if c < 0:
                raise ValueError("capacities must be non-negative")
            arc_to.append(v)
            arc_cap.append(c)
            orig.append(c)
            nxt.append(head[u])
            head[u] = a
            arc_to.append(u)
            arc_cap.append(0.0)
            orig.append(0.0)
            nxt.append(head[v])
            head[v] = a + 1
            a += 2

    def cut_capacity(self, source_side: set[int]) -> float:
        """Total original capacity of arcs leaving the given side."""
        total = 0.0
        for u in source_side:
            a = self.head[u]
            while a != -1:
                if self.arc_to[a] not in source_side:
                    total += self._orig_cap[a]
                a = self.arc_next[a]
        return total


class MaxFlowResult:
    __slots__ = ("flow_value", "source_side", "sink_side")

    def __init__(self, flow_value: float, source_side: set[int], num_nodes: int) -> None:
        self.flow_value = flow_value
        self.source_side = source_side
        self.sink_side = set(range(num_nodes)) - source_side


def max_flow(net: FlowNetwork) -> MaxFlowResult:
    """Maximum flow and the source-reachable min cut of the residual graph."""
    n = net.num_nodes
    s, t = net.source, net.sink
    head, arc_to, cap, nxt = net.head, net.arc_to, net.arc_cap, net.arc_next
    floor = RESIDUAL_FLOOR
    total = 0.0
    level = [-1] * n
    it = [0] * n

    def bfs() -> bool:
        for i in range(n):
            level[i] = -1
        level[s] = 0
        dq = deque([s])
        while dq:
            u = dq.popleft()
            a = head[u]
            while a != -1:
                v = arc_to[a]
                if level[v] < 0 and cap[a] > floor:
                    level[v] = level[u] + 1
                    dq.append(v)
                a = nxt[a]
        return level[t] >= 0

    while bfs():
        for i in range(n):
            it[i] = head[i]
        path: list[int] = []
        u = s
        while True:
            if u == t:
                push = min(cap[a] for a in path)
                for a in path:
                    cap[a] -= push
                    cap[a ^ 1] += push
                total += push
                k = 0
                while k < len(path) and cap[path[k]] > floor:
                    k += 1
                del path[k:]
                u = arc_to[path[-1]] if path else s
                continue
            a = it[u]
            while a != -1 and not (cap[a] > floor and level[arc_to[a]] == level[u] + 1):
                a = nxt[a]
            it[u] = a
            if a == -1:
                if u == s:
                    break
                level[u] = -1  # dead end for this phase
                last = path.pop()
                tail = arc_to[last ^ 1]
                it[tail] = nxt[last]
                u = tail
            else:
                path.append(a)
                u = arc_to[a]

    reachable = {s}
    dq = deque([s])
    while dq:
        u = dq.popleft()
        a = head[u]
        while a != -1:
            v = arc_to[a]
            if v not in reachable and cap[a] > floor:
                reachable.add(v)
                dq.append(v)
            a = nxt[a]
    return MaxFlowResult(total, reachable, n)
