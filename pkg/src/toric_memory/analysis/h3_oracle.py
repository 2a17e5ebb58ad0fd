"""Exhaustive join-tree enumeration of small error/ghost chains in spacetime.

A chain is grown the way the decoder grows it: two sub-chains S and S' are
joined through a link from an endpoint of S to an endpoint of S'.  Chains are
anchored with one endpoint at the origin and counted once per distinct set of
errors, ghosts and recovery links.  The rules:

* a real error is a unit spatial edge (4 orientations from its anchor); a
  ghost is a single spacetime point seen in one round only;
* a recovery link of *-length l (spatial L1 plus alpha times the birth-round
  difference) needs l <= the endpoint separation of each sub-chain that is not
  a lone ghost, and l >= every link already inside either sub-chain; meeting a
  bound with equality is a tie won half the time;
* the two linked particles must be visible in a common round tau in which the
  cut-off l^beta < T_r^beta + T_s^beta holds; a ghost is visible only in its
  own round, a real particle from its birth onwards;
* a link of length 0 fuses two endpoints at the same spacetime point;
* if the endpoints of S fail the cut-off, S stays open and a later sub-chain
  may start on S's end site, continuing its world line (no recovery link);
* a ghost used on one side leaves a real particle at its site from the next
  round on.

``mode="2d"`` keeps every defect in one round and drops the cut-off, which
reproduces the counting behind the perfect-measurement h2 bounds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from ..lattice import BETA

INF = math.inf
DATA_FILE = Path(__file__).resolve().parent.parent / "data" / "h3_small.json"
STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class End:
    x: int
    y: int
    t: int  # birth round (the round of a ghost)
    ghost: bool

    def shifted(self, dx: int, dy: int, dt: int) -> "End":
        return End(self.x + dx, self.y + dy, self.t + dt, self.ghost)


@dataclass(frozen=True)
class Chain:
    items: frozenset
    a: End
    b: End
    bound: float
    maxlink: float
    weight: float
    lone_ghost: bool = False


def _star(e1: End, e2: End, alpha: float) -> float:
    return abs(e1.x - e2.x) + abs(e1.y - e2.y) + alpha * abs(e1.t - e2.t)


def _shift_item(item, dx, dy, dt):
    kind = item[0]
    if kind == "G":
        x, y, t = item[1]
        return ("G", (x + dx, y + dy, t + dt))
    p, q = item[1], item[2]
    p = (p[0] + dx, p[1] + dy, p[2] + dt)
    q = (q[0] + dx, q[1] + dy, q[2] + dt)
    return (kind,) + tuple(sorted((p, q)))


def _shift(chain: Chain, dx: int, dy: int, dt: int) -> Chain:
    return Chain(
        frozenset(_shift_item(i, dx, dy, dt) for i in chain.items),
        chain.a.shifted(dx, dy, dt),
        chain.b.shifted(dx, dy, dt),
        chain.bound,
        chain.maxlink,
        chain.weight,
        chain.lone_ghost,
    )


def _visible(e: End):
    return (e.t, e.t) if e.ghost else (e.t, INF)


def _cutoff_ok(l: float, e1: End, e2: End, beta: float) -> bool:
    lo = max(e1.t, e2.t)
    hi = min(_visible(e1)[1], _visible(e2)[1])
    if hi < lo:
        return False
    if hi == INF:
        return True
    return l**beta < (hi - e1.t + 1) ** beta + (hi - e2.t + 1) ** beta


def _stays_open(chain: Chain, until: int, alpha: float, beta: float) -> bool:
    """Endpoints of ``chain`` (both real) are still unpaired in round ``until``."""
    a, b = chain.a, chain.b
    if a.ghost or b.ghost or chain.lone_ghost:
        return False
    l = _star(a, b, alpha)
    return l**beta >= (until - a.t + 1) ** beta + (until - b.t + 1) ** beta


def _used(end: End) -> End:
    """A ghost consumed by a join leaves a real particle from the next round."""
    return End(end.x, end.y, end.t + 1, False) if end.ghost else end


class ChainEnumerator:
    def __init__(self, alpha: float = 2.4, beta: float = BETA, mode: str = "3d"):
        if mode not in ("2d", "3d"):
            raise ValueError("mode must be '2d' or '3d'")
        self.alpha, self.beta, self.mode = alpha, beta, mode
        self._cache: dict = {}

    def chains(self, n: int, n_bar: int) -> dict:
        key = (n, n_bar)
        if key in self._cache:
            return self._cache[key]
        if self.mode == "2d" and n_bar:
            raise ValueError("2d counting has no ghosts")
        out: dict = {}
        if (n, n_bar) == (1, 0):
            for dx, dy in STEPS:
                b = End(dx, dy, 0, False)
                item = ("E",) + tuple(sorted(((0, 0, 0), (dx, dy, 0))))
                self._add(out, Chain(frozenset([item]), End(0, 0, 0, False), b, 1.0, 0.0, 1.0))
        elif (n, n_bar) == (0, 1):
            g = End(0, 0, 0, True)
            self._add(out, Chain(frozenset([("G", (0, 0, 0))]), g, g, INF, 0.0, 1.0, True))
        else:
            for m in range(n + 1):
                for mb in range(n_bar + 1):
                    if m + mb == 0 or (n - m) + (n_bar - mb) == 0:
                        continue
                    left = self.chains(m, mb)
                    right = self.chains(n - m, n_bar - mb)
                    for s in left.values():
                        for s2 in right.values():
                            for joined in self._joins(s, s2):
                                self._add(out, joined)
        self._cache[key] = out
        return out

    @staticmethod
    def _add(out: dict, chain: Chain) -> None:
        key = (chain.items, chain.a, chain.b)
        old = out.get(key)
        if old is None or chain.weight > old.weight:
            out[key] = chain

    def _link_range(self, s: Chain, s2: Chain) -> float:
        lim = min(s.bound, s2.bound)
        if lim == INF:
            lim = 2 ** (1 / self.beta)  # two newborns need l^beta < 2
        return lim

    def _joins(self, s: Chain, s2: Chain):
        alpha, beta = self.alpha, self.beta
        b = s.b
        # fuse at a shared point
        yield from self._place(s, s2, b.x, b.y, b.t, link=None)
        lim = self._link_range(s, s2)
        t_span = 0 if self.mode == "2d" else int(math.floor(lim / alpha + 1e-9))
        for dt in range(-t_span, t_span + 1):
            rem = lim - alpha * abs(dt)
            r = int(math.floor(rem + 1e-9))
            for dx in range(-r, r + 1):
                for dy in range(-(r - abs(dx)), r - abs(dx) + 1):
                    if dx == dy == dt == 0:
                        continue
                    yield from self._place(s, s2, b.x + dx, b.y + dy, b.t + dt, link=(dx, dy, dt))
        # world-line continuation of an open chain
        if self.mode == "3d" and not s2.a.ghost:
            dt = 1
            while _stays_open(s, b.t + dt - 1, alpha, beta):
                yield from self._place(s, s2, b.x, b.y, b.t + dt, link=None, continuation=True)
                dt += 1

    def _place(self, s: Chain, s2: Chain, x: int, y: int, t: int, link, continuation: bool = False):
        alpha, beta = self.alpha, self.beta
        moved = _shift(s2, x - s2.a.x, y - s2.a.y, t - s2.a.t)
        if s.items & moved.items:
            return
        weight = s.weight * moved.weight
        maxlink = max(s.maxlink, moved.maxlink)
        items = s.items | moved.items
        b, a2 = s.b, moved.a
        if link is not None:
            l = _star(b, a2, alpha)
            if l < maxlink - 1e-9:
                return
            for part in (s, moved):
                if part.bound != INF:
                    if l > part.bound + 1e-9:
                        return
                    if abs(l - part.bound) < 1e-9:
                        weight *= 0.5
            if self.mode == "3d" and not _cutoff_ok(l, b, a2, beta):
                return
            maxlink = max(maxlink, l)
            items = items | {("R",) + tuple(sorted(((b.x, b.y, b.t), (a2.x, a2.y, a2.t))))}
        elif not continuation and (b.ghost and a2.ghost):
            return  # two ghosts at one point cancel
        new_b = _used(moved.b) if moved.lone_ghost else moved.b
        new_a = _used(s.a) if s.lone_ghost else s.a
        chain = Chain(items, new_a, new_b, _star(new_a, new_b, alpha), maxlink, weight)
        if new_a != s.a:
            # keep the anchor at the origin
            chain = _shift(chain, -new_a.x, -new_a.y, -new_a.t)
        yield chain

    def count(self, n: int, n_bar: int) -> float:
        return sum(c.weight for c in self.chains(n, n_bar).values())


def h3_table(alpha: float = 2.4, entries=None) -> dict:
    enum = ChainEnumerator(alpha, mode="3d")
    entries = entries or [(1, 0), (0, 1), (2, 0), (0, 2), (1, 1), (2, 1), (1, 2), (4, 0), (0, 4)]
    return {f"{n},{nb}": enum.count(n, nb) for n, nb in entries}


def h2_table(entries=((1, 0), (2, 0), (4, 0))) -> dict:
    enum = ChainEnumerator(mode="2d")
    return {f"{n},{nb}": enum.count(n, nb) for n, nb in entries}


def write_data_file(path: Path = DATA_FILE, alpha: float = 2.4) -> dict:
    data = {"alpha": alpha, "h3": h3_table(alpha), "h2": h2_table()}
    path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
    return data
