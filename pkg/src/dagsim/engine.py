"""Deterministic discrete-event core: integer-tick scheduler, delay profiles,
and per-actor random substreams.

Every random draw in a run comes from a substream spawned off one master seed,
keyed by (domain, actor), so adding or removing an actor never perturbs the
draws of another. Same (config, seed) therefore replays byte-identically.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

Tick = int

# Substream domains. One Generator per (domain, actor id).
DOM_NODE_NET = 0     # network delays for messages a node sends
DOM_NODE_PROPOSE = 1 # weak-edge selection, adversary edge choices
DOM_CLIENT = 2       # solve times, client-to-node delays, fanout choice
DOM_WORLD = 3        # third-party traffic arrivals

TAIL_QUANTILE = 0.9999


def substream(master_seed: int, domain: int, actor: int) -> np.random.Generator:
    """Independent PCG64 stream for one actor, split off the master seed."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(domain, actor))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# Delay distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Dist:
    """A delay distribution plus its precomputed resampling cap.

    kind: 'const' (params=(value,)), 'exp' (params=(mean,)),
    'hypoexp' (params=stage means), 'poisson' (params=(mean,)).
    Samples above `cap` are redrawn; integer delays are ceil'd with floor 1.
    """
    kind: str
    params: tuple[float, ...]
    cap: float

    @property
    def mean(self) -> float:
        if self.kind == "const":
            return self.params[0]
        if self.kind == "hypoexp":
            return float(sum(self.params))
        return self.params[0]


def _hypoexp_cdf(t: float, means: tuple[float, ...]) -> float:
    # Distinct-rate hypoexponential: F(t) = 1 - sum_i a_i exp(-l_i t),
    # a_i = prod_{j != i} l_j / (l_j - l_i).
    rates = [1.0 / m for m in means]
    total = 0.0
    for i, li in enumerate(rates):
        ai = 1.0
        for j, lj in enumerate(rates):
            if j != i:
                ai *= lj / (lj - li)
        total += ai * math.exp(-li * t)
    return 1.0 - total


def _quantile_cap(kind: str, params: tuple[float, ...]) -> float:
    """99.99th percentile of the distribution, computed analytically."""
    if kind == "const":
        return params[0]
    if kind == "exp":
        return -params[0] * math.log(1.0 - TAIL_QUANTILE)
    if kind == "hypoexp":
        lo, hi = 0.0, sum(params)
        while _hypoexp_cdf(hi, params) < TAIL_QUANTILE:
            hi *= 2.0
        for _ in range(80):
            mid = (lo + hi) / 2.0
            if _hypoexp_cdf(mid, params) < TAIL_QUANTILE:
                lo = mid
            else:
                hi = mid
        return hi
    if kind == "poisson":
        mean = params[0]
        k, cdf, pmf = 0, 0.0, math.exp(-mean)
        while True:
            cdf += pmf
            if cdf >= TAIL_QUANTILE:
                return float(k)
            k += 1
            pmf *= mean / k
    raise ValueError(f"unknown distribution kind {kind!r}")


def make_dist(kind: str, *params: float) -> Dist:
    return Dist(kind, tuple(params), _quantile_cap(kind, tuple(params)))


@dataclass(frozen=True)
class DelayProfile:
    """Delays for one network regime: node-to-node, client-to-node, solve."""
    name: str
    node_to_node: Dist
    client_to_node: Dist
    solve_time: Dist

    @property
    def delta_bound(self) -> float:
        return max(self.node_to_node.cap, self.client_to_node.cap, self.solve_time.cap)


def profile(name: str) -> DelayProfile:
    if name == "perfect":
        one = make_dist("const", 1.0)
        return DelayProfile("perfect", one, one, one)
    if name == "quick":
        return DelayProfile(
            "quick",
            make_dist("hypoexp", 10.0, 15.0, 20.0),
            make_dist("exp", 20.0),
            make_dist("poisson", 100.0),
        )
    if name == "slow":
        return DelayProfile(
            "slow",
            make_dist("hypoexp", 20.0, 30.0, 40.0),
            make_dist("exp", 20.0),
            make_dist("poisson", 100.0),
        )
    raise ValueError(f"unknown delay profile {name!r}")


PROFILE_NAMES = ("perfect", "quick", "slow")


def _draw_batch(gen: np.random.Generator, dist: Dist, size: int) -> np.ndarray:
    if dist.kind == "const":
        return np.full(size, dist.params[0])
    if dist.kind == "exp":
        return gen.exponential(dist.params[0], size)
    if dist.kind == "hypoexp":
        out = np.zeros(size)
        for m in dist.params:
            out += gen.exponential(m, size)
        return out
    if dist.kind == "poisson":
        return gen.poisson(dist.params[0], size).astype(float)
    raise ValueError(dist.kind)


def sample_delay(dist: Dist, gen: np.random.Generator) -> Tick:
    """One integer delay: resample above the cap, ceil, floor at 1 tick."""
    x = float(_draw_batch(gen, dist, 1)[0])
    while x > dist.cap:
        x = float(_draw_batch(gen, dist, 1)[0])
    return max(1, math.ceil(x))


class DelaySampler:
    """Batched integer-delay source over one distribution and one substream."""

    __slots__ = ("_gen", "_dist", "_buf", "_pos", "_batch")

    def __init__(self, dist: Dist, gen: np.random.Generator, batch: int = 2048):
        self._gen = gen
        self._dist = dist
        self._batch = batch
        self._buf: list[int] = []
        self._pos = 0

    def _refill(self) -> None:
        xs = _draw_batch(self._gen, self._dist, self._batch)
        over = xs > self._dist.cap
        while over.any():
            idx = np.nonzero(over)[0]
            xs[idx] = _draw_batch(self._gen, self._dist, len(idx))
            over = xs > self._dist.cap
        self._buf = np.maximum(1, np.ceil(xs)).astype(np.int64).tolist()
        self._pos = 0

    def next(self) -> Tick:
        if self._pos >= len(self._buf):
            self._refill()
        d = self._buf[self._pos]
        self._pos += 1
        return d


# ---------------------------------------------------------------------------
# Event queue
# ---------------------------------------------------------------------------

class Scheduler:
    """Min-heap of (due tick, insertion seq, callback, arg).

    Ties on the due tick execute in insertion order, which makes the whole
    run a pure function of the seeded draws.
    """

    __slots__ = ("now", "_heap", "_seq", "events_processed")

    def __init__(self) -> None:
        self.now: Tick = 0
        self._heap: list = []
        self._seq = 0
        self.events_processed = 0

    def at(self, due: Tick, fn: Callable, arg) -> None:
        if due < self.now:
            raise ValueError(f"event scheduled in the past: {due} < {self.now}")
        heapq.heappush(self._heap, (due, self._seq, fn, arg))
        self._seq += 1

    def after(self, delay: Tick, fn: Callable, arg) -> None:
        self.at(self.now + delay, fn, arg)

    def __len__(self) -> int:
        return len(self._heap)

    def run(self, until: Tick | None = None, stop: Callable[[], bool] | None = None) -> None:
        """Drain the queue, optionally stopping past a tick ceiling or when
        `stop()` turns true (checked between ticks)."""
        heap = self._heap
        last_tick = -1
        while heap:
            due, _, fn, arg = heapq.heappop(heap)
            if until is not None and due > until:
                heapq.heappush(heap, (due, 0, fn, arg))
                return
            if due != last_tick and stop is not None and stop():
                heapq.heappush(heap, (due, 0, fn, arg))
                return
            last_tick = due
            self.now = due
            self.events_processed += 1
            fn(arg)
