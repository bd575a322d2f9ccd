"""Clan-of-ancestors perfect sampler and forward birth-death dynamics.

The sampler reveals the cylinders alive at time 0 in a window, then walks
backwards in time collecting, for every cylinder C, the cylinders alive at
its birth whose basis lies in the relation region of basis(C) (its first
generation ancestors). The resulting finite DAG is thinned forward in time:
C is kept iff its flag is below M = exp(-(leap - delta_E)), the leap being
taken relative to its kept ancestors. Kept roots form an exact sample.
"""
from __future__ import annotations

import heapq
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config_space import Particle, ParticleConfiguration, Region, Whole
from .errors import BirthTimeCollision, ClanCapExceeded
from .free_process import Cylinder, Substrate, derive_seed
from .models import GasModel

__all__ = [
    "Clan",
    "SampleResult",
    "Event",
    "Trajectory",
    "build_clan",
    "thin_clan",
    "thin_by_generation",
    "perfect_sample",
    "perfect_sample_details",
    "finite_volume_sample",
    "forward_dynamics",
    "DEFAULT_CAP",
]

DEFAULT_CAP = 10**6
_WHOLE = Whole()


@dataclass
class Clan:
    """Finite ancestor DAG. ``parents[c]`` lists the first-generation ancestors of c."""

    cylinders: dict = field(default_factory=dict)
    parents: dict = field(default_factory=dict)
    roots: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.cylinders)

    @property
    def edges(self) -> list:
        return [(p, c) for c, ps in self.parents.items() for p in ps]

    def birth_order(self) -> list:
        return sorted(self.cylinders, key=lambda i: (self.cylinders[i].birth, i))

    def generations(self) -> dict:
        """Generation of every cylinder: length of the longest path from a root (roots are 0)."""
        gen = {}
        for cid in sorted(self.cylinders, key=lambda i: (-self.cylinders[i].birth, i)):
            gen.setdefault(cid, 0)
            for p in self.parents.get(cid, ()):
                gen[p] = max(gen.get(p, 0), gen[cid] + 1)
        return gen

    def depth(self) -> int:
        gens = self.generations()
        return max(gens.values()) if gens else 0

    def ancestors_of(self, cid) -> set:
        """``cid`` together with all its ancestors."""
        seen = {cid}
        stack = [cid]
        while stack:
            for p in self.parents.get(stack.pop(), ()):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen


def build_clan(
    substrate: Substrate,
    model: GasModel,
    window: Region,
    relation: str | Callable[[Particle], Region] = "impact",
    cap: int = DEFAULT_CAP,
    volume: Region | None = None,
) -> Clan:
    """Clan of ancestors of the cylinders alive at time 0 in ``window``.

    Cylinders are explored in strictly decreasing birth order, which keeps the
    per-cell query times non-increasing. With ``volume`` set, only cylinders
    whose basis lies in the volume are followed (finite-volume dynamics).
    """
    region_of = relation if callable(relation) else (lambda p: model.relation_region(p, relation))
    intensity = substrate.intensity
    clan = Clan()
    heap: list = []
    for c in substrate.reveal_window(window, 0.0):
        if volume is not None and not volume.contains(c.basis):
            continue
        clan.cylinders[c.id] = c
        clan.roots.append(c.id)
        heapq.heappush(heap, (-c.birth, c.id))
    if len(clan.cylinders) > cap:
        raise ClanCapExceeded(f"clan exceeded {cap} cylinders")
    while heap:
        _, cid = heapq.heappop(heap)
        c = clan.cylinders[cid]
        region = region_of(c.basis)
        parents = []
        for cell in intensity.cells_meeting(region):
            for d in substrate.alive_at(cell, c.birth):
                if d.id == cid or not region.contains(d.basis):
                    continue
                if volume is not None and not volume.contains(d.basis):
                    continue
                if d.birth == c.birth:
                    raise BirthTimeCollision(f"cylinders {cid} and {d.id} share birth time {c.birth}")
                parents.append(d.id)
                if d.id not in clan.cylinders:
                    clan.cylinders[d.id] = d
                    heapq.heappush(heap, (-d.birth, d.id))
                    if len(clan.cylinders) > cap:
                        raise ClanCapExceeded(f"clan exceeded {cap} cylinders")
        clan.parents[cid] = tuple(sorted(parents))
    return clan


def _acceptance(model: GasModel, basis: Particle, config: ParticleConfiguration, delta_E: float, volume) -> float:
    leap = model.energy_leap(basis, config, volume)
    if leap == math.inf:
        return 0.0
    return math.exp(-(leap - delta_E))


def _config_of(particles, boundary: ParticleConfiguration | None) -> ParticleConfiguration:
    counts = Counter(particles)
    if boundary is not None:
        for p, m in boundary.items():
            counts[p] += m
    return ParticleConfiguration(counts, window=_WHOLE, check=False)


def _decide(clan, cid, kept, model, mapping, delta_E, boundary, volume):
    c = clan.cylinders[cid]
    basis = mapping(c.basis) if mapping else c.basis
    parents = [clan.cylinders[p].basis for p in clan.parents.get(cid, ()) if kept[p]]
    if mapping:
        parents = [mapping(p) for p in parents]
    config = _config_of(parents, boundary)
    return c.flag < _acceptance(model, basis, config, delta_E, volume)


def thin_clan(
    clan: Clan,
    model: GasModel,
    epsilon_map: Callable[[Particle], Particle] | None = None,
    delta_E: float | None = None,
    boundary: ParticleConfiguration | None = None,
    volume: Region | None = None,
) -> dict:
    """Keep decisions for every clan cylinder, made in increasing birth order."""
    delta_E = model.delta_E if delta_E is None else delta_E
    kept: dict = {}
    for cid in clan.birth_order():
        kept[cid] = _decide(clan, cid, kept, model, epsilon_map, delta_E, boundary, volume)
    return kept


def thin_by_generation(
    clan: Clan,
    model: GasModel,
    epsilon_map: Callable[[Particle], Particle] | None = None,
    delta_E: float | None = None,
    boundary: ParticleConfiguration | None = None,
    volume: Region | None = None,
) -> dict:
    """Keep decisions computed generation by generation, deepest first.

    Generation K_n is decided from the kept members of deeper generations; the
    roots are decided last. Used to cross-check :func:`thin_clan`.
    """
    delta_E = model.delta_E if delta_E is None else delta_E
    gens = clan.generations()
    layers: dict = {}
    for cid, g in gens.items():
        layers.setdefault(g, []).append(cid)
    kept: dict = {}
    for g in sorted(layers, reverse=True):
        decided = {cid: _decide(clan, cid, kept, model, epsilon_map, delta_E, boundary, volume) for cid in sorted(layers[g])}
        kept.update(decided)
    return kept


@dataclass
class SampleResult:
    config: ParticleConfiguration
    clan: Clan
    kept: dict
    substrate: Substrate

    def kept_roots(self) -> list:
        return [cid for cid in self.clan.roots if self.kept[cid]]


def perfect_sample_details(
    model: GasModel,
    window: Region,
    seed: int,
    cap: int = DEFAULT_CAP,
    substrate: Substrate | None = None,
) -> SampleResult:
    """Perfect sample of the unique gas measure on ``window`` with its clan and decisions."""
    if substrate is None:
        substrate = Substrate(model.intensity, model.delta_E, seed)
    clan = build_clan(substrate, model, window, "impact", cap)
    kept = thin_clan(clan, model, delta_E=substrate.delta_E)
    particles = [clan.cylinders[cid].basis for cid in clan.roots if kept[cid]]
    config = ParticleConfiguration(Counter(particles), window=window, check=False)
    return SampleResult(config, clan, kept, substrate)


def perfect_sample(model: GasModel, window: Region, seed: int, cap: int = DEFAULT_CAP) -> ParticleConfiguration:
    """Exact draw from the infinite-volume gas measure restricted to ``window``."""
    return perfect_sample_details(model, window, seed, cap).config


def finite_volume_sample(
    model: GasModel,
    volume: Region,
    boundary: ParticleConfiguration | None,
    seed: int,
    cap: int = DEFAULT_CAP,
    details: bool = False,
):
    """Exact draw from the gas kernel on ``volume`` with boundary condition ``boundary``.

    Only cylinders with basis in the volume take part; the boundary enters every
    leap evaluation as a fixed configuration.
    """
    substrate = Substrate(model.intensity, model.delta_E, seed)
    clan = build_clan(substrate, model, volume, "impact", cap, volume=volume)
    kept = thin_clan(clan, model, delta_E=substrate.delta_E, boundary=boundary, volume=volume)
    particles = [clan.cylinders[cid].basis for cid in clan.roots if kept[cid]]
    config = ParticleConfiguration(Counter(particles), window=volume, check=False)
    if details:
        return SampleResult(config, clan, kept, substrate)
    return config


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    particle: Particle


@dataclass
class Trajectory:
    initial: ParticleConfiguration
    events: list
    horizon: float
    window: Region | None = None

    def configuration_at(self, t: float) -> ParticleConfiguration:
        counts = Counter(dict(self.initial.items()))
        for ev in self.events:
            if ev.time > t:
                break
            if ev.kind == "birth":
                counts[ev.particle] += 1
            else:
                counts[ev.particle] -= 1
                if counts[ev.particle] == 0:
                    del counts[ev.particle]
        return ParticleConfiguration(counts, window=self.window, check=False)

    def final(self) -> ParticleConfiguration:
        return self.configuration_at(self.horizon)


def forward_dynamics(
    model: GasModel,
    volume: Region,
    boundary: ParticleConfiguration | None,
    initial: ParticleConfiguration,
    horizon: float,
    seed: int,
) -> Trajectory:
    """Event-driven simulation of the finite-volume birth and death dynamics.

    Births are proposed at rate exp(-delta_E) nu(volume) and accepted with
    probability exp(-(leap - delta_E)); every particle dies at rate 1.
    """
    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, "dynamics")))
    intensity = model.intensity
    scale = math.exp(-model.delta_E)
    cells = intensity.cells_meeting(volume) if horizon > 0 else []
    masses = np.array([scale * intensity.cell_mass(c) for c in cells], dtype=float)
    birth_rate = float(masses.sum()) if len(masses) else 0.0
    cum = np.cumsum(masses) if len(masses) else masses
    state = initial.particles()
    events = []
    t = 0.0
    while True:
        rate = birth_rate + len(state)
        if rate <= 0:
            break
        t += float(rng.exponential(1.0 / rate))
        if t > horizon:
            break
        if rng.random() * rate < birth_rate:
            i = int(np.searchsorted(cum, rng.random() * birth_rate, side="right"))
            cell = cells[min(i, len(cells) - 1)]
            p = intensity.sample_in_cell(cell, rng)
            if not volume.contains(p):
                continue
            config = _config_of(state, boundary)
            if rng.random() < _acceptance(model, p, config, model.delta_E, volume):
                state.append(p)
                events.append(Event(t, "birth", p))
        else:
            p = state.pop(int(rng.integers(len(state))))
            events.append(Event(t, "death", p))
    return Trajectory(initial, events, horizon, volume)
