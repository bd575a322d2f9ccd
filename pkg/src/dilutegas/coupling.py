"""Coupled perfect sampling of a model and its approximations.

All members of an approximation family share one substrate: the same
cylinders, births, lifespans and flags. One clan is built with an envelope
relation V large enough to contain every pulled-back impact region; each
epsilon then thins that clan with mapped bases and its own leaps. Where the
clans have stabilised, the epsilon sample is the image of the epsilon = 0
sample.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable

from .config_space import Box, Particle, ParticleConfiguration, Region, in_neighborhood
from .errors import EnvelopeViolation
from .ffg_sampler import DEFAULT_CAP, Clan, build_clan, thin_clan
from .free_process import Substrate
from .models import DiscreteWR, GasModel, ShrunkenWR, ThinRods, effective_model, negligible_set_membership

__all__ = [
    "ApproximationFamily",
    "map_particle",
    "CoupledRun",
    "CoupledSample",
    "identity_run",
    "wr_fugacity_run",
    "wr_discretization_run",
    "rods_spin_run",
    "coupled_sample",
    "stabilization_epsilon",
    "vague_convergence_check",
    "dyadic_grid",
]


def dyadic_grid(kmin: int = 1, kmax: int = 12) -> list:
    """Descending grid 2^-kmin, ..., 2^-kmax, 0."""
    return [2.0**-k for k in range(kmin, kmax + 1)] + [0.0]


def _floor_grid(v: float, eps: float) -> float:
    return eps * math.floor(v / eps)


@dataclass(frozen=True)
class ApproximationFamily:
    """epsilon-indexed particle maps D_eps with displacement modulus a(eps); D_0 is the identity.

    Kinds: ``identity``, ``translation`` (x + eps v), ``spatial`` (eps * floor(x / eps)
    per coordinate), ``spin`` (eps * floor(angle / eps)), ``shrink`` (x -> eps x, a
    change of units rather than a small perturbation) and ``compose``.
    """

    kind: str
    vector: tuple = ()
    parts: tuple = ()

    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def translation(cls, vector):
        return cls("translation", vector=tuple(float(v) for v in vector))

    @classmethod
    def spatial_discretization(cls):
        return cls("spatial")

    @classmethod
    def spin_discretization(cls):
        return cls("spin")

    @classmethod
    def shrink(cls):
        return cls("shrink")

    @classmethod
    def compose(cls, outer: "ApproximationFamily", inner: "ApproximationFamily"):
        return cls("compose", parts=(outer, inner))

    def modulus(self, eps: float) -> float:
        if eps == 0 or self.kind == "identity":
            return 0.0
        if self.kind == "translation":
            return eps * max(abs(v) for v in self.vector)
        if self.kind in ("spatial", "spin"):
            return eps
        if self.kind == "compose":
            return sum(p.modulus(eps) for p in self.parts)
        return math.inf

    def map(self, eps: float, p: Particle) -> Particle:
        if eps < 0:
            raise ValueError("eps must be nonnegative")
        if eps == 0 or self.kind == "identity":
            return p
        if self.kind == "translation":
            return Particle(tuple(x + eps * v for x, v in zip(p.location, self.vector)), p.mark)
        if self.kind == "spatial":
            return Particle(tuple(_floor_grid(x, eps) for x in p.location), p.mark)
        if self.kind == "spin":
            return Particle(p.location, _floor_grid(p.mark, eps))
        if self.kind == "shrink":
            return Particle(tuple(eps * x for x in p.location), p.mark)
        if self.kind == "compose":
            outer, inner = self.parts
            return outer.map(eps, inner.map(eps, p))
        raise ValueError(f"unknown family kind {self.kind!r}")

    def mapper(self, eps: float):
        """Particle map at ``eps``, or None for the identity."""
        if eps == 0 or self.kind == "identity":
            return None
        return lambda p: self.map(eps, p)


def map_particle(family: ApproximationFamily, eps: float, particle: Particle) -> Particle:
    return family.map(eps, particle)


@dataclass
class CoupledRun:
    """A family, a descending epsilon grid ending in 0, per-epsilon models and an envelope."""

    family: ApproximationFamily
    grid: list
    model_for: Callable[[float], GasModel]
    base: GasModel
    envelope: Callable[[Particle], Region]
    delta_E: float
    label: str = ""
    _models: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        grid = [float(e) for e in self.grid]
        if grid != sorted(grid, reverse=True) or len(set(grid)) != len(grid):
            raise ValueError("epsilon grid must be strictly decreasing")
        if grid[-1] != 0.0:
            grid.append(0.0)
        self.grid = grid

    @property
    def eps_max(self) -> float:
        return self.grid[0]

    def model(self, eps: float) -> GasModel:
        m = self._models.get(eps)
        if m is None:
            m = self._models[eps] = self.model_for(eps)
        return m


def identity_run(model: GasModel, grid=(0.5, 0.25, 0.0)) -> CoupledRun:
    """Identity family: every epsilon is the model itself."""
    return CoupledRun(ApproximationFamily.identity(), list(grid), lambda e: model, model, model.impact_region, model.delta_E, "identity")


def wr_fugacity_run(lam: float, k: int = 1, d: int = 2, grid=(0.2, 0.1, 0.05, 0.02, 0.01, 0.0)) -> CoupledRun:
    """Discrete WR with fugacities lam (1 + eps), written as effective models over the eps = 0 intensity.

    The density is 1 + eps, so leaps shift by -log(1 + eps) and the uniform
    bound is -log(1 + eps_max).
    """
    base = DiscreteWR(lam, lam, k, d)
    eps_max = max(grid)
    delta = -math.log1p(eps_max)

    def model_for(eps):
        return effective_model(base, base.intensity, lambda p, c=1.0 + eps: c, delta, label=f"lam*(1+{eps!r})")

    return CoupledRun(ApproximationFamily.identity(), list(grid), model_for, base, base.impact_region, delta, "wr-fugacity")


def wr_discretization_run(lam: float, r0: float, d: int = 2, grid=None, cell_size: float = 1.0) -> CoupledRun:
    """Continuum WR against its spatial discretizations on eps Z^d.

    The eps model has per-site fugacity eps^d lam, same-site exclusion and
    opposite-type exclusion for 0 < distance <= r0. The envelope takes
    delta = a(eps_max).
    """
    grid = dyadic_grid() if grid is None else list(grid)
    family = ApproximationFamily.spatial_discretization()
    delta = family.modulus(max(grid))
    base = ShrunkenWR(lam, r0, d, eps=0.0, delta=delta, cell_size=cell_size)
    return CoupledRun(
        family,
        grid,
        lambda e: ShrunkenWR(lam, r0, d, eps=e, cell_size=cell_size) if e > 0 else base,
        base,
        base.envelope_region,
        0.0,
        "wr-discretization",
    )


def rods_spin_run(lam: float, half_length: float, grid=None, cell_size: float = 1.0) -> CoupledRun:
    """Continuum thin rods with uniform orientations against their spin discretizations.

    Turning a rod by at most a(eps) moves its endpoints by at most
    half_length * a(eps), so the envelope joins rods within segment distance
    2 * half_length * a(eps_max).
    """
    grid = dyadic_grid() if grid is None else list(grid)
    family = ApproximationFamily.spin_discretization()
    base = ThinRods(lam, half_length, cell_size=cell_size, envelope=2 * half_length * family.modulus(max(grid)))
    model = ThinRods(lam, half_length, cell_size=cell_size)
    return CoupledRun(family, grid, lambda e: model, base, base.envelope_region, 0.0, "rods-spin")


@dataclass
class CoupledSample:
    run: CoupledRun
    window: Region
    clan: Clan
    kept: dict
    outputs: dict
    full: dict
    substrate: Substrate
    flags: dict = field(default_factory=dict)

    def image_of_zero(self, eps: float) -> ParticleConfiguration:
        """D_eps applied to the eps = 0 sample on the preimage of the window."""
        mapper = self.run.family.mapper(eps)
        counts: Counter = Counter()
        for cid in self.clan.roots:
            if not self.kept[0.0][cid]:
                continue
            b = self.clan.cylinders[cid].basis
            q = mapper(b) if mapper else b
            if self.window.contains(q):
                counts[q] += 1
        return ParticleConfiguration(counts, window=self.window, check=False)

    def identity_holds(self, eps: float) -> bool:
        return self.outputs[eps] == self.image_of_zero(eps)


def _check_envelope(clan: Clan, kept: dict, model: GasModel, mapper) -> None:
    """Raise if a kept clan cylinder outside V(basis C) enters the mapped impact region of C."""
    order = clan.birth_order()
    alive: list = []
    for cid in order:
        c = clan.cylinders[cid]
        alive = [d for d in alive if clan.cylinders[d].birth + clan.cylinders[d].lifespan > c.birth]
        parents = set(clan.parents.get(cid, ()))
        basis = mapper(c.basis) if mapper else c.basis
        region = model.impact_region(basis)
        for d in alive:
            if d in parents:
                continue
            other = clan.cylinders[d].basis
            if region.contains(mapper(other) if mapper else other):
                raise EnvelopeViolation(f"cylinder {d} affects {cid} but lies outside its envelope")
        if kept[cid]:
            alive.append(cid)


def coupled_sample(run: CoupledRun, window: Region, seed: int, cap: int = DEFAULT_CAP, check_envelope: bool = True) -> CoupledSample:
    """Per-epsilon samples on ``window`` driven by one substrate and one envelope clan."""
    substrate = Substrate(run.base.intensity, run.delta_E, seed)
    reach = run.family.modulus(run.eps_max)
    if math.isinf(reach):
        raise ValueError("coupled sampling needs a family with finite modulus")
    root_window = window.inflate(reach) if reach > 0 and isinstance(window, Box) else window
    clan = build_clan(substrate, run.base, root_window, run.envelope, cap)
    kept, outputs, full = {}, {}, {}
    for eps in run.grid:
        model = run.model(eps)
        mapper = run.family.mapper(eps)
        k = thin_clan(clan, model, mapper, delta_E=run.delta_E)
        if check_envelope:
            _check_envelope(clan, k, model, mapper)
        kept[eps] = k
        counts: Counter = Counter()
        inside: Counter = Counter()
        for cid in clan.roots:
            if not k[cid]:
                continue
            b = clan.cylinders[cid].basis
            q = mapper(b) if mapper else b
            counts[q] += 1
            if window.contains(q):
                inside[q] += 1
        outputs[eps] = ParticleConfiguration(inside, window=window, check=False)
        full[eps] = ParticleConfiguration(counts, window=root_window, check=False)
    flags = {}
    try:
        flags["negligible"] = negligible_set_membership(run.base, full[0.0])
    except ValueError:
        flags["negligible"] = False
    return CoupledSample(run, window, clan, kept, outputs, full, substrate, flags)


def stabilization_epsilon(sample: CoupledSample) -> float | None:
    """Largest grid eps such that the coupling identity holds at every grid value <= eps.

    Returns None ("none-on-grid") if it fails at the smallest positive grid value.
    """
    positive = sorted(e for e in sample.run.grid if e > 0)
    best = None
    for eps in positive:
        if not sample.identity_holds(eps):
            break
        best = eps
    if not positive:
        return 0.0
    return best


def vague_convergence_check(configs: dict, K: Region, delta: float, grid=None) -> float | None:
    """Largest grid eps with config[eps'] in the (K, delta)-neighbourhood of config[0] for all eps' <= eps."""
    grid = sorted(e for e in (grid if grid is not None else configs) if e > 0)
    ref = configs[0.0]
    best = None
    for eps in grid:
        if not in_neighborhood(ref, configs[eps], K, delta):
            break
        best = eps
    return best
