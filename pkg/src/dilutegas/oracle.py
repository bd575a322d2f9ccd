"""Exact references: finite-volume enumeration, the Ising/contour identity and distances.

``enumerate_gibbs`` lists every admissible configuration of a small discrete
model on a finite volume with weight prod nu({g}) * exp(-H). The Hamiltonian is
accumulated as a sum of sequential energy leaps, so any model exposing leaps
can be enumerated.
"""
from __future__ import annotations

import csv
import functools
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .config_space import Box, Particle, ParticleConfiguration, Region, SiteSet, Whole, encode_mark
from .contours import ContourCatalog, confined_contours, normalize, spins_to_contours
from .errors import MultiplicityUnbounded, StateSpaceTooLarge
from .intensity import AtomicLattice, ContourWeights
from .models import GasModel, Peierls

__all__ = [
    "ExactDistribution",
    "enumerate_gibbs",
    "check_contour_identity",
    "ising_distribution",
    "tv_distance",
    "histogram",
]

DEFAULT_MAX_STATES = 10**7
_WHOLE = Whole()


@dataclass
class ExactDistribution:
    """Finite distribution over configurations.

    ``normalizer`` is the weight sum sum_xi prod nu({g}) exp(-H(xi)); the
    normalizer relative to the Poisson reference is ``poisson_normalizer``.
    """

    support: list
    probabilities: np.ndarray
    normalizer: float
    poisson_normalizer: float = float("nan")
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {c.key(): i for i, c in enumerate(self.support)}

    def probability(self, config: ParticleConfiguration) -> float:
        i = self._index.get(config.key())
        return 0.0 if i is None else float(self.probabilities[i])

    def as_dict(self) -> dict:
        return {c.key(): float(p) for c, p in zip(self.support, self.probabilities)}

    def write_records(self, fp) -> None:
        """(state, probability) records; the state lists mark@coords entries separated by ';'."""
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["state", "probability"])
        for c, p in zip(self.support, self.probabilities):
            state = ";".join(
                f"{encode_mark(q.mark)}@{' '.join(str(v) for v in q.location)}" + (f"x{m}" if m > 1 else "")
                for q, m in c.entries
            )
            writer.writerow([state, format(float(p), ".16e")])


def _sites_of(volume: Region) -> list:
    if isinstance(volume, SiteSet):
        return sorted(volume.site_set)
    if isinstance(volume, Box) and volume.lattice:
        return list(volume.sites())
    raise TypeError("enumeration needs a finite set of lattice sites")


def _atom_mass(intensity, p: Particle) -> float:
    if isinstance(intensity, AtomicLattice):
        return intensity.marks.weights.get(p.mark, 0.0)
    if isinstance(intensity, ContourWeights):
        return intensity.weight(p.mark.length)
    raise TypeError("enumeration needs an atomic intensity")


def _default_marks(model: GasModel) -> Callable:
    intensity = model.intensity
    if isinstance(intensity, AtomicLattice):
        marks = [m for m in intensity.marks.marks if intensity.marks.weights[m] > 0]
        return lambda site: marks
    if isinstance(intensity, ContourWeights):
        shapes = list(intensity.catalog.shapes())
        return lambda site: shapes
    raise TypeError("enumeration needs an atomic intensity")


def _leap(model, p, particles, boundary, volume):
    counts = Counter(particles)
    if boundary is not None:
        for q, m in boundary.items():
            counts[q] += m
    return model.energy_leap(p, ParticleConfiguration(counts, window=_WHOLE, check=False), volume)


def enumerate_gibbs(
    model: GasModel,
    volume: Region,
    boundary: ParticleConfiguration | None = None,
    max_states: int = DEFAULT_MAX_STATES,
    multiplicity_cap: int | None = None,
    marks_at: Callable | None = None,
) -> ExactDistribution:
    """Exact gas kernel of a discrete model on a finite volume.

    Sites are scanned in order; each site holds nothing or one particle per
    admissible mark (more when ``multiplicity_cap`` allows, with the 1/m!
    factor of the Poisson reference). Without a cap the model must exclude two
    particles on one site.
    """
    sites = _sites_of(volume)
    marks_at = marks_at or _default_marks(model)
    intensity = model.intensity
    options_per_site = [[Particle(s, m) for m in marks_at(s)] for s in sites]
    options_per_site = [[p for p in opts if _atom_mass(intensity, p) > 0] for opts in options_per_site]
    if hasattr(model, "exclusion_resources"):
        return _enumerate_exclusion(model, volume, boundary, options_per_site, max_states)

    cap = 1
    hard_core = all(
        _leap(model, p, [q], None, None) == math.inf for opts in options_per_site for p in opts for q in opts
    )
    if not hard_core:
        if multiplicity_cap is None:
            raise MultiplicityUnbounded("model allows several particles per site; supply multiplicity_cap")
        cap = int(multiplicity_cap)
        for opts in options_per_site:
            for p in opts:
                if _leap(model, p, [p] * cap, None, None) < math.inf:
                    raise MultiplicityUnbounded(f"a particle beyond the cap {cap} has positive weight at {p.location}")

    support: list = []
    weights: list = []
    visited = 0

    def place(i: int, particles: list, weight: float):
        nonlocal visited
        visited += 1
        if visited > max_states:
            raise StateSpaceTooLarge(f"enumeration exceeded {max_states} states")
        if i == len(sites):
            support.append(ParticleConfiguration(Counter(particles), window=volume, check=False))
            weights.append(weight)
            return
        place(i + 1, particles, weight)
        for p in options_per_site[i]:
            mass = _atom_mass(intensity, p)
            current = list(particles)
            w = weight
            for m in range(1, cap + 1):
                leap = _leap(model, p, current, boundary, volume)
                if leap == math.inf:
                    break
                w = w * mass * math.exp(-leap) / m
                current = current + [p]
                if w == 0.0:
                    break
                place(i + 1, current, w)

    place(0, [], 1.0)
    w = np.array(weights, dtype=float)
    z = float(w.sum())
    nu_mass = sum(_atom_mass(intensity, p) for opts in options_per_site for p in opts)
    return ExactDistribution(support, w / z, z, math.exp(-nu_mass) * z)


def _enumerate_exclusion(model, volume, boundary, options_per_site, max_states) -> ExactDistribution:
    """Enumeration for models whose only interaction is exclusion through shared resources.

    Each particle occupies a set of resources (contour vertices); the leap is
    the single-particle term plus +inf when resources are already taken.
    """
    intensity = model.intensity
    index: dict = {}

    def mask_of(p):
        m = 0
        for r in model.exclusion_resources(p):
            m |= 1 << index.setdefault(r, len(index))
        return m

    occupied = 0
    if boundary is not None:
        for q, _ in boundary.items():
            occupied |= mask_of(q)
    table = []
    nu_mass = 0.0
    for opts in options_per_site:
        row = []
        for p in opts:
            mass = _atom_mass(intensity, p)
            nu_mass += mass
            single = model.single(p, volume)
            if single < math.inf:
                row.append((p, mask_of(p), mass * math.exp(-single)))
        table.append(row)

    support: list = []
    weights: list = []
    visited = 0
    # with few resources the conflict test runs vectorized over all options of a site
    vector = len(index) < 63
    if vector:
        arrays = [np.array([m for _, m, _ in row], dtype=np.int64) for row in table]

    def place(i: int, occ: int, particles: list, weight: float):
        nonlocal visited
        visited += 1
        if visited > max_states:
            raise StateSpaceTooLarge(f"enumeration exceeded {max_states} states")
        if i == len(table):
            support.append(ParticleConfiguration(Counter(particles), window=volume, check=False))
            weights.append(weight)
            return
        place(i + 1, occ, particles, weight)
        row = table[i]
        if vector:
            free = np.flatnonzero((arrays[i] & occ) == 0) if row else ()
        else:
            free = [j for j, (_, m, _) in enumerate(row) if not m & occ]
        for j in free:
            p, m, w = row[j]
            particles.append(p)
            place(i + 1, occ | m, particles, weight * w)
            particles.pop()

    place(0, occupied, [], 1.0)
    w = np.array(weights, dtype=float)
    z = float(w.sum())
    return ExactDistribution(support, w / z, z, math.exp(-nu_mass) * z)


def ising_distribution(n: int, beta: float) -> dict:
    """Ising measure on the n x n block with + boundary.

    The weight is exp(-2 beta * number of disagreeing nearest-neighbour pairs),
    counted directly on the spins with + outside the block. Keys are the spins
    listed row by row (sigma[x][y] at index x * n + y).
    """
    out = {}
    for bits in itertools.product((1, -1), repeat=n * n):
        spin = np.ones((n + 2, n + 2), dtype=np.int8)
        spin[1:-1, 1:-1] = np.array(bits, dtype=np.int8).reshape(n, n)
        length = int(np.sum(spin[1:, :] != spin[:-1, :]) + np.sum(spin[:, 1:] != spin[:, :-1]))
        out[bits] = math.exp(-2.0 * beta * length)
    z = sum(out.values())
    return {k: v / z for k, v in out.items()}


def check_contour_identity(n: int, beta: float) -> float:
    """Max absolute difference between the Ising law and the image of the confined contour gas."""
    if n * n > 16:
        raise ValueError("identity check limited to blocks of at most 16 sites")
    local = _confined(n)
    longest = max(s.length for shapes in local.values() for s in shapes)
    model = Peierls(beta, catalog=ContourCatalog(longest + longest % 2, {}))
    dual = SiteSet([(x, y) for x in range(-1, n) for y in range(-1, n)])
    dist = enumerate_gibbs(model, dual, None, marks_at=lambda s: local.get(s, []))
    ising = ising_distribution(n, beta)
    gas = dist.as_dict()
    worst = 0.0
    hit = 0.0
    for bits, p in ising.items():
        q = gas.get(_contour_key(bits, n), 0.0)
        hit += q
        worst = max(worst, abs(p - q))
    # gas mass on contour configurations that are not the contours of any spin assignment
    return max(worst, abs(1.0 - hit))


@functools.lru_cache(maxsize=None)
def _contour_key(bits: tuple, n: int) -> tuple:
    sigma = [list(bits[i * n:(i + 1) * n]) for i in range(n)]
    particles = [Particle(*normalize(c)) for c in spins_to_contours(sigma, n).contours]
    return ParticleConfiguration(particles, check=False).key()


@functools.lru_cache(maxsize=None)
def _confined(n: int) -> dict:
    return confined_contours(n)


def histogram(configs: Iterable[ParticleConfiguration]) -> Counter:
    return Counter(c.key() for c in configs)


def tv_distance(empirical, exact) -> float:
    """Total variation 1/2 sum |p_hat - p| over the union of supports.

    ``empirical`` is a Counter/dict of counts or frequencies keyed by state (or
    a list of configurations); ``exact`` is an :class:`ExactDistribution`, a
    dict, or a sequence aligned with a sequence ``empirical``.
    """
    if isinstance(empirical, (list, tuple, np.ndarray)) and not isinstance(exact, (dict, ExactDistribution)):
        a = np.asarray(empirical, dtype=float)
        b = np.asarray(exact, dtype=float)
        return 0.5 * float(np.abs(a / a.sum() - b / b.sum()).sum())
    if isinstance(empirical, (list, tuple)):
        empirical = histogram(empirical)
    total = float(sum(empirical.values()))
    p_hat = {k: v / total for k, v in empirical.items()} if total else {}
    p = exact.as_dict() if isinstance(exact, ExactDistribution) else dict(exact)
    keys = set(p_hat) | set(p)
    return 0.5 * sum(abs(p_hat.get(k, 0.0) - p.get(k, 0.0)) for k in keys)
