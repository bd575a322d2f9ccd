"""Intensity measures nu on S x G, organised into cells of finite mass.

Every measure exposes a partition of S x G into countably many cells. The free
process is generated cell by cell, so the interface is: which cells can meet a
bounded region, the mass of a cell, and how to draw one particle from the
normalised restriction to a cell.
"""
from __future__ import annotations

import math
from typing import Callable, Mapping

import numpy as np

from .config_space import Box, Particle, Region, SiteSet
from .errors import NoClosedForm

__all__ = [
    "DiscreteMarks",
    "UniformAngles",
    "AtomicLattice",
    "UniformContinuum",
    "ContourWeights",
    "Pushforward",
]


class DiscreteMarks:
    """Finite mark measure: mark -> mass."""

    def __init__(self, weights: Mapping):
        if any(w < 0 for w in weights.values()):
            raise ValueError("mark masses must be nonnegative")
        self.weights = dict(weights)
        self.marks = sorted(self.weights, key=lambda m: (isinstance(m, float), m))
        self.total = float(sum(self.weights.values()))
        self._cum = np.cumsum([self.weights[m] for m in self.marks]) if self.marks else np.zeros(0)

    def mass(self, marks=None) -> float:
        if marks is None:
            return self.total
        return float(sum(w for m, w in self.weights.items() if m in marks))

    def sample(self, rng):
        u = rng.random() * self.total
        i = int(np.searchsorted(self._cum, u, side="right"))
        return self.marks[min(i, len(self.marks) - 1)]

    def scaled(self, c: float) -> "DiscreteMarks":
        return DiscreteMarks({m: c * w for m, w in self.weights.items()})

    def __repr__(self):
        return f"DiscreteMarks({self.weights})"


class UniformAngles:
    """``total`` times the uniform probability on [0, pi)."""

    def __init__(self, total: float = 1.0):
        if total < 0:
            raise ValueError("total mass must be nonnegative")
        self.total = float(total)

    def mass(self, marks=None) -> float:
        if marks is None:
            return self.total
        raise NoClosedForm("mass of a finite angle set under a diffuse measure is zero; use integrals")

    def sample(self, rng):
        g = rng.random() * math.pi
        return g if g < math.pi else 0.0

    def scaled(self, c: float) -> "UniformAngles":
        return UniformAngles(c * self.total)

    def __repr__(self):
        return f"UniformAngles({self.total})"


class IntensityMeasure:
    """Cell-partitioned intensity measure."""

    dim: int
    lattice: bool

    def cells_meeting(self, region: Region) -> list:
        raise NotImplementedError

    def cell_mass(self, cell) -> float:
        raise NotImplementedError

    def sample_in_cell(self, cell, rng) -> Particle:
        raise NotImplementedError

    def mass(self, region: Region) -> float:
        """Exact nu-mass of a bounded region, where a closed form exists."""
        raise NoClosedForm(f"{type(self).__name__} has no exact mass for {region!r}")

    def describe(self) -> dict:
        return {"kind": type(self).__name__}


def _index_range(lo, hi, step, closed_cells: bool):
    """Indices n with n*step in [lo, hi] (lattice) or cell [n*step, (n+1)*step) meeting [lo, hi]."""
    if closed_cells:
        return range(math.ceil(lo / step - 1e-12), math.floor(hi / step + 1e-12) + 1)
    return range(math.floor(lo / step), math.floor(hi / step) + 1)


class AtomicLattice(IntensityMeasure):
    """Per-site atomic intensity: every site carries mass ``marks.weights[m]`` for mark m.

    With ``spacing=None`` the sites are Z^d with integer coordinates. With a
    positive spacing the sites are spacing * Z^d with real coordinates.
    """

    lattice = True

    def __init__(self, dim: int, marks, spacing: float | None = None):
        self.dim = dim
        self.marks = marks if not isinstance(marks, Mapping) else DiscreteMarks(marks)
        self.spacing = spacing
        self.lattice = spacing is None

    def location(self, n: tuple) -> tuple:
        if self.spacing is None:
            return n
        return tuple(self.spacing * k for k in n)

    def cells_meeting(self, region):
        if isinstance(region, SiteSet) and self.spacing is None:
            return [("s", s) for s in sorted(region.site_set)]
        if region.bbox is None:
            raise ValueError("cannot enumerate cells of an unbounded region")
        lo, hi = region.bbox
        if not lo:
            return []
        step = 1.0 if self.spacing is None else self.spacing
        ranges = [_index_range(a, b, step, True) for a, b in zip(lo, hi)]
        return [("s", n) for n in _product(ranges)]

    def cell_mass(self, cell):
        return self.marks.total

    def sample_in_cell(self, cell, rng):
        return Particle(self.location(cell[1]), self.marks.sample(rng))

    def mass(self, region):
        total = 0.0
        for cell in self.cells_meeting(region):
            loc = self.location(cell[1])
            total += sum(w for m, w in self.marks.weights.items() if region.contains(Particle(loc, m)))
        return total

    def describe(self):
        return {"kind": "atomic-lattice", "marks": repr(self.marks), "spacing": self.spacing}


class UniformContinuum(IntensityMeasure):
    """Lebesgue measure on R^d times a finite mark measure, cut into cubes of side ``cell_size``."""

    lattice = False

    def __init__(self, dim: int, marks, cell_size: float = 1.0):
        self.dim = dim
        self.marks = marks if not isinstance(marks, Mapping) else DiscreteMarks(marks)
        self.cell_size = float(cell_size)

    def cells_meeting(self, region):
        if region.bbox is None:
            raise ValueError("cannot enumerate cells of an unbounded region")
        lo, hi = region.bbox
        if not lo or any(a > b for a, b in zip(lo, hi)):
            return []
        ranges = [_index_range(a, b, self.cell_size, False) for a, b in zip(lo, hi)]
        return [("c", n) for n in _product(ranges)]

    def cell_mass(self, cell):
        return self.marks.total * self.cell_size**self.dim

    def sample_in_cell(self, cell, rng):
        h = self.cell_size
        loc = tuple(float((k + rng.random()) * h) for k in cell[1])
        return Particle(loc, self.marks.sample(rng))

    def mass(self, region):
        if isinstance(region, Box):
            return region.volume() * self.marks.mass(region.marks)
        return super().mass(region)

    def describe(self):
        return {"kind": "uniform-continuum", "marks": repr(self.marks), "cell_size": self.cell_size}


class ContourWeights(IntensityMeasure):
    """Mass exp(-2 beta |gamma|) on every rooted contour of length <= lmax.

    Cells are (root site, length) classes; within a class all shapes have the
    same mass, so a shape is drawn uniformly from the catalog.
    """

    lattice = True
    dim = 2

    def __init__(self, beta: float, catalog):
        self.beta = float(beta)
        self.catalog = catalog
        self.lengths = [l for l in sorted(catalog.by_length) if catalog.by_length[l]]

    def weight(self, length: int) -> float:
        return math.exp(-2.0 * self.beta * length)

    def cells_meeting(self, region):
        if region.bbox is None:
            raise ValueError("cannot enumerate cells of an unbounded region")
        lo, hi = region.bbox
        if not lo:
            return []
        sites = _product([_index_range(a, b, 1.0, True) for a, b in zip(lo, hi)])
        return [("p", (s, l)) for s in sites for l in self.lengths]

    def cell_mass(self, cell):
        length = cell[1][1]
        return len(self.catalog.by_length.get(length, ())) * self.weight(length)

    def sample_in_cell(self, cell, rng):
        site, length = cell[1]
        shapes = self.catalog.by_length[length]
        return Particle(site, shapes[int(rng.integers(len(shapes)))])

    def mass(self, region):
        total = 0.0
        for cell in self.cells_meeting(region):
            site, length = cell[1]
            w = self.weight(length)
            total += w * sum(1 for s in self.catalog.by_length[length] if region.contains(Particle(site, s)))
        return total

    def describe(self):
        return {"kind": "contour-weights", "beta": self.beta, "lmax": self.catalog.lmax}


class Pushforward(IntensityMeasure):
    """Image of ``base`` under a particle map that moves points by at most ``reach``."""

    def __init__(self, base: IntensityMeasure, fn: Callable[[Particle], Particle], reach: float):
        self.base = base
        self.fn = fn
        self.reach = float(reach)
        self.dim = base.dim
        self.lattice = base.lattice

    def cells_meeting(self, region):
        if region.bbox is None:
            raise ValueError("cannot enumerate cells of an unbounded region")
        lo, hi = region.bbox
        inflated = Box(tuple(a - self.reach for a in lo), tuple(b + self.reach for b in hi))
        return self.base.cells_meeting(inflated)

    def cell_mass(self, cell):
        return self.base.cell_mass(cell)

    def sample_in_cell(self, cell, rng):
        return self.fn(self.base.sample_in_cell(cell, rng))

    def describe(self):
        return {"kind": "pushforward", "base": self.base.describe(), "reach": self.reach}


def _product(ranges):
    if not ranges:
        return [()]
    out = [()]
    for r in ranges:
        out = [t + (v,) for t in out for v in r]
    return out
