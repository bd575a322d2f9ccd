"""Lazy generation of the stationary free cylinder process.

The free process is a Poisson process of cylinders (basis, birth, lifespan)
with intensity exp(-delta_E) nu(d basis) x dt x Exp(1)(dl), each carrying a
uniform flag. It is generated per cell of the intensity partition and only
backwards in time: a cell answers queries "which cylinders are alive at t" for
non-increasing t. Given the answer at t_last, the cylinders alive at t < t_last
that are not yet known are exactly those alive at t and dead by t_last; their
number is Poisson(m_c (1 - exp(-(t_last - t)))), their age t - birth is Exp(1)
and their residual life is Exp(1) truncated to (0, t_last - t].
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .config_space import Particle, Region
from .errors import QueryOrderViolation
from .intensity import IntensityMeasure

__all__ = ["Cylinder", "CellTimeline", "Substrate", "derive_seed", "cell_stream"]


@dataclass(frozen=True, slots=True)
class Cylinder:
    basis: Particle
    birth: float
    lifespan: float
    flag: float
    id: tuple

    @property
    def death(self) -> float:
        return self.birth + self.lifespan

    def alive_at(self, t: float) -> bool:
        return self.birth <= t < self.birth + self.lifespan


def derive_seed(seed: int, index) -> int:
    """64-bit child seed: blake2b over the text "seed:index"."""
    digest = hashlib.blake2b(f"{seed}:{index}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def cell_stream(seed: int, cell) -> np.random.Generator:
    """Dedicated PCG64 stream for one cell, keyed by blake2b("seed|cell")."""
    digest = hashlib.blake2b(f"{seed}|{cell!r}".encode(), digest_size=16).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(digest, "little")))


class CellTimeline:
    """Backward timeline of one cell."""

    __slots__ = ("cell", "mass", "revealed", "last_query", "_rng", "_intensity", "_seed")

    def __init__(self, cell, mass: float, intensity: IntensityMeasure, seed: int):
        self.cell = cell
        self.mass = mass
        self.revealed: list[Cylinder] = []
        self.last_query = math.inf
        self._rng = None
        self._intensity = intensity
        self._seed = seed

    def alive_at(self, t: float) -> list[Cylinder]:
        if t > self.last_query:
            raise QueryOrderViolation(f"cell {self.cell!r}: query at {t} after {self.last_query}")
        if t < self.last_query and self.mass > 0:
            self._reveal(t)
        self.last_query = t
        return [c for c in self.revealed if c.birth <= t < c.birth + c.lifespan]

    def _reveal(self, t: float) -> None:
        if self._rng is None:
            self._rng = cell_stream(self._seed, self.cell)
        rng = self._rng
        gap = self.last_query - t
        if math.isinf(gap):
            n = int(rng.poisson(self.mass))
            cap = 1.0
        else:
            cap = -math.expm1(-gap)
            n = int(rng.poisson(self.mass * cap))
        for _ in range(n):
            basis = self._intensity.sample_in_cell(self.cell, rng)
            age = float(rng.standard_exponential())
            birth = t - age
            while True:
                if cap == 1.0:
                    residual = float(rng.standard_exponential())
                else:
                    # inverse CDF of Exp(1) truncated to (0, gap]
                    residual = -math.log1p(-rng.random() * cap)
                lifespan = (t - birth) + residual
                # redraw in the (float-rounding only) case the cylinder is not alive at t
                if birth + lifespan > t:
                    break
            flag = float(rng.random())
            self.revealed.append(Cylinder(basis, birth, lifespan, flag, (self.cell, len(self.revealed))))


class Substrate:
    """Deterministic realisation of the free process for one seed.

    ``delta_E`` is the uniform leap bound; cell masses are exp(-delta_E) times
    the nu-mass of the cell.
    """

    def __init__(self, intensity: IntensityMeasure, delta_E: float = 0.0, seed: int = 0):
        self.intensity = intensity
        self.delta_E = float(delta_E)
        self.seed = int(seed)
        self.scale = math.exp(-self.delta_E)
        self.cells: dict = {}

    def timeline(self, cell) -> CellTimeline:
        tl = self.cells.get(cell)
        if tl is None:
            mass = self.scale * self.intensity.cell_mass(cell)
            tl = self.cells[cell] = CellTimeline(cell, mass, self.intensity, self.seed)
        return tl

    def alive_at(self, cell, t: float) -> list[Cylinder]:
        return self.timeline(cell).alive_at(t)

    def reveal_window(self, window: Region, t: float) -> list[Cylinder]:
        """Cylinders alive at t with basis in ``window``."""
        out = []
        for cell in self.intensity.cells_meeting(window):
            out.extend(c for c in self.alive_at(cell, t) if window.contains(c.basis))
        return out

    def describe(self) -> dict:
        return {"seed": self.seed, "delta_E": self.delta_E, "partition": self.intensity.describe()}
