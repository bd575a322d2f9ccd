"""Gas models: an intensity measure plus an interaction given by energy leaps.

Every model answers three questions about a particle: its energy leap relative
to a configuration (``math.inf`` means exclusion), the impact region of
particles that can change that leap, and an envelope region containing the
impact region (used by coupled samplers). ``delta_E`` is a uniform lower bound
on all leaps.
"""
from __future__ import annotations

import hashlib
import math
from typing import Callable

from shapely.geometry import LineString

from .config_space import (
    Box,
    Particle,
    ParticleConfiguration,
    PredicateRegion,
    Region,
    SiteSet,
    Union,
    location_distance,
)
from .contours import ContourCatalog, enumerate_contours
from .errors import InsufficientSupport, UnboundedDensity
from .geometry import rod_endpoints, rods_intersect
from .intensity import (
    AtomicLattice,
    ContourWeights,
    DiscreteMarks,
    IntensityMeasure,
    UniformAngles,
    UniformContinuum,
)

__all__ = [
    "GasModel",
    "StepFunction",
    "DiscreteWR",
    "ContinuumWR",
    "GeneralizedWR",
    "ThinRods",
    "Peierls",
    "ShrunkenWR",
    "EffectiveModel",
    "effective_model",
    "shrink_adapter",
    "negligible_set_membership",
    "opposite",
]

INF = math.inf


def opposite(mark: str) -> str:
    return "-" if mark == "+" else "+"


class GasModel:
    """Base class for pair-potential gas models.

    Subclasses provide ``pair`` (the two-body term, possibly ``inf``) and
    ``impact_region``; the leap is the sum of pair terms over the configuration
    restricted to the impact region.
    """

    family = "generic"
    translation_invariant = True

    def __init__(self, intensity: IntensityMeasure, delta_E: float = 0.0):
        self.intensity = intensity
        self.delta_E = float(delta_E)

    @property
    def dim(self) -> int:
        return self.intensity.dim

    @property
    def lattice(self) -> bool:
        return self.intensity.lattice

    def pair(self, p: Particle, q: Particle) -> float:
        return 0.0

    def single(self, p: Particle, volume: Region | None) -> float:
        return 0.0

    def impact_region(self, p: Particle) -> Region:
        raise NotImplementedError

    def envelope_region(self, p: Particle) -> Region:
        return self.impact_region(p)

    def relation_region(self, p: Particle, relation: str = "impact") -> Region:
        if relation == "impact":
            return self.impact_region(p)
        if relation == "envelope":
            return self.envelope_region(p)
        raise ValueError(f"unknown relation {relation!r}")

    def energy_leap(self, p: Particle, config: ParticleConfiguration, volume: Region | None = None) -> float:
        """Energy cost of adding ``p`` to ``config``; with ``volume`` the finite-volume leap."""
        region = self.impact_region(p)
        if not config.window.covers_bbox(region):
            raise InsufficientSupport(f"configuration window does not cover the impact region of {p}")
        total = self.single(p, volume)
        if total == INF:
            return INF
        for q, m in config.items():
            if not region.contains(q):
                continue
            v = self.pair(p, q)
            if v == INF:
                return INF
            total += m * v
        return total

    def parameters(self) -> dict:
        return {}

    def describe(self) -> dict:
        out = {"family": self.family, "delta_E": self.delta_E}
        out.update(self.parameters())
        out["intensity"] = self.intensity.describe()
        return out

    def model_hash(self) -> str:
        text = repr(sorted((k, repr(v)) for k, v in self.describe().items()))
        return hashlib.blake2b(text.encode(), digest_size=8).hexdigest()

    def __repr__(self):
        params = ", ".join(f"{k}={v!r}" for k, v in self.parameters().items())
        return f"{type(self).__name__}({params})"


# ---------------------------------------------------------------------------
# Widom-Rowlinson family


class DiscreteWR(GasModel):
    """Two-type lattice gas on Z^d: one particle per site, opposite types at sup distance <= k excluded."""

    family = "discrete-wr"

    def __init__(self, lam_plus: float, lam_minus: float, k: int = 1, d: int = 2):
        super().__init__(AtomicLattice(d, {"+": lam_plus, "-": lam_minus}))
        self.lam_plus, self.lam_minus, self.k = float(lam_plus), float(lam_minus), int(k)

    def pair(self, p, q):
        if p.location == q.location:
            return INF
        if p.mark != q.mark and location_distance(p.location, q.location) <= self.k:
            return INF
        return 0.0

    def impact_region(self, p):
        return Union(
            SiteSet([p.location], marks={p.mark}),
            Box.ball(p.location, self.k, marks={opposite(p.mark)}, lattice=True),
        )

    def parameters(self):
        return {"lam_plus": self.lam_plus, "lam_minus": self.lam_minus, "k": self.k, "d": self.dim}


class ContinuumWR(GasModel):
    """Two-type gas in R^d: opposite types at sup distance <= r excluded."""

    family = "continuum-wr"

    def __init__(self, lam_plus: float, lam_minus: float, r: float, d: int = 2, cell_size: float = 1.0):
        super().__init__(UniformContinuum(d, {"+": lam_plus, "-": lam_minus}, cell_size))
        self.lam_plus, self.lam_minus, self.r = float(lam_plus), float(lam_minus), float(r)

    def pair(self, p, q):
        if p.mark != q.mark and location_distance(p.location, q.location) <= self.r:
            return INF
        return 0.0

    def impact_region(self, p):
        return Box.ball(p.location, self.r, marks={opposite(p.mark)})

    def parameters(self):
        return {"lam_plus": self.lam_plus, "lam_minus": self.lam_minus, "r": self.r, "d": self.dim}


class ShrunkenWR(GasModel):
    """Widom-Rowlinson model viewed at lattice spacing ``eps`` in continuum units.

    For eps > 0 the sites are eps*Z^d with per-site fugacity eps^d*lam and two
    particles on one site exclude each other; opposite types at sup distance in
    (0, r0] exclude each other for every eps. eps = 0 is the continuum model.
    ``delta`` sets the envelope: same type within open delta, opposite type
    within r0 + delta.
    """

    family = "shrunken-wr"

    def __init__(self, lam: float, r0: float, d: int = 2, eps: float = 0.0, delta: float = 0.0, cell_size: float = 1.0):
        lam = float(lam)
        if eps > 0:
            spacing = None if eps == 1 else float(eps)
            intensity = AtomicLattice(d, {"+": eps**d * lam, "-": eps**d * lam}, spacing=spacing)
        else:
            intensity = UniformContinuum(d, {"+": lam, "-": lam}, cell_size)
        super().__init__(intensity)
        self.lam, self.r0, self.eps, self.delta = lam, float(r0), float(eps), float(delta)

    def pair(self, p, q):
        dist = location_distance(p.location, q.location)
        if self.eps > 0 and dist == 0:
            return INF
        if p.mark != q.mark and 0 < dist <= self.r0:
            return INF
        return 0.0

    def impact_region(self, p):
        lattice = self.eps == 1
        parts = [Box.ball(p.location, self.r0, marks={opposite(p.mark)}, lattice=lattice)]
        if self.eps > 0:
            parts.append(Box(p.location, p.location, marks={p.mark}, lattice=lattice))
        return Union(*parts)

    def envelope_region(self, p):
        d = self.delta
        if d <= 0:
            return self.impact_region(p)
        return Union(
            Box.ball(p.location, d, marks={p.mark}, strict=True),
            Box.ball(p.location, self.r0 + d, marks={opposite(p.mark)}),
        )

    def parameters(self):
        return {"lam": self.lam, "r0": self.r0, "d": self.dim, "eps": self.eps, "delta": self.delta}


def shrink_adapter(model: DiscreteWR, eps: float, delta: float = 0.0) -> ShrunkenWR:
    """The discrete WR model with fugacity lam and radius k, shrunk by ``eps``.

    Sites move to eps*Z^d, per-site fugacity becomes eps^d*lam and the exclusion
    radius stays k in continuum units (k/eps lattice steps). eps = 1 returns the
    original lattice model in integer coordinates; eps = 0 is the continuum limit.
    """
    if not isinstance(model, DiscreteWR):
        raise TypeError("shrink_adapter expects a discrete Widom-Rowlinson model")
    if model.lam_plus != model.lam_minus:
        raise ValueError("shrink_adapter needs equal fugacities")
    return ShrunkenWR(model.lam_plus, model.k, model.dim, eps=eps, delta=delta)


class StepFunction:
    """Nonincreasing step function: value ``values[i]`` on (breaks[i-1], breaks[i]], 0 beyond."""

    def __init__(self, breaks, values):
        if len(breaks) != len(values):
            raise ValueError("breaks and values must have equal length")
        if any(b <= a for a, b in zip(breaks, breaks[1:])) or (breaks and breaks[0] <= 0):
            raise ValueError("breakpoints must be positive and increasing")
        if any(v < 0 for v in values) or any(b > a for a, b in zip(values, values[1:])):
            raise ValueError("step values must be nonnegative and nonincreasing")
        self.breaks = tuple(float(b) for b in breaks)
        self.values = tuple(float(v) for v in values)

    @classmethod
    def zero(cls) -> "StepFunction":
        return cls((), ())

    def __call__(self, r: float) -> float:
        for b, v in zip(self.breaks, self.values):
            if r <= b:
                return v
        return 0.0

    @property
    def reach(self) -> float:
        """sup{r : f(r) != 0}."""
        m = 0.0
        for b, v in zip(self.breaks, self.values):
            if v != 0:
                m = b
        return m

    def __repr__(self):
        return f"StepFunction({list(self.breaks)}, {list(self.values)})"


class GeneralizedWR(GasModel):
    """Widom-Rowlinson model with soft repulsions: h between opposite types, j+ / j- within a type."""

    family = "generalized-wr"

    def __init__(self, lam_plus, lam_minus, h: StepFunction, j_plus: StepFunction, j_minus: StepFunction, d: int = 2, cell_size: float = 1.0):
        super().__init__(UniformContinuum(d, {"+": lam_plus, "-": lam_minus}, cell_size))
        self.lam_plus, self.lam_minus = float(lam_plus), float(lam_minus)
        self.h, self.j_plus, self.j_minus = h, j_plus, j_minus

    def _j(self, mark):
        return self.j_plus if mark == "+" else self.j_minus

    def pair(self, p, q):
        r = location_distance(p.location, q.location)
        if p.mark != q.mark:
            return self.h(r)
        return self._j(p.mark)(r)

    def impact_region(self, p):
        parts = []
        if self.h.reach > 0:
            parts.append(Box.ball(p.location, self.h.reach, marks={opposite(p.mark)}))
        jr = self._j(p.mark).reach
        if jr > 0:
            parts.append(Box.ball(p.location, jr, marks={p.mark}))
        return Union(*parts) if parts else Box(p.location, p.location, marks=())

    def parameters(self):
        return {
            "lam_plus": self.lam_plus,
            "lam_minus": self.lam_minus,
            "h": self.h,
            "j_plus": self.j_plus,
            "j_minus": self.j_minus,
            "d": self.dim,
        }


# ---------------------------------------------------------------------------
# Thin rods


class ThinRods(GasModel):
    """Hard rods of length 2l in the plane, centred on Z^2 (``lattice``) or R^2.

    ``orientation`` is ``"uniform"`` or a mapping angle -> probability; the
    lattice model needs atomic orientations. ``envelope`` enlarges the impact
    region to rods within segment distance ``envelope`` of each other.
    """

    family = "thin-rods"

    def __init__(self, lam: float, half_length: float, orientation="uniform", lattice: bool = False, cell_size: float = 1.0, envelope: float = 0.0):
        if orientation == "uniform":
            marks = UniformAngles(lam)
        else:
            total = sum(orientation.values())
            if abs(total - 1.0) > 1e-12:
                raise ValueError("orientation probabilities must sum to 1")
            marks = DiscreteMarks({float(a): lam * p for a, p in orientation.items()})
        if lattice:
            if not isinstance(marks, DiscreteMarks):
                raise ValueError("lattice rods need an atomic orientation measure")
            intensity = AtomicLattice(2, marks)
        else:
            intensity = UniformContinuum(2, marks, cell_size)
        super().__init__(intensity)
        self.lam, self.half_length, self.orientation = float(lam), float(half_length), orientation
        self.envelope = float(envelope)

    def pair(self, p, q):
        return INF if rods_intersect(p, q, self.half_length) else 0.0

    def _bbox(self, p, reach):
        lo = tuple(c - reach for c in p.location)
        hi = tuple(c + reach for c in p.location)
        if self.lattice:
            lo = tuple(math.ceil(v) for v in lo)
            hi = tuple(math.floor(v) for v in hi)
        return lo, hi

    def impact_region(self, p):
        l = self.half_length
        return PredicateRegion(self._bbox(p, 2 * l), lambda q: rods_intersect(p, q, l), lattice=self.lattice, label="rod-hull")

    def envelope_region(self, p):
        if self.envelope <= 0:
            return self.impact_region(p)
        l, e = self.half_length, self.envelope
        seg = LineString(rod_endpoints(p, l))

        def near(q):
            return rods_intersect(p, q, l) or seg.distance(LineString(rod_endpoints(q, l))) <= e

        return PredicateRegion(self._bbox(p, 2 * l + e), near, lattice=self.lattice, label="rod-hull-inflated")

    def parameters(self):
        return {"lam": self.lam, "half_length": self.half_length, "orientation": self.orientation, "lattice": self.lattice}


# ---------------------------------------------------------------------------
# Peierls contours


class Peierls(GasModel):
    """Contour gas of the low-temperature Ising model with + boundary.

    Particles are rooted contour shapes placed at their root dual site; two
    contours interact (exclusion) iff they share a vertex. In a finite volume
    every contour must have all its vertices inside the volume.
    """

    family = "peierls"

    def __init__(self, beta: float, lmax: int = 8, catalog: ContourCatalog | None = None):
        catalog = catalog if catalog is not None else enumerate_contours(lmax)
        super().__init__(ContourWeights(beta, catalog))
        self.beta, self.lmax, self.catalog = float(beta), catalog.lmax, catalog

    def pair(self, p, q):
        if p.mark.vertices_at(p.location) & q.mark.vertices_at(q.location):
            return INF
        return 0.0

    def exclusion_resources(self, p) -> frozenset:
        """Dual vertices of the contour; two contours exclude each other iff these meet."""
        return p.mark.vertices_at(p.location)

    def single(self, p, volume):
        if volume is None:
            return 0.0
        for v in p.mark.vertices_at(p.location):
            if not volume.contains(Particle(v, p.mark)):
                return INF
        return 0.0

    def impact_region(self, p):
        verts = p.mark.vertices_at(p.location)
        reach = self.lmax // 2 - 1
        xs = [v[0] for v in verts]
        ys = [v[1] for v in verts]
        bbox = ((min(xs) - reach, min(ys) - reach), (max(xs), max(ys) + reach))

        def meets(q):
            return not verts.isdisjoint(q.mark.vertices_at(q.location))

        return PredicateRegion(bbox, meets, lattice=True, label="contour-overlap")

    def parameters(self):
        return {"beta": self.beta, "lmax": self.lmax}


# ---------------------------------------------------------------------------
# Absolutely continuous modifications


class EffectiveModel(GasModel):
    """Model with intensity ``reference`` and leaps ``base`` leap minus log density.

    Gas kernels agree with those of ``base`` with its intensity replaced by
    density * reference. ``delta_E`` is the caller-supplied uniform bound.
    """

    family = "effective"

    def __init__(self, base: GasModel, reference: IntensityMeasure, density: Callable[[Particle], float], delta_E: float, label: str = ""):
        super().__init__(reference, delta_E)
        self.base = base
        self.density = density
        self.label = label

    def energy_leap(self, p, config, volume=None):
        c = self.density(p)
        if not c > 0:
            raise UnboundedDensity(f"density must be positive, got {c!r} at {p}")
        leap = self.base.energy_leap(p, config, volume)
        if leap == INF:
            return INF
        out = leap - math.log(c)
        if out < self.delta_E - 1e-12:
            raise UnboundedDensity(f"leap {out} below the declared bound {self.delta_E}")
        return out

    def pair(self, p, q):
        return self.base.pair(p, q)

    def impact_region(self, p):
        return self.base.impact_region(p)

    def envelope_region(self, p):
        return self.base.envelope_region(p)

    def parameters(self):
        return {"base": repr(self.base), "label": self.label}


def effective_model(base: GasModel, reference_intensity: IntensityMeasure, density, delta_E: float | None = None, label: str = "") -> EffectiveModel:
    """Wrap ``base`` so that it is driven by ``reference_intensity``.

    ``density`` is d(nu_base)/d(reference) as a function of the particle. When
    ``delta_E`` is omitted the base bound is used, which is valid for densities
    not exceeding 1.
    """
    if delta_E is None:
        delta_E = base.delta_E
    return EffectiveModel(base, reference_intensity, density, delta_E, label)


# ---------------------------------------------------------------------------
# Negligible sets


def negligible_set_membership(family, config: ParticleConfiguration, r0: float | None = None) -> bool:
    """Whether ``config`` lies in the family's declared negligible set.

    WR families: some location carries more than one particle (N1), or, when
    ``r0`` is known, two opposite particles sit at sup distance exactly r0 (N2).
    Nematic rods: two distinct horizontal rods share a first coordinate or two
    distinct vertical rods share a second coordinate.
    """
    if isinstance(family, GasModel):
        model = family
        family = model.family
        if r0 is None:
            r0 = getattr(model, "r0", getattr(model, "r", None))
    entries = list(config.items())
    if family in ("discrete-wr", "continuum-wr", "shrunken-wr", "generalized-wr", "wr"):
        per_site: dict = {}
        for p, m in entries:
            per_site[p.location] = per_site.get(p.location, 0) + m
        if any(v > 1 for v in per_site.values()):
            return True
        if r0 is not None:
            for i, (p, _) in enumerate(entries):
                for q, _ in entries[i + 1:]:
                    if p.mark != q.mark and location_distance(p.location, q.location) == r0:
                        return True
        return False
    if family in ("thin-rods", "nematic-rods"):
        def kind(m):
            if m in ("+", 0.0):
                return "+"
            if m in ("-", math.pi / 2):
                return "-"
            return None

        for i, (p, _) in enumerate(entries):
            for q, _ in entries[i + 1:]:
                kp, kq = kind(p.mark), kind(q.mark)
                if kp is None or kp != kq:
                    continue
                axis = 0 if kp == "+" else 1
                if p.location[axis] == q.location[axis]:
                    return True
        return False
    raise ValueError(f"no negligible set declared for family {family!r}")
