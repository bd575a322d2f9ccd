"""Finite particle configurations on a product space S x G.

A configuration is a finite measure sum_i m_i delta_{particle_i}; it is stored
as a mapping particle -> multiplicity together with the bounded window it is
supported on. Regions are restricted to finitely describable sets (boxes, site
sets, mark products, unions, complements and bounded predicate sets) so that
membership is always decidable.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Iterator, Mapping

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

__all__ = [
    "Particle",
    "ParticleConfiguration",
    "Region",
    "Box",
    "SiteSet",
    "Union",
    "Complement",
    "PredicateRegion",
    "Whole",
    "distance",
    "mark_distance",
    "location_distance",
    "count",
    "restrict",
    "superpose",
    "is_delta_embedded",
    "in_neighborhood",
    "write_configurations",
    "read_configurations",
]


@dataclass(frozen=True, slots=True)
class Particle:
    """An animal ``mark`` placed at ``location``.

    Locations are tuples of ints (lattice models) or floats (continuum models).
    Marks are spin labels (``"+"``/``"-"``), orientation angles in [0, pi) or
    contour shapes.
    """

    location: tuple
    mark: Hashable

    def __post_init__(self):
        if type(self.mark) is float and not (0.0 <= self.mark < math.pi):
            raise ValueError(f"angle mark {self.mark!r} outside [0, pi)")

    @property
    def dim(self) -> int:
        return len(self.location)

    def sort_key(self):
        return (self.location, _mark_key(self.mark))


def _mark_key(mark):
    if isinstance(mark, str):
        return (0, mark)
    if isinstance(mark, (int, float)):
        return (1, float(mark))
    key = getattr(mark, "sort_key", None)
    if key is not None:
        return (2, key())
    return (3, repr(mark))


def location_distance(x: tuple, y: tuple) -> float:
    """Sup-norm distance between two locations."""
    if not x:
        return 0.0
    return max(abs(a - b) for a, b in zip(x, y))


def mark_distance(a, b) -> float:
    """Arc distance on [0, pi) for angles, discrete metric otherwise."""
    if isinstance(a, float) and isinstance(b, float):
        d = abs(a - b) % math.pi
        return min(d, math.pi - d)
    return 0.0 if a == b else 1.0


def distance(p: Particle, q: Particle) -> float:
    """Product metric d_S + d_G."""
    return location_distance(p.location, q.location) + mark_distance(p.mark, q.mark)


# ---------------------------------------------------------------------------
# Regions


class Region:
    """A finitely describable subset of S x G with exact membership.

    ``bbox`` is a closed bounding box ``(lo, hi)`` of the locations in the
    region, or ``None`` when the region is unbounded.
    """

    lattice: bool = False
    bbox: tuple | None = None

    def contains(self, p: Particle) -> bool:
        raise NotImplementedError

    def __contains__(self, p: Particle) -> bool:
        return self.contains(p)

    def is_bounded(self) -> bool:
        return self.bbox is not None

    def covers_bbox(self, other: "Region") -> bool:
        """Whether this region's bounding box contains ``other``'s."""
        if self.bbox is None:
            return True
        if other.bbox is None:
            return False
        (lo, hi), (olo, ohi) = self.bbox, other.bbox
        return all(a <= b for a, b in zip(lo, olo)) and all(a >= b for a, b in zip(hi, ohi))


class Whole(Region):
    """All of S x G."""

    def __init__(self, lattice: bool = False):
        self.lattice = lattice
        self.bbox = None

    def contains(self, p):
        return True

    def __repr__(self):
        return "Whole()"


class Box(Region):
    """Axis-aligned box of locations, optionally times a mark subset.

    Bounds are closed unless ``open_lo``/``open_hi`` is set. For lattice boxes
    the sites are the integer points between ``lo`` and ``hi``.
    """

    def __init__(self, lo, hi, marks=None, lattice=False, open_lo=False, open_hi=False):
        self.lo = tuple(lo)
        self.hi = tuple(hi)
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have equal length")
        self.marks = None if marks is None else frozenset(marks)
        self.lattice = lattice
        self.open_lo = open_lo
        self.open_hi = open_hi
        self.bbox = (self.lo, self.hi)

    @classmethod
    def ball(cls, center, radius, marks=None, lattice=False, strict=False):
        """Sup-norm ball; ``strict`` makes it open."""
        lo = tuple(c - radius for c in center)
        hi = tuple(c + radius for c in center)
        if lattice:
            lo = tuple(math.ceil(v) for v in lo)
            hi = tuple(math.floor(v) for v in hi)
        return cls(lo, hi, marks=marks, lattice=lattice, open_lo=strict, open_hi=strict)

    def contains(self, p):
        if self.marks is not None and p.mark not in self.marks:
            return False
        x = p.location
        if len(x) != len(self.lo):
            return False
        for v, a, b in zip(x, self.lo, self.hi):
            if v < a or v > b:
                return False
            if self.open_lo and v == a:
                return False
            if self.open_hi and v == b:
                return False
        return True

    def is_empty(self) -> bool:
        return any(a > b for a, b in zip(self.lo, self.hi))

    def sites(self) -> Iterator[tuple]:
        """Integer sites of a lattice box."""
        if not self.lattice:
            raise TypeError("sites() is only defined for lattice boxes")
        ranges = []
        for a, b in zip(self.lo, self.hi):
            a0 = a + 1 if self.open_lo else a
            b0 = b - 1 if self.open_hi else b
            ranges.append(range(int(a0), int(b0) + 1))
        yield from _product(ranges)

    def volume(self) -> float:
        return float(np.prod([max(0.0, b - a) for a, b in zip(self.lo, self.hi)]))

    def inflate(self, r: float) -> "Box":
        """Closed box grown by ``r`` on every side (keeps the mark set)."""
        return Box(tuple(a - r for a in self.lo), tuple(b + r for b in self.hi), marks=self.marks, lattice=self.lattice)

    def __repr__(self):
        return f"Box({self.lo}, {self.hi}, marks={sorted(self.marks) if self.marks else None})"


def _product(ranges):
    if not ranges:
        yield ()
        return
    head, *tail = ranges
    for v in head:
        for rest in _product(tail):
            yield (v,) + rest


class SiteSet(Region):
    """Finite set of lattice sites, optionally times a mark subset."""

    def __init__(self, sites: Iterable, marks=None):
        self.site_set = frozenset(tuple(s) for s in sites)
        self.marks = None if marks is None else frozenset(marks)
        self.lattice = True
        if self.site_set:
            arr = np.array(sorted(self.site_set))
            self.bbox = (tuple(int(v) for v in arr.min(axis=0)), tuple(int(v) for v in arr.max(axis=0)))
        else:
            self.bbox = ((), ())

    def contains(self, p):
        if self.marks is not None and p.mark not in self.marks:
            return False
        return p.location in self.site_set

    def sites(self):
        return iter(sorted(self.site_set))

    def is_empty(self):
        return not self.site_set

    def __repr__(self):
        return f"SiteSet({len(self.site_set)} sites)"


class Union(Region):
    def __init__(self, *parts: Region):
        self.parts = tuple(parts)
        self.lattice = all(p.lattice for p in parts) if parts else False
        boxes = [p.bbox for p in parts]
        if any(b is None for b in boxes):
            self.bbox = None
        else:
            boxes = [b for b in boxes if b[0]]
            if boxes:
                lo = tuple(min(v) for v in zip(*(b[0] for b in boxes)))
                hi = tuple(max(v) for v in zip(*(b[1] for b in boxes)))
                self.bbox = (lo, hi)
            else:
                self.bbox = ((), ())

    def contains(self, p):
        return any(part.contains(p) for part in self.parts)

    def __repr__(self):
        return f"Union{self.parts}"


class Complement(Region):
    """``within`` minus ``region``."""

    def __init__(self, region: Region, within: Region):
        self.region = region
        self.within = within
        self.lattice = within.lattice
        self.bbox = within.bbox

    def contains(self, p):
        return self.within.contains(p) and not self.region.contains(p)


class PredicateRegion(Region):
    """Bounded region given by an exact membership predicate.

    Used for interaction ranges that are not boxes (rod hulls, contour
    overlaps). ``bbox`` must contain every location for which the predicate
    can hold.
    """

    def __init__(self, bbox, predicate: Callable[[Particle], bool], lattice=False, label=""):
        self.bbox = (tuple(bbox[0]), tuple(bbox[1]))
        self.predicate = predicate
        self.lattice = lattice
        self.label = label

    def contains(self, p):
        x = p.location
        lo, hi = self.bbox
        for v, a, b in zip(x, lo, hi):
            if v < a or v > b:
                return False
        return self.predicate(p)

    def __repr__(self):
        return f"PredicateRegion({self.label or 'predicate'}, bbox={self.bbox})"


# ---------------------------------------------------------------------------
# Configurations


class ParticleConfiguration:
    """Finite multiset of particles supported on ``window``.

    Equality compares the underlying measures; the window is descriptive.
    Instances are immutable.
    """

    __slots__ = ("_counts", "window", "_key")

    def __init__(self, entries=(), window: Region | None = None, check: bool = True):
        counts: dict[Particle, int] = {}
        items = entries.items() if isinstance(entries, Mapping) else entries
        for item in items:
            if isinstance(item, Particle):
                p, m = item, 1
            else:
                p, m = item
            if m < 1 or int(m) != m:
                raise ValueError(f"multiplicity must be a positive integer, got {m!r}")
            counts[p] = counts.get(p, 0) + int(m)
        if check and window is not None:
            for p in counts:
                if not window.contains(p):
                    raise ValueError(f"{p} lies outside the configuration window")
        self._counts = counts
        self.window = window if window is not None else Whole()
        self._key = None

    @classmethod
    def from_particles(cls, particles: Iterable[Particle], window: Region | None = None, check=True):
        return cls(((p, 1) for p in particles), window=window, check=check)

    @property
    def entries(self) -> tuple:
        return tuple((p, self._counts[p]) for p in sorted(self._counts, key=Particle.sort_key))

    def multiplicity(self, p: Particle) -> int:
        return self._counts.get(p, 0)

    def support(self) -> frozenset:
        return frozenset(self._counts)

    def particles(self) -> list[Particle]:
        """Weighted support as a flat list (each particle repeated by multiplicity)."""
        out = []
        for p, m in self.entries:
            out.extend([p] * m)
        return out

    def total(self) -> int:
        return sum(self._counts.values())

    def is_empty(self) -> bool:
        return not self._counts

    def items(self):
        return self._counts.items()

    def map(self, fn: Callable[[Particle], Particle], window: Region | None = None):
        """Image configuration sum_i m_i delta_{fn(p_i)}."""
        out: dict[Particle, int] = {}
        for p, m in self._counts.items():
            q = fn(p)
            out[q] = out.get(q, 0) + m
        return ParticleConfiguration(out, window=window, check=False)

    def key(self) -> tuple:
        if self._key is None:
            self._key = tuple((p.location, p.mark, m) for p, m in self.entries)
        return self._key

    def __eq__(self, other):
        if not isinstance(other, ParticleConfiguration):
            return NotImplemented
        return self._counts == other._counts

    def __hash__(self):
        return hash(frozenset(self._counts.items()))

    def __len__(self):
        return self.total()

    def __iter__(self):
        return iter(self.particles())

    def __repr__(self):
        body = ", ".join(f"{p.mark}@{p.location}" + (f"x{m}" if m > 1 else "") for p, m in self.entries)
        return f"ParticleConfiguration({{{body}}})"


def count(config: ParticleConfiguration, region: Region) -> int:
    """N_B: total multiplicity of particles of ``config`` inside ``region``."""
    return sum(m for p, m in config.items() if region.contains(p))


def restrict(config: ParticleConfiguration, region: Region) -> ParticleConfiguration:
    """Restriction of ``config`` to ``region``; the window is kept."""
    kept = {p: m for p, m in config.items() if region.contains(p)}
    return ParticleConfiguration(kept, window=config.window, check=False)


def superpose(a: ParticleConfiguration, b: ParticleConfiguration) -> ParticleConfiguration:
    """Sum of the two measures. Different windows merge into their union."""
    counts = dict(a.items())
    for p, m in b.items():
        counts[p] = counts.get(p, 0) + m
    if a.window is b.window:
        window = a.window
    elif isinstance(a.window, Whole) or isinstance(b.window, Whole):
        window = Whole()
    else:
        window = Union(a.window, b.window)
    return ParticleConfiguration(counts, window=window, check=False)


def is_delta_embedded(xi: ParticleConfiguration, eta: ParticleConfiguration, delta: float) -> bool:
    """Whether an injection [xi] -> [eta] moves every point by less than ``delta``.

    Decided exactly by maximum bipartite matching on the graph whose edges join
    copies at product-metric distance < delta.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    src = xi.particles()
    if not src:
        return True
    dst = eta.particles()
    if len(src) > len(dst):
        return False
    rows, cols = [], []
    for i, p in enumerate(src):
        for j, q in enumerate(dst):
            if distance(p, q) < delta:
                rows.append(i)
                cols.append(j)
    if not rows:
        return False
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(len(src), len(dst)))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return bool(np.all(match >= 0))


def in_neighborhood(xi, eta, K: Region, delta: float) -> bool:
    """Membership of ``eta`` in the (K, delta)-neighbourhood of ``xi``."""
    return is_delta_embedded(restrict(xi, K), eta, delta) and is_delta_embedded(restrict(eta, K), xi, delta)


# ---------------------------------------------------------------------------
# Text serialization

FIELDS = ("replica", "eps", "coords", "mark", "multiplicity")


def _fmt_real(v: float) -> str:
    return format(float(v), ".16e")


def _fmt_coord(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return _fmt_real(v)


def _parse_coord(text: str):
    if any(c in text for c in ".eEn"):
        return float(text)
    return int(text)


def encode_mark(mark) -> str:
    if isinstance(mark, str):
        if mark.startswith(("a:", "c:")):
            raise ValueError(f"string mark {mark!r} collides with an encoding prefix")
        return mark
    if isinstance(mark, float):
        return "a:" + _fmt_real(mark)
    encode = getattr(mark, "encode", None)
    if encode is None:
        raise TypeError(f"cannot serialize mark {mark!r}")
    return "c:" + encode()


def decode_mark(text: str):
    if text.startswith("a:"):
        return float(text[2:])
    if text.startswith("c:"):
        from .contours import ContourShape

        return ContourShape.decode(text[2:])
    return text


def write_configurations(fp, records, delimiter: str = ",") -> None:
    """Write ``(replica, eps, config)`` records, one row per configuration entry.

    Lattice coordinates are written as exact integers and real coordinates with
    17 significant digits. Empty configurations produce a row with empty
    coordinates so the replica still appears in the file.
    """
    writer = csv.writer(fp, delimiter=delimiter, lineterminator="\n")
    writer.writerow(FIELDS)
    for replica, eps, config in records:
        eps_text = "" if eps is None else _fmt_real(eps)
        if config.is_empty():
            writer.writerow([replica, eps_text, "", "", 0])
            continue
        for p, m in config.entries:
            coords = " ".join(_fmt_coord(v) for v in p.location)
            writer.writerow([replica, eps_text, coords, encode_mark(p.mark), m])


def read_configurations(fp, delimiter: str = ",") -> list:
    """Inverse of :func:`write_configurations`; returns ``(replica, eps, config)``."""
    if isinstance(fp, str):
        fp = io.StringIO(fp)
    reader = csv.DictReader(fp, delimiter=delimiter)
    grouped: dict[tuple, dict] = {}
    order = []
    for row in reader:
        replica = int(row["replica"])
        eps = float(row["eps"]) if row["eps"] else None
        key = (replica, eps)
        if key not in grouped:
            grouped[key] = {}
            order.append(key)
        if int(row["multiplicity"]) == 0:
            continue
        loc = tuple(_parse_coord(t) for t in row["coords"].split())
        p = Particle(loc, decode_mark(row["mark"]))
        grouped[key][p] = grouped[key].get(p, 0) + int(row["multiplicity"])
    return [(r, e, ParticleConfiguration(grouped[(r, e)], check=False)) for r, e in order]
