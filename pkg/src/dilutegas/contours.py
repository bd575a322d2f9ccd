"""Peierls contours on the dual of Z^2.

Dual sites are integer pairs (i, j) standing for the point (i + 1/2, j + 1/2).
An edge joins two dual sites at unit distance and is stored as an ordered pair
``(a, b)`` with ``a < b``. A contour is a nonempty connected edge set in which
every vertex has even degree; two contours are compatible when they share no
vertex. A rooted shape is a contour translated so that its lexicographically
smallest vertex (first coordinate, then second) sits at the origin.
"""
from __future__ import annotations

import json
import os
from collections import defaultdict
from dataclasses import dataclass, field

from .errors import CatalogTooLarge, NotRealizable

__all__ = [
    "ContourShape",
    "ContourCatalog",
    "ContourSet",
    "edge",
    "is_contour",
    "normalize",
    "components",
    "enumerate_contours",
    "enumerate_contours_by_regions",
    "confined_contours",
    "spins_to_contours",
    "contours_to_spins",
    "load_or_build_catalog",
]

CATALOG_VERSION = 1
DEFAULT_STATE_LIMIT = 20_000_000
_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))


def edge(a: tuple, b: tuple) -> tuple:
    return (a, b) if a < b else (b, a)


def _vertices(edges) -> set:
    out = set()
    for a, b in edges:
        out.add(a)
        out.add(b)
    return out


def _degrees(edges) -> dict:
    deg: dict = defaultdict(int)
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    return deg


def components(edges) -> list[frozenset]:
    """Split an edge set into classes of edges linked through shared vertices."""
    by_vertex = defaultdict(list)
    for e in edges:
        by_vertex[e[0]].append(e)
        by_vertex[e[1]].append(e)
    seen = set()
    out = []
    for start in sorted(edges):
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen.add(start)
        while stack:
            e = stack.pop()
            comp.append(e)
            for v in e:
                for f in by_vertex[v]:
                    if f not in seen:
                        seen.add(f)
                        stack.append(f)
        out.append(frozenset(comp))
    return out


def is_contour(edges) -> bool:
    """Nonempty, connected, every vertex of even degree, unit edges only."""
    edges = frozenset(edges)
    if not edges:
        return False
    for a, b in edges:
        if not (a < b and abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1):
            return False
    if any(d % 2 for d in _degrees(edges).values()):
        return False
    return len(components(edges)) == 1


class ContourShape:
    """A rooted contour: an edge set whose smallest vertex is the origin."""

    __slots__ = ("edges", "vertices", "length", "_hash", "_key")

    def __init__(self, edges):
        edges = frozenset(edges)
        verts = frozenset(_vertices(edges))
        if verts and min(verts) != (0, 0):
            raise ValueError("shape is not rooted at the origin")
        self.edges = edges
        self.vertices = verts
        self.length = len(edges)
        self._key = tuple(sorted(edges))
        self._hash = hash(self._key)

    def sort_key(self):
        return (self.length, self._key)

    def at(self, root: tuple) -> frozenset:
        """Absolute edge set of this shape rooted at ``root``."""
        rx, ry = root
        return frozenset(((a[0] + rx, a[1] + ry), (b[0] + rx, b[1] + ry)) for a, b in self.edges)

    def vertices_at(self, root: tuple) -> frozenset:
        rx, ry = root
        return frozenset((v[0] + rx, v[1] + ry) for v in self.vertices)

    def encode(self) -> str:
        parts = []
        for a, b in self._key:
            kind = "h" if a[1] == b[1] else "v"
            parts.append(f"{kind}{a[0]}_{a[1]}")
        return ".".join(parts)

    @classmethod
    def decode(cls, text: str) -> "ContourShape":
        edges = []
        for part in text.split("."):
            kind, rest = part[0], part[1:]
            i, j = (int(t) for t in rest.split("_"))
            b = (i + 1, j) if kind == "h" else (i, j + 1)
            edges.append(((i, j), b))
        return cls(edges)

    def __eq__(self, other):
        return isinstance(other, ContourShape) and self._key == other._key

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"ContourShape(len={self.length}, {self.encode()})"


def normalize(edges) -> tuple[tuple, ContourShape]:
    """Return ``(root, shape)`` for an absolute contour edge set."""
    edges = frozenset(edges)
    root = min(_vertices(edges))
    rx, ry = root
    shifted = [((a[0] - rx, a[1] - ry), (b[0] - rx, b[1] - ry)) for a, b in edges]
    return root, ContourShape(shifted)


@dataclass
class ContourCatalog:
    """All rooted shapes with at most ``lmax`` edges, grouped by length."""

    lmax: int
    by_length: dict = field(default_factory=dict)

    @property
    def counts(self) -> dict:
        return {l: len(self.by_length.get(l, ())) for l in range(1, self.lmax + 1)}

    def shapes(self):
        for l in sorted(self.by_length):
            yield from self.by_length[l]

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": CATALOG_VERSION,
                "lmax": self.lmax,
                "shapes": {str(l): [s.encode() for s in v] for l, v in sorted(self.by_length.items())},
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ContourCatalog":
        data = json.loads(text)
        if data.get("version") != CATALOG_VERSION:
            raise ValueError("catalog cache version mismatch")
        by_length = {int(l): [ContourShape.decode(s) for s in v] for l, v in data["shapes"].items()}
        return cls(int(data["lmax"]), by_length)


def _allowed(v) -> bool:
    # vertices of a shape rooted at the origin are lexicographically >= (0, 0)
    return v[0] > 0 or (v[0] == 0 and v[1] >= 0)


def enumerate_contours(lmax: int, state_limit: int = DEFAULT_STATE_LIMIT) -> ContourCatalog:
    """Exhaustive edge-growth enumeration of rooted contours with at most ``lmax`` edges.

    Connected edge sets are grown from the origin. While some vertex has odd
    degree, the search only extends at the smallest odd vertex (any completion
    must use one of its free edges); once all degrees are even, the set is
    recorded and every adjacent edge is tried. Visited sets are deduplicated.
    """
    if lmax < 4 or lmax % 2:
        raise ValueError("lmax must be an even integer >= 4")
    index: dict = {}

    def bit(e):
        b = index.get(e)
        if b is None:
            b = index[e] = len(index)
        return b

    found: dict[int, list] = defaultdict(list)
    seen: set[int] = set()
    origin = (0, 0)
    stack = []
    for step in ((1, 0), (0, 1)):
        e = edge(origin, (step[0], step[1]))
        deg = {origin: 1, e[1]: 1}
        stack.append((1 << bit(e), frozenset([e]), deg))
    while stack:
        mask, edges, deg = stack.pop()
        if mask in seen:
            continue
        seen.add(mask)
        if len(seen) > state_limit:
            raise CatalogTooLarge(f"edge-growth search exceeded {state_limit} states")
        odd = sorted(v for v, d in deg.items() if d % 2)
        n = len(edges)
        if n + len(odd) // 2 > lmax:
            continue
        if not odd:
            found[n].append(ContourShape(edges))
            if n + 2 > lmax:
                continue
            pivots = sorted(deg)
        else:
            pivots = [odd[0]]
        for v in pivots:
            for dx, dy in _STEPS:
                w = (v[0] + dx, v[1] + dy)
                if not _allowed(w):
                    continue
                e = edge(v, w)
                if e in edges:
                    continue
                b = bit(e)
                nmask = mask | (1 << b)
                if nmask in seen:
                    continue
                ndeg = dict(deg)
                ndeg[v] = ndeg.get(v, 0) + 1
                ndeg[w] = ndeg.get(w, 0) + 1
                stack.append((nmask, edges | {e}, ndeg))
    by_length = {l: sorted(set(v)) for l, v in found.items()}
    return ContourCatalog(lmax, by_length)


def _face_edges(x: int, y: int) -> list:
    """Dual edges bounding the primal site (x, y)."""
    a, b, c, d = (x - 1, y - 1), (x, y - 1), (x - 1, y), (x, y)
    return [edge(a, b), edge(c, d), edge(a, c), edge(b, d)]


def _boundary(faces) -> frozenset:
    out: set = set()
    for f in faces:
        for e in _face_edges(*f):
            out ^= {e}
    return frozenset(out)


def enumerate_contours_by_regions(lmax: int) -> ContourCatalog:
    """Independent enumeration: every contour is the boundary of a unique finite face set.

    For each bounding box of w x h faces with 2(w + h) <= lmax, all face subsets
    touching the four sides are tried; connected boundaries of length at most
    lmax are kept after rooting.
    """
    if lmax < 4 or lmax % 2:
        raise ValueError("lmax must be an even integer >= 4")
    shapes: set = set()
    half = lmax // 2
    for w in range(1, half):
        for h in range(1, half - w + 1):
            cells = [(x, y) for x in range(w) for y in range(h)]
            if len(cells) > 24:
                raise CatalogTooLarge("region enumeration box too large")
            for mask in range(1, 1 << len(cells)):
                faces = [cells[i] for i in range(len(cells)) if mask >> i & 1]
                xs = {f[0] for f in faces}
                ys = {f[1] for f in faces}
                if min(xs) != 0 or max(xs) != w - 1 or min(ys) != 0 or max(ys) != h - 1:
                    continue
                bnd = _boundary(faces)
                if len(bnd) > lmax or len(components(bnd)) != 1:
                    continue
                shapes.add(normalize(bnd)[1])
    by_length: dict = defaultdict(list)
    for s in shapes:
        by_length[s.length].append(s)
    return ContourCatalog(lmax, {l: sorted(v) for l, v in by_length.items()})


def confined_contours(n: int) -> dict:
    """All contours with every vertex in the dual square of an n x n spin block.

    Returns root -> sorted list of shapes. Even edge sets inside the block are
    exactly the boundaries of face subsets of the block, so the connected ones
    are collected from all 2^(n*n) subsets.
    """
    if n * n > 20:
        raise CatalogTooLarge("confined catalog limited to blocks of at most 20 sites")
    cells = [(x, y) for x in range(n) for y in range(n)]
    found: set = set()
    for mask in range(1, 1 << len(cells)):
        faces = [cells[i] for i in range(len(cells)) if mask >> i & 1]
        bnd = _boundary(faces)
        for comp in components(bnd):
            found.add(comp)
    by_root: dict = defaultdict(list)
    for comp in found:
        root, shape = normalize(comp)
        by_root[root].append(shape)
    return {r: sorted(v) for r, v in sorted(by_root.items())}


def load_or_build_catalog(lmax: int, cache_dir: str | None = None) -> ContourCatalog:
    """Catalog for ``lmax``, read from or written to a versioned JSON cache when a directory is given."""
    if cache_dir is None:
        return enumerate_contours(lmax)
    path = os.path.join(cache_dir, f"contours_v{CATALOG_VERSION}_l{lmax}.json")
    if os.path.exists(path):
        with open(path) as fh:
            return ContourCatalog.from_json(fh.read())
    cat = enumerate_contours(lmax)
    os.makedirs(cache_dir, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(cat.to_json())
    return cat


# ---------------------------------------------------------------------------
# Spin configurations


@dataclass(frozen=True)
class ContourSet:
    """Contours of a spin configuration on the n x n block {0..n-1}^2."""

    contours: tuple
    n: int

    def total_length(self) -> int:
        return sum(len(c) for c in self.contours)


def _spin(sigma, n, x, y) -> int:
    if 0 <= x < n and 0 <= y < n:
        return sigma[x][y]
    return 1


def spins_to_contours(sigma, n: int | None = None) -> ContourSet:
    """Dual edges separating disagreeing neighbours, split into contours.

    ``sigma[x][y]`` is +1 or -1 for the block sites; every site outside the
    block is +1.
    """
    n = len(sigma) if n is None else n
    edges = []
    for x in range(-1, n):
        for y in range(-1, n + 1):
            if _spin(sigma, n, x, y) != _spin(sigma, n, x + 1, y):
                edges.append(edge((x, y - 1), (x, y)))
    for x in range(-1, n + 1):
        for y in range(-1, n):
            if _spin(sigma, n, x, y) != _spin(sigma, n, x, y + 1):
                edges.append(edge((x - 1, y), (x, y)))
    comps = sorted(components(edges), key=lambda c: sorted(c))
    return ContourSet(tuple(comps), n)


def contours_to_spins(contour_set: ContourSet | list, n: int | None = None) -> list:
    """Unique + boundary spin configuration whose contours are the given ones.

    A site is flipped when a horizontal ray from it to the right crosses the
    contours an odd number of times.
    """
    if isinstance(contour_set, ContourSet):
        contours, n = [frozenset(c) for c in contour_set.contours], contour_set.n
    else:
        contours = [frozenset(c) for c in contour_set]
    if n is None:
        raise ValueError("block size required")
    seen_vertices: set = set()
    for c in contours:
        if not is_contour(c):
            raise NotRealizable("edge set is not a connected closed curve")
        verts = _vertices(c)
        if verts & seen_vertices:
            raise NotRealizable("contours share a vertex")
        if any(not (-1 <= v[0] <= n - 1 and -1 <= v[1] <= n - 1) for v in verts):
            raise NotRealizable("contour leaves the dual square of the block")
        seen_vertices |= verts
    all_edges = set().union(*contours) if contours else set()
    sigma = [[1] * n for _ in range(n)]
    for x in range(n):
        for y in range(n):
            crossings = sum(1 for xp in range(x, n) if edge((xp, y - 1), (xp, y)) in all_edges)
            sigma[x][y] = -1 if crossings % 2 else 1
    back = spins_to_contours(sigma, n)
    if set(back.contours) != set(contours):
        raise NotRealizable("contours are not the boundary of any spin configuration")
    return sigma
