"""Lattice geometry, single-site potentials, disorder laws and finite-volume
alloy-type Hamiltonians.

The finite-volume operator on a box is H = -laplacian + lam * V, where the
lattice Laplacian acts as (laplacian psi)(x) = sum_{|e|_1=1} psi(x+e) (no
diagonal term) and V(x) = sum_k omega_k u(x-k) is the alloy-type potential
built from i.i.d. couplings omega_k filtered through the single-site
profile u.  Restriction to a box is plain deletion of exterior rows and
columns (simple boundary conditions).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

Site = tuple[int, ...]


class CoverageError(ValueError):
    """A potential evaluation touched a coupling index outside the sample region."""


def _as_site(x, d: int) -> Site:
    if isinstance(x, int):
        x = (x,)
    t = tuple(int(c) for c in x)
    if len(t) != d:
        raise ValueError(f"site {x!r} has dimension {len(t)}, expected {d}")
    return t


@dataclass(frozen=True)
class BoxSpec:
    """A cube {k : |k - center|_inf <= L} in Z^d."""

    d: int
    L: int
    center: Site = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.L < 0:
            raise ValueError("half-width must be >= 0")
        center = (0,) * self.d if self.center is None else _as_site(self.center, self.d)
        object.__setattr__(self, "center", center)

    @property
    def site_count(self) -> int:
        return (2 * self.L + 1) ** self.d

    def contains(self, x) -> bool:
        x = _as_site(x, self.d)
        return max(abs(a - b) for a, b in zip(x, self.center)) <= self.L

    def sites(self) -> list[Site]:
        """All sites of the box in lexicographic order (stable across runs)."""
        ranges = [range(c - self.L, c + self.L + 1) for c in self.center]
        return list(itertools.product(*ranges))

    def site_set(self) -> frozenset[Site]:
        return frozenset(self.sites())


def enumerate_sites(box: BoxSpec) -> list[Site]:
    return box.sites()


def neighbors(x: Site) -> list[Site]:
    out = []
    for i in range(len(x)):
        for sgn in (-1, 1):
            out.append(x[:i] + (x[i] + sgn,) + x[i + 1 :])
    return out


def interior_boundary(subset) -> frozenset[Site]:
    """Sites of the set with fewer than 2d nearest neighbours inside the set."""
    s = frozenset(subset)
    if not s:
        return frozenset()
    d = len(next(iter(s)))
    return frozenset(k for k in s if sum(1 for j in neighbors(k) if j in s) < 2 * d)


def exterior_boundary(subset, context=None) -> frozenset[Site]:
    """Sites outside the set with a nearest neighbour inside it.

    When ``context`` is given the result is intersected with it, i.e. the
    boundary is computed within that ambient set; otherwise the ambient set
    is all of Z^d.
    """
    s = frozenset(subset)
    out = set()
    for k in s:
        for j in neighbors(k):
            if j not in s:
                out.add(j)
    if context is not None:
        out &= frozenset(context)
    return frozenset(out)


def boundary(subset, side: str, context=None) -> frozenset[Site]:
    if side == "interior":
        return interior_boundary(subset)
    if side == "exterior":
        return exterior_boundary(subset, context)
    raise ValueError(f"side must be 'interior' or 'exterior', got {side!r}")


def sup_diameter(subset) -> int:
    pts = list(subset)
    if not pts:
        return 0
    arr = np.asarray(pts, dtype=int)
    return int((arr.max(axis=0) - arr.min(axis=0)).max())


@dataclass(frozen=True)
class SingleSitePotential:
    """Finitely supported profile u : Z^d -> R with 0 in supp u.

    ``tail`` optionally records the parameters (c, C, threshold) of an
    exponential envelope |u(k)| <= C * exp(-c |k|_inf) that was truncated at
    the given threshold when the finite table was built.
    """

    d: int
    values: dict[Site, float]
    tail: tuple[float, float, float] | None = None

    def __post_init__(self):
        vals = {}
        for k, v in self.values.items():
            k = _as_site(k, self.d)
            v = float(v)
            if v != 0.0:
                vals[k] = v
        if (0,) * self.d not in vals:
            raise ValueError("single-site potential must satisfy 0 in supp u")
        object.__setattr__(self, "values", vals)

    @classmethod
    def dirac(cls, d: int = 1) -> "SingleSitePotential":
        return cls(d, {(0,) * d: 1.0})

    @classmethod
    def from_pairs(cls, d: int, pairs) -> "SingleSitePotential":
        return cls(d, {_as_site(k, d): float(v) for k, v in pairs})

    @classmethod
    def exponential(cls, d: int, c: float, C: float, threshold: float = 1e-12,
                    sign=None) -> "SingleSitePotential":
        """Truncated exponential profile u(k) = sign(k) * C * exp(-c|k|_inf)."""
        if c <= 0 or C <= 0:
            raise ValueError("tail parameters must be positive")
        radius = max(0, math.ceil(math.log(C / threshold) / c))
        vals = {}
        for k in itertools.product(range(-radius, radius + 1), repeat=d):
            amp = C * math.exp(-c * max(abs(q) for q in k)) if k != (0,) * d else C
            if amp >= threshold:
                sgn = 1.0 if sign is None else float(sign(k))
                vals[k] = sgn * amp
        return cls(d, vals, tail=(c, C, threshold))

    def __call__(self, k) -> float:
        return self.values.get(_as_site(k, self.d), 0.0)

    @property
    def support(self) -> frozenset[Site]:
        return frozenset(self.values)

    @property
    def rank(self) -> int:
        return len(self.values)

    @property
    def total(self) -> float:
        """ubar = sum_k u(k)."""
        return float(sum(self.values.values()))

    @property
    def abs_sum(self) -> float:
        return float(sum(abs(v) for v in self.values.values()))

    @property
    def diameter(self) -> int:
        return sup_diameter(self.support)

    @property
    def boundary_positive(self) -> bool:
        """True iff u(k) > 0 on the interior boundary of its support."""
        return all(self.values[k] > 0 for k in interior_boundary(self.support))

    def translated_support(self, b) -> frozenset[Site]:
        """supp u shifted by b."""
        b = _as_site(b, self.d)
        return frozenset(tuple(a + c for a, c in zip(k, b)) for k in self.support)


def translate_support(u: SingleSitePotential, b) -> frozenset[Site]:
    return u.translated_support(b)


@dataclass(frozen=True)
class DisorderSpec:
    """Law of a single coupling: a bounded density on a bounded interval.

    ``kind`` is either "uniform" (constant density on [a, b]) or "piecewise"
    (continuous piecewise-linear density through the (nodes, density) table).
    Sampling always goes through the inverse CDF, with the uniform law as the
    trivial special case.
    """

    kind: str
    a: float
    b: float
    nodes: tuple[float, ...] = ()
    density: tuple[float, ...] = ()
    _cdf: tuple[float, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.a >= self.b:
            raise ValueError("support bounds must satisfy a < b")
        if self.kind == "uniform":
            h = 1.0 / (self.b - self.a)
            object.__setattr__(self, "nodes", (float(self.a), float(self.b)))
            object.__setattr__(self, "density", (h, h))
        elif self.kind == "piecewise":
            xs = tuple(float(x) for x in self.nodes)
            ys = tuple(float(y) for y in self.density)
            if len(xs) < 2 or len(xs) != len(ys):
                raise ValueError("piecewise density needs matching nodes/density tables")
            if any(x2 <= x1 for x1, x2 in zip(xs, xs[1:])):
                raise ValueError("density nodes must be strictly increasing")
            if xs[0] != self.a or xs[-1] != self.b:
                raise ValueError("density table must span [a, b]")
            if any(y < 0 for y in ys):
                raise ValueError("density must be nonnegative")
            mass = float(np.trapezoid(ys, xs))
            if abs(mass - 1.0) > 1e-12:
                raise ValueError(f"density must integrate to 1, got {mass!r}")
            object.__setattr__(self, "nodes", xs)
            object.__setattr__(self, "density", ys)
        else:
            raise ValueError(f"unknown disorder kind {self.kind!r}")
        xs, ys = np.asarray(self.nodes), np.asarray(self.density)
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs))))
        cdf[-1] = 1.0
        object.__setattr__(self, "_cdf", tuple(cdf))

    @classmethod
    def uniform(cls, a: float, b: float) -> "DisorderSpec":
        return cls("uniform", float(a), float(b))

    @classmethod
    def piecewise_linear(cls, nodes, density) -> "DisorderSpec":
        return cls("piecewise", float(nodes[0]), float(nodes[-1]),
                   tuple(nodes), tuple(density))

    @property
    def density_sup(self) -> float:
        return max(self.density)

    @property
    def total_variation(self) -> float:
        """Total variation of the density on R (end jumps plus interior variation)."""
        ys = self.density
        interior = sum(abs(y2 - y1) for y1, y2 in zip(ys, ys[1:]))
        return abs(ys[0]) + interior + abs(ys[-1])

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.nodes, self.density, left=0.0, right=0.0)
        return np.where((x < self.a) | (x > self.b), 0.0, out)

    def ppf(self, q):
        """Inverse CDF; exact on each linear density segment."""
        q = np.asarray(q, dtype=float)
        xs = np.asarray(self.nodes)
        ys = np.asarray(self.density)
        cdf = np.asarray(self._cdf)
        idx = np.clip(np.searchsorted(cdf, q, side="right") - 1, 0, len(xs) - 2)
        x0, x1 = xs[idx], xs[idx + 1]
        y0, y1 = ys[idx], ys[idx + 1]
        c0 = cdf[idx]
        t = q - c0
        slope = (y1 - y0) / (x1 - x0)
        # Solve  y0*dx + slope*dx^2/2 = t  for dx in [0, x1-x0].
        with np.errstate(invalid="ignore", divide="ignore"):
            disc = np.maximum(y0 * y0 + 2.0 * slope * t, 0.0)
            dx_quad = (np.sqrt(disc) - y0) / np.where(slope == 0.0, 1.0, slope)
            dx_lin = t / np.where(y0 == 0.0, 1.0, y0)
        dx = np.where(np.abs(slope) > 1e-300, dx_quad, dx_lin)
        return np.clip(x0 + dx, self.a, self.b)

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        return self.ppf(rng.random(size))


@dataclass(frozen=True)
class DisorderSample:
    """One realization of the couplings on a finite index region."""

    region: frozenset[Site]
    couplings: dict[Site, float]

    def __post_init__(self):
        region = frozenset(self.region)
        if set(self.couplings) != region:
            raise ValueError("couplings must be defined exactly on the region")
        object.__setattr__(self, "region", region)

    def value(self, k: Site) -> float:
        try:
            return self.couplings[k]
        except KeyError:
            raise CoverageError(f"coupling index {k} not covered by the sample") from None

    def scaled(self, t: float) -> "DisorderSample":
        return DisorderSample(self.region, {k: t * v for k, v in self.couplings.items()})

    def replaced(self, updates: dict[Site, float]) -> "DisorderSample":
        couplings = dict(self.couplings)
        for k, v in updates.items():
            if k not in couplings:
                raise CoverageError(f"cannot replace coupling at uncovered index {k}")
            couplings[k] = float(v)
        return DisorderSample(self.region, couplings)

    @property
    def sup_abs(self) -> float:
        return max((abs(v) for v in self.couplings.values()), default=0.0)


def required_region(sites, u: SingleSitePotential) -> frozenset[Site]:
    """All coupling indices k with (supp u + k) meeting the given site set.

    u(x - k) != 0 requires x - k in supp u, i.e. k = x - off for an offset in
    the support.
    """
    out = set()
    for x in sites:
        for off in u.support:
            out.add(tuple(a - b for a, b in zip(x, off)))
    return frozenset(out)


def sample_disorder(spec: DisorderSpec, region, rng: np.random.Generator) -> DisorderSample:
    """Independent inverse-CDF draws, one per region site in lexicographic order."""
    sites = sorted(frozenset(region))
    draws = spec.draw(rng, len(sites))
    return DisorderSample(frozenset(sites), dict(zip(sites, map(float, draws))))


def potential_value(sample: DisorderSample, u: SingleSitePotential, x) -> float:
    """V(x) = sum_k omega_k u(x-k); every contributing index must be covered."""
    x = _as_site(x, u.d)
    total = 0.0
    for off, uval in u.values.items():
        k = tuple(a - b for a, b in zip(x, off))
        total += sample.value(k) * uval
    return total


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Dense real symmetric matrix of H restricted to an explicit site list."""

    sites: tuple[Site, ...]
    matrix: np.ndarray
    lam: float
    box: BoxSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        m = np.asarray(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return len(self.sites)

    def index_of(self, x) -> int:
        try:
            return self.sites.index(tuple(x) if not isinstance(x, int) else (x,))
        except ValueError:
            raise ValueError(f"site {x} not in this restriction") from None

    @property
    def norm_bound(self) -> float:
        """Row-sum (Gershgorin-style) upper bound on the operator norm."""
        return float(np.abs(self.matrix).sum(axis=1).max()) if self.n else 0.0


def hamiltonian_on_sites(sites, u: SingleSitePotential, sample: DisorderSample,
                         lam: float, box: BoxSpec | None = None) -> HamiltonianMatrix:
    """Assemble P_S H P_S* on an arbitrary finite site set S (sorted order)."""
    if lam <= 0:
        raise ValueError("disorder strength must be positive")
    site_list = sorted(frozenset(tuple(s) for s in sites))
    index = {s: i for i, s in enumerate(site_list)}
    n = len(site_list)
    m = np.zeros((n, n))
    for s, i in index.items():
        m[i, i] = lam * potential_value(sample, u, s)
        for nb in neighbors(s):
            j = index.get(nb)
            if j is not None:
                m[i, j] = -1.0
    return HamiltonianMatrix(tuple(site_list), m, float(lam), box)


def assemble_hamiltonian(box: BoxSpec, u: SingleSitePotential,
                         sample: DisorderSample, lam: float) -> HamiltonianMatrix:
    if u.d != box.d:
        raise ValueError("potential and box dimensions disagree")
    return hamiltonian_on_sites(box.sites(), u, sample, lam, box)
