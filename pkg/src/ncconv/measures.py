"""Probability measures on the real line, the half-line and the unit circle.

Atomic measures are the exactly computable input class.  Density measures
are produced by Stieltjes inversion and carry an optional atomic part.
Unit-circle atoms are stored as angles in ``[0, 2*pi)``.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, WeightSumError

MERGE_TOL = 1e-12
WEIGHT_TOL = 1e-12
NORMALIZE_TOL = 1e-9
DENSITY_MASS_TOL = 1e-6
TWO_PI = 2.0 * math.pi


class Domain(enum.Enum):
    REAL = "real"
    POSITIVE = "positive"
    CIRCLE = "circle"

    @classmethod
    def parse(cls, name):
        if isinstance(name, Domain):
            return name
        aliases = {"r": "real", "real": "real", "positive": "positive",
                   "r+": "positive", "pos": "positive", "circle": "circle",
                   "t": "circle"}
        try:
            return cls(aliases[str(name).lower()])
        except KeyError:
            raise DomainError(f"unknown domain {name!r}") from None


def _wrap_angle(theta):
    t = math.fmod(float(theta), TWO_PI)
    if t < 0:
        t += TWO_PI
    if t >= TWO_PI:
        t = 0.0
    return t + 0.0  # normalizes -0.0


def _check_position(domain, x):
    if not math.isfinite(x):
        raise DomainError(f"non-finite atom position {x!r}")
    if domain is Domain.POSITIVE and x < 0:
        raise DomainError(f"atom at {x!r} is not on the positive half-line")
    if domain is Domain.CIRCLE and not 0.0 <= x < TWO_PI:
        raise DomainError(f"circle atom angle {x!r} not in [0, 2pi)")


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite convex combination of Dirac masses.

    ``positions`` are sorted increasingly; on the circle they are angles.
    Use :func:`make_atomic` to build one from unsorted or unnormalized data.
    """

    domain: Domain
    positions: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.positions) != len(self.weights) or not self.positions:
            raise ValueError("positions and weights must be non-empty and of equal length")
        for x in self.positions:
            _check_position(self.domain, x)
        if any(not (w > 0) for w in self.weights):
            raise WeightSumError("atom weights must be strictly positive")
        if abs(math.fsum(self.weights) - 1.0) > WEIGHT_TOL:
            raise WeightSumError(f"weights sum to {math.fsum(self.weights)!r}")
        if any(b - a <= MERGE_TOL for a, b in zip(self.positions, self.positions[1:])):
            raise DomainError("atom positions must be sorted and separated")

    @property
    def x(self):
        return np.array(self.positions, dtype=float)

    @property
    def w(self):
        return np.array(self.weights, dtype=float)

    @property
    def points(self):
        """Atom locations as complex numbers (``exp(i*theta)`` on the circle)."""
        if self.domain is Domain.CIRCLE:
            return np.exp(1j * self.x)
        return self.x.astype(complex)

    def __len__(self):
        return len(self.positions)

    def __iter__(self):
        return iter(zip(self.positions, self.weights))

    def is_dirac(self):
        return len(self.positions) == 1

    def __repr__(self):
        body = " + ".join(f"{w:.6g}*d({x:.6g})" for x, w in self)
        return f"AtomicMeasure<{self.domain.value}>({body})"


@dataclass(frozen=True, eq=False)
class DensityMeasure:
    """Tabulated density on a grid plus an optional atomic part.

    ``atom_positions``/``atom_weights`` hold the atomic part with absolute
    masses, so the total mass is ``trapezoid(density, grid) + sum(atom_weights)``.  ``mass_tol=None``
    skips the unit-mass check (inversion on a truncated grid).
    """

    domain: Domain
    grid: np.ndarray
    density: np.ndarray
    atom_positions: tuple = ()
    atom_weights: tuple = ()
    mass_tol: float | None = field(default=DENSITY_MASS_TOL, repr=False)

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        dens = np.array(self.density, dtype=float)
        if grid.ndim != 1 or grid.shape != dens.shape or grid.size < 2:
            raise ValueError("grid and density must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(dens < 0) or not np.all(np.isfinite(dens)):
            raise ValueError("density must be finite and nonnegative")
        for x in self.atom_positions:
            _check_position(self.domain, x)
        grid.flags.writeable = False
        dens.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "atom_positions", tuple(float(x) for x in self.atom_positions))
        object.__setattr__(self, "atom_weights", tuple(float(w) for w in self.atom_weights))
        if self.mass_tol is not None and abs(self.total_mass() - 1.0) > self.mass_tol:
            raise WeightSumError(f"density mass {self.total_mass()!r} differs from 1")

    def continuous_mass(self):
        return float(np.trapezoid(self.density, self.grid))

    def total_mass(self):
        return self.continuous_mass() + math.fsum(self.atom_weights)


Measure = AtomicMeasure | DensityMeasure


def make_atomic(domain, pairs, normalize=True):
    """Build a validated :class:`AtomicMeasure` from ``(position, weight)`` pairs.

    Weights within ``1e-9`` of summing to one are rescaled; with
    ``normalize=False`` any deviation beyond ``1e-9`` raises.  Atoms closer
    than ``1e-12`` are merged and their weights added.
    """
    domain = Domain.parse(domain)
    pts = []
    for x, w in pairs:
        x = float(x)
        w = float(w)
        if not w > 0:
            raise WeightSumError(f"weight {w!r} is not strictly positive")
        if domain is Domain.CIRCLE:
            if not math.isfinite(x):
                raise DomainError(f"non-finite angle {x!r}")
            x = _wrap_angle(x)
        _check_position(domain, x)
        pts.append((x, w))
    if not pts:
        raise ValueError("an atomic measure needs at least one atom")
    total = math.fsum(w for _, w in pts)
    if abs(total - 1.0) > NORMALIZE_TOL:
        if not normalize:
            raise WeightSumError(f"weights sum to {total!r}")
        if total <= 0:
            raise WeightSumError("weights sum to zero")
    pts = [(x, w / total) for x, w in pts]
    pts.sort()

    merged = []
    for x, w in pts:
        if merged and x - merged[-1][0] <= MERGE_TOL:
            x0, w0 = merged[-1]
            merged[-1] = ((x0 * w0 + x * w) / (w0 + w), w0 + w)
        else:
            merged.append((x, w))
    if domain is Domain.CIRCLE and len(merged) > 1:
        (x0, w0), (x1, w1) = merged[0], merged[-1]
        if x0 + TWO_PI - x1 <= MERGE_TOL:
            merged.pop()
            merged[0] = (x0, w0 + w1)

    # absorb the residual rounding so the stored weights sum to one
    total = math.fsum(w for _, w in merged)
    weights = [w / total for _, w in merged]
    return AtomicMeasure(domain, tuple(x for x, _ in merged), tuple(weights))


def dirac(x, domain=Domain.REAL):
    return make_atomic(domain, [(x, 1.0)])


def bernoulli(p, a=1.0, b=-1.0, domain=Domain.REAL):
    """``p*delta_a + (1-p)*delta_b``."""
    if p >= 1.0:
        return dirac(a, domain)
    if p <= 0.0:
        return dirac(b, domain)
    return make_atomic(domain, [(a, p), (b, 1.0 - p)])


@dataclass(frozen=True)
class Translate:
    x: float


@dataclass(frozen=True)
class Dilate:
    alpha: float


@dataclass(frozen=True)
class Rotate:
    theta: float


def push_map(mu, mapping):
    """Image measure of ``mu`` under a translation, dilation or rotation."""
    if isinstance(mapping, Translate):
        if mu.domain is not Domain.REAL:
            raise DomainError("translation acts on real-line measures only")
        return make_atomic(mu.domain, [(x + mapping.x, w) for x, w in mu])
    if isinstance(mapping, Dilate):
        if mu.domain is not Domain.POSITIVE:
            raise DomainError("dilation acts on half-line measures only")
        if mapping.alpha < 0:
            raise DomainError("dilation factor must be nonnegative")
        return make_atomic(mu.domain, [(mapping.alpha * x, w) for x, w in mu])
    if isinstance(mapping, Rotate):
        if mu.domain is not Domain.CIRCLE:
            raise DomainError("rotation acts on circle measures only")
        return make_atomic(mu.domain, [(x + mapping.theta, w) for x, w in mu])
    raise TypeError(f"unsupported map {mapping!r}")


def mixture(weights, measures):
    """Convex combination of measures sharing one domain."""
    weights = [float(c) for c in weights]
    measures = list(measures)
    if len(weights) != len(measures) or not measures:
        raise ValueError("need one weight per measure")
    if any(c < 0 for c in weights) or abs(math.fsum(weights) - 1.0) > NORMALIZE_TOL:
        raise WeightSumError("mixture weights must be nonnegative and sum to 1")
    domain = measures[0].domain
    if any(m.domain is not domain for m in measures):
        raise DomainError("mixture components live on different domains")

    if all(isinstance(m, AtomicMeasure) for m in measures):
        pairs = [(x, c * w) for c, m in zip(weights, measures) for x, w in m if c * w > 0]
        return make_atomic(domain, pairs)

    grids = [m.grid for m in measures if isinstance(m, DensityMeasure)]
    grid = grids[0]
    if any(g.shape != grid.shape or np.any(g != grid) for g in grids):
        raise ValueError("density components must share a grid")
    dens = np.zeros_like(grid)
    atoms = []
    for c, m in zip(weights, measures):
        if isinstance(m, DensityMeasure):
            dens = dens + c * m.density
            atoms += [(x, c * w) for x, w in zip(m.atom_positions, m.atom_weights)]
        else:
            atoms += [(x, c * w) for x, w in m]
    atoms = [(x, w) for x, w in atoms if w > 0]
    return DensityMeasure(domain, grid, dens, tuple(x for x, _ in atoms),
                          tuple(w for _, w in atoms), mass_tol=None)


def moments(mu, n):
    """First ``n`` moments; on the circle these are ``int exp(i*k*theta)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    ks = np.arange(1, n + 1)
    if isinstance(mu, AtomicMeasure):
        pts, wts = mu.points, mu.w
        return [complex(np.sum(wts * pts ** k)) for k in ks]
    grid = mu.grid
    pts = np.exp(1j * grid) if mu.domain is Domain.CIRCLE else grid.astype(complex)
    apts = np.array(mu.atom_positions, dtype=float)
    if mu.domain is Domain.CIRCLE:
        apts = np.exp(1j * apts)
    awts = np.array(mu.atom_weights, dtype=float)
    out = []
    for k in ks:
        cont = np.trapezoid(mu.density * pts ** k, grid)
        out.append(complex(cont + np.sum(awts * apts.astype(complex) ** k)))
    return out


def atoms_close(mu, nu, tol=1e-9):
    """Whether two atomic measures agree atom by atom to ``tol``."""
    if mu.domain is not nu.domain or len(mu) != len(nu):
        return False
    if mu.domain is Domain.CIRCLE:
        dist = [abs(np.exp(1j * a) - np.exp(1j * b)) for a, b in zip(mu.positions, nu.positions)]
    else:
        dist = [abs(a - b) for a, b in zip(mu.positions, nu.positions)]
    return max(dist) <= tol and max(abs(a - b) for a, b in zip(mu.weights, nu.weights)) <= tol


# -- JSON ---------------------------------------------------------------------

def _num(x):
    return format(float(x), ".17g")


def to_json(mu):
    """Serialize with the ``{"domain", "atoms": [{"x", "w"}]}`` schema."""
    dom = json.dumps(mu.domain.value)
    if isinstance(mu, AtomicMeasure):
        atoms = ", ".join(f'{{"x": {_num(x)}, "w": {_num(w)}}}' for x, w in mu)
        return f'{{"domain": {dom}, "atoms": [{atoms}]}}'
    atoms = ", ".join(f'{{"x": {_num(x)}, "w": {_num(w)}}}'
                      for x, w in zip(mu.atom_positions, mu.atom_weights))
    grid = ", ".join(_num(x) for x in mu.grid)
    dens = ", ".join(_num(x) for x in mu.density)
    return (f'{{"domain": {dom}, "grid": [{grid}], "density": [{dens}], '
            f'"atoms": [{atoms}]}}')


def from_json(text):
    data = json.loads(text) if isinstance(text, str) else text
    domain = Domain.parse(data["domain"])
    atoms = [(a["x"], a["w"]) for a in data.get("atoms", [])]
    if "grid" in data:
        return DensityMeasure(domain, np.asarray(data["grid"], float),
                              np.asarray(data["density"], float),
                              tuple(x for x, _ in atoms), tuple(w for _, w in atoms),
                              mass_tol=None)
    try:
        # already canonical: keep the stored values bit for bit
        return AtomicMeasure(domain, tuple(float(x) for x, _ in atoms),
                             tuple(float(w) for _, w in atoms))
    except (ValueError, DomainError):
        return make_atomic(domain, atoms)
