"""Analytic transforms of measures and their inversion.

For a measure ``mu`` the Cauchy transform is ``G(z) = int 1/(z-x) dmu(x)``,
``F = 1/G``, ``psi(z) = int xz/(1-xz) dmu(x)``, ``K = psi/(1+psi)`` and, on
the half-line, ``W(z) = int sqrt(x)/(z-x) dmu(x)``.  The identities

    G(w) = (1 + psi(1/w)) / w,        K(z) = 1 - z F(1/z)

tie the additive and the multiplicative pictures together and let a
:class:`TransformHandle` built from any one of ``G``, ``F`` or ``K`` answer
for all of them.  Every evaluator is vectorized over numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, PoleError
from .measures import AtomicMeasure, DensityMeasure, Domain, TWO_PI

POLE_TOL = 1e-13
DEFAULT_SEED = 0xC0FFEE
DEFAULT_LADDER = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
ATOM_THRESHOLD = 1e-3
DISAGREEMENT_TOL = 1e-4
DISAGREEMENT_FRACTION = 0.05


def _as_complex(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _out(values, scalar):
    values = np.asarray(values, dtype=complex)
    return complex(values.reshape(())) if scalar else values


class TransformHandle:
    """Lazily evaluable transform of a probability measure.

    Build it from one primary function (``G``, ``F`` or ``K``); the others
    are derived.  ``W`` cannot be recovered from ``G`` and is only available
    when supplied.  ``dG`` (derivative of ``G``) is optional and falls back to
    central differences.
    """

    def __init__(self, domain, *, G=None, F=None, K=None, W=None, dG=None,
                 source=None, label=""):
        if G is None and F is None and K is None:
            raise ValueError("a handle needs at least one of G, F, K")
        self.domain = Domain.parse(domain)
        self._G, self._F, self._K, self._W, self._dG = G, F, K, W, dG
        self.source = source
        self.label = label

    def __repr__(self):
        return f"TransformHandle<{self.domain.value}>({self.label or 'anonymous'})"

    # the private evaluators work on complex ndarrays

    def _g(self, z):
        if self._G is not None:
            return self._G(z)
        if self._F is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                return 1.0 / self._F(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / z
            return inv / (1.0 - self._K(inv))

    def _f(self, z):
        if self._F is not None:
            return self._F(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 / self._g(z)

    def _psi(self, z):
        if self._K is not None:
            k = self._K(z)
            with np.errstate(divide="ignore", invalid="ignore"):
                return k / (1.0 - k)
        out = np.zeros_like(z)
        nz = z != 0
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / z[nz]
            out[nz] = self._g(inv) * inv - 1.0
        return out

    def _k(self, z):
        if self._K is not None:
            return self._K(z)
        out = np.zeros_like(z)
        nz = z != 0
        with np.errstate(divide="ignore", invalid="ignore"):
            out[nz] = 1.0 - z[nz] * self._f(1.0 / z[nz])
        return out

    def G(self, z):
        z, s = _as_complex(z)
        return _out(self._g(z), s)

    def F(self, z):
        z, s = _as_complex(z)
        return _out(self._f(z), s)

    def psi(self, z):
        z, s = _as_complex(z)
        return _out(self._psi(z), s)

    def K(self, z):
        z, s = _as_complex(z)
        return _out(self._k(z), s)

    def W(self, z):
        if self.domain is not Domain.POSITIVE:
            raise DomainError("W is defined for half-line measures only")
        if self._W is None:
            raise DomainError(f"{self!r} carries no W transform")
        z, s = _as_complex(z)
        return _out(self._W(z), s)

    def has_W(self):
        return self.domain is Domain.POSITIVE and self._W is not None

    def dG(self, z):
        z, s = _as_complex(z)
        if self._dG is not None:
            return _out(self._dG(z), s)
        h = 1e-6 * (1.0 + np.abs(z))
        return _out((self._g(z + h) - self._g(z - h)) / (2 * h), s)

    def dF(self, z):
        z, s = _as_complex(z)
        g = self._g(z)
        return _out(-self.dG(z) / g ** 2, s)

    def evaluate(self, which, z):
        which = which.upper() if which.lower() != "psi" else "psi"
        try:
            fn = {"G": self.G, "F": self.F, "psi": self.psi, "K": self.K, "W": self.W}[which]
        except KeyError:
            raise ValueError(f"unknown transform {which!r}") from None
        return fn(z)

    def moments(self, n, radius=None, nodes=256):
        """Moments from a contour integral of the transform.

        Real-line and half-line handles integrate ``z**k G(z)`` over a circle
        of ``radius`` enclosing the support; circle handles read the Taylor
        coefficients of ``psi`` on a circle of ``radius`` (default 0.5).
        Nodes are offset by half a step so the real axis is never hit.
        """
        theta = (np.arange(nodes) + 0.5) * TWO_PI / nodes
        ks = np.arange(1, n + 1)
        if self.domain is Domain.CIRCLE:
            r = 0.5 if radius is None else radius
            z = r * np.exp(1j * theta)
            vals = self._psi(z)
            return [complex(np.mean(vals * z ** (-k))) for k in ks]
        if radius is None:
            raise ValueError("radius enclosing the support is required")
        z = radius * np.exp(1j * theta)
        vals = self._g(z)
        # (1/2 pi i) \oint z^k G dz with dz = i z dtheta
        return [complex(np.mean(vals * z ** (k + 1))) for k in ks]


# -- handles for concrete measures -----------------------------------------------

def _pole_check(dist, what="support"):
    if dist.size and np.min(dist) < POLE_TOL:
        raise PoleError(f"evaluation point within {POLE_TOL} of the {what}")


def _atomic_handle(mu):
    pts = mu.points
    wts = mu.w

    def G(z):
        d = z[..., None] - pts
        _pole_check(np.abs(d))
        return np.sum(wts / d, axis=-1)

    def dG(z):
        d = z[..., None] - pts
        _pole_check(np.abs(d))
        return -np.sum(wts / d ** 2, axis=-1)

    def K(z):
        pz = pts * z[..., None]
        d = 1.0 - pz
        nonzero = pts != 0
        _pole_check(np.abs(d[..., nonzero]), "reciprocal support")
        psi = np.sum(wts * pz / d, axis=-1)
        return psi / (1.0 + psi)

    W = None
    if mu.domain is Domain.POSITIVE:
        roots = np.sqrt(mu.x)

        def W(z):
            d = z[..., None] - pts
            _pole_check(np.abs(d))
            return np.sum(wts * roots / d, axis=-1)

    handle = TransformHandle(mu.domain, G=G, K=K, W=W, dG=dG, source=mu, label=repr(mu))
    # psi directly from the atoms keeps the branch structure trivial
    handle._psi = lambda z: _atomic_psi(pts, wts, z)
    return handle


def _atomic_psi(pts, wts, z):
    pz = pts * z[..., None]
    d = 1.0 - pz
    _pole_check(np.abs(d[..., pts != 0]), "reciprocal support")
    return np.sum(wts * pz / d, axis=-1)


def _density_handle(mu):
    grid = mu.grid
    dens = mu.density
    apos = np.array(mu.atom_positions, dtype=float)
    awts = np.array(mu.atom_weights, dtype=float)
    if mu.domain is Domain.CIRCLE:
        gpts = np.exp(1j * grid)
        apts = np.exp(1j * apos)
        # d(theta) measure on the circle
    else:
        gpts = grid.astype(complex)
        apts = apos.astype(complex)

    def _integrate(kernel_grid, kernel_atoms):
        cont = np.trapezoid(dens * kernel_grid, grid, axis=-1)
        return cont + np.sum(awts * kernel_atoms, axis=-1)

    def G(z):
        zz = z[..., None]
        _pole_check(np.abs(zz - apts))
        return _integrate(1.0 / (zz - gpts), 1.0 / (zz - apts))

    def K(z):
        zz = z[..., None]
        psi = _integrate(gpts * zz / (1.0 - gpts * zz), apts * zz / (1.0 - apts * zz))
        return psi / (1.0 + psi)

    W = None
    if mu.domain is Domain.POSITIVE:
        def W(z):
            zz = z[..., None]
            return _integrate(np.sqrt(grid) / (zz - gpts), np.sqrt(apos) / (zz - apts))

    return TransformHandle(mu.domain, G=G, K=K, W=W, source=mu, label="density")


def handle_of(obj):
    """Return a :class:`TransformHandle` for a measure (or pass a handle through)."""
    if isinstance(obj, TransformHandle):
        return obj
    if isinstance(obj, AtomicMeasure):
        return _atomic_handle(obj)
    if isinstance(obj, DensityMeasure):
        return _density_handle(obj)
    raise TypeError(f"cannot build a transform handle from {type(obj).__name__}")


def _two_sided_sqrt(z, a, b):
    # sqrt(z-a)*sqrt(z-b): branch cut on [a, b], behaves like z at infinity
    return np.sqrt(z - a) * np.sqrt(z - b)


def semicircle(mean=0.0, variance=1.0):
    """Closed-form handle of the semicircle law with given mean and variance."""
    m, v = float(mean), float(variance)
    if v <= 0:
        raise DomainError("semicircle variance must be positive")
    r = 2.0 * math.sqrt(v)

    def G(z):
        u = z - m
        return (u - _two_sided_sqrt(u, -r, r)) / (2.0 * v)

    def dG(z):
        u = z - m
        return (1.0 - u / _two_sided_sqrt(u, -r, r)) / (2.0 * v)

    return TransformHandle(Domain.REAL, G=G, dG=dG, label=f"semicircle({m:g},{v:g})")


def arcsine(half_width=2.0):
    """Closed-form handle of the arcsine law on ``[-a, a]``."""
    a = float(half_width)

    def G(z):
        return 1.0 / _two_sided_sqrt(z, -a, a)

    return TransformHandle(Domain.REAL, G=G, label=f"arcsine({a:g})")


def haar_circle():
    """Uniform distribution on the unit circle (``K = 0``)."""
    return TransformHandle(Domain.CIRCLE, K=lambda z: np.zeros_like(z), label="uniform_circle")


# -- transform-level image measures ------------------------------------------------

def translate_handle(h, x):
    h = handle_of(h)
    if h.domain is not Domain.REAL:
        raise DomainError("translation acts on real-line measures only")
    return TransformHandle(Domain.REAL, G=lambda z: h._g(z - x),
                           dG=lambda z: h.dG(z - x), label=f"translate({h.label},{x:g})")


def dilate_handle(h, alpha):
    h = handle_of(h)
    if h.domain is not Domain.POSITIVE:
        raise DomainError("dilation acts on half-line measures only")
    if alpha <= 0:
        raise DomainError("transform-level dilation needs alpha > 0")
    W = None
    if h.has_W():
        W = lambda z: h._W(z / alpha) / math.sqrt(alpha)  # noqa: E731
    return TransformHandle(Domain.POSITIVE, G=lambda z: h._g(z / alpha) / alpha, W=W,
                           label=f"dilate({h.label},{alpha:g})")


def rotate_handle(h, theta):
    h = handle_of(h)
    if h.domain is not Domain.CIRCLE:
        raise DomainError("rotation acts on circle measures only")
    omega = complex(math.cos(theta), math.sin(theta))
    return TransformHandle(Domain.CIRCLE, K=lambda z: h._k(omega * z),
                           label=f"rotate({h.label},{theta:g})")


# -- module-level evaluators ---------------------------------------------------------

def eval_G(mu, z):
    return handle_of(mu).G(z)


def eval_F(mu, z):
    """Reciprocal Cauchy transform; returns ``inf`` where ``G`` vanishes."""
    g = handle_of(mu).G(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        if np.ndim(g) == 0:
            return complex(math.inf) if g == 0 else 1.0 / g
        return np.where(g == 0, complex(math.inf), 1.0 / np.where(g == 0, 1.0, g))


def eval_psi(mu, z):
    return handle_of(mu).psi(z)


def eval_K(mu, z):
    return handle_of(mu).K(z)


def eval_W(mu, z):
    if getattr(mu, "domain", None) is not Domain.POSITIVE:
        raise DomainError("W is defined for half-line measures only")
    return handle_of(mu).W(z)


# -- Richardson extrapolation ---------------------------------------------------------

def richardson(eps, values):
    """Extrapolate ``values(eps)`` to ``eps = 0`` by Neville's scheme.

    ``eps`` must be decreasing.  ``values`` has the ladder on axis 0.  Returns
    ``(estimate, error)`` taken from the entry of the last tableau row whose
    difference to its predecessor is smallest.
    """
    eps = np.asarray(eps, dtype=float)
    vals = np.asarray(values)
    n = len(eps)
    if n == 1:
        return vals[0], np.full(vals.shape[1:], np.inf)
    table = [vals[0]]
    last_row = None
    for i in range(1, n):
        row = [vals[i]]
        for j in range(1, i + 1):
            ratio = eps[i - j] / eps[i]
            row.append(row[j - 1] + (row[j - 1] - table[j - 1]) / (ratio - 1.0))
        table = row
        last_row = row
    cand = np.stack(last_row[1:])
    errs = np.abs(np.diff(np.stack(last_row), axis=0))
    best = np.argmin(errs, axis=0)
    est = np.take_along_axis(cand, best[None], axis=0)[0]
    err = np.take_along_axis(errs, best[None], axis=0)[0]
    return est, err


# -- Stieltjes inversion ---------------------------------------------------------------

def _smoothed(handle, x, eps):
    """Poisson-smoothed density at distance ``eps`` from the boundary."""
    x = np.asarray(x, dtype=float)
    if handle.domain is Domain.CIRCLE:
        r = 1.0 - eps
        return np.real(1.0 + 2.0 * handle._psi(r * np.exp(-1j * x))) / TWO_PI
    return -np.imag(handle._g(x + 1j * eps)) / math.pi


def _atom_score(handle, x, eps):
    # tends to the atom weight at an atom, to 0 elsewhere
    return math.pi * eps * _smoothed(handle, x, eps)


def _atoms_smoothed(domain, pos, wts, x, eps):
    x = np.asarray(x, dtype=float)
    if not len(pos):
        return np.zeros_like(x)
    if domain is Domain.CIRCLE:
        r = 1.0 - eps
        t = x[..., None] - np.asarray(pos)
        kern = (1.0 - r * r) / (1.0 - 2.0 * r * np.cos(t) + r * r)
        return np.sum(np.asarray(wts) * kern, axis=-1) / TWO_PI
    d = x[..., None] - np.asarray(pos)
    return np.sum(np.asarray(wts) * eps / (d * d + eps * eps), axis=-1) / math.pi


def _golden_max(f, a, b, tol):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _local_maxima(vals, threshold):
    idx = []
    n = len(vals)
    for i in range(n):
        left = vals[i - 1] if i > 0 else -np.inf
        right = vals[i + 1] if i < n - 1 else -np.inf
        if vals[i] > threshold and vals[i] >= left and vals[i] > right:
            idx.append(i)
    return idx


def _detect_atoms(handle, grid, ladder):
    """Locate atoms by following peaks of ``pi*eps*density_eps`` down the ladder."""
    spacing = float(np.max(np.diff(grid)))
    eps_det = max(ladder[0], spacing)
    levels = []
    e = eps_det
    while e > ladder[0] * 1.0000001:
        levels.append(e)
        e /= 10.0
    levels += list(ladder)

    score0 = _atom_score(handle, grid, levels[0])
    cands = [float(grid[i]) for i in _local_maxima(score0, ATOM_THRESHOLD)]
    prev = levels[0]
    for eps in levels[1:]:
        refined = []
        for a in cands:
            xs = np.linspace(a - 2 * prev, a + 2 * prev, 41)
            sc = _atom_score(handle, xs, eps)
            step = xs[1] - xs[0]
            for i in _local_maxima(sc, ATOM_THRESHOLD):
                lo, hi = xs[i] - step, xs[i] + step
                pos = _golden_max(lambda t: float(_atom_score(handle, np.array([t]), eps)[0]),
                                  lo, hi, eps * 1e-4)
                if all(abs(pos - r) > 0.5 * eps for r in refined):
                    refined.append(pos)
        cands = refined
        prev = eps
    eps_min = ladder[-1]
    atoms = []
    for a in sorted(cands):
        if _atom_score(handle, np.array([a]), eps_min)[0] <= ATOM_THRESHOLD:
            continue
        vals = np.array([_atom_score(handle, np.array([a]), e)[0] for e in ladder])
        # neighbours and continuous mass enter in integer powers of eps
        w, _ = richardson(np.array(ladder), vals)
        atoms.append((a, float(w)))
    return atoms


def stieltjes_invert(handle, grid, eps_ladder=DEFAULT_LADDER):
    """Recover a measure from its transform by boundary-value extrapolation.

    Atoms are located where ``eps * |Im G(x + i eps)|`` stays above ``1e-3``
    at the smallest ``eps``; their weights are the extrapolated limits.  The
    density is ``-(1/pi) Im G(x + i eps)`` with the atoms' Poisson kernels
    removed, Richardson-extrapolated in ``sqrt(eps)``.  On the circle the same is
    done with ``Re(1 + 2 psi(r e^{-i theta}))/(2 pi)``, ``eps = 1 - r``.

    Raises :class:`ConvergenceError` when successive extrapolants disagree
    by more than ``1e-4`` at more than 5% of the grid.
    """
    handle = handle_of(handle)
    grid = np.asarray(grid, dtype=float)
    ladder = tuple(sorted((float(e) for e in eps_ladder), reverse=True))
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a strictly increasing 1-d array")
    if not ladder or ladder[-1] <= 0:
        raise ValueError("eps ladder must be positive")

    atoms = _detect_atoms(handle, grid, ladder)
    pos = [a for a, _ in atoms]
    wts = [w for _, w in atoms]

    vals = np.stack([
        _smoothed(handle, grid, e) - _atoms_smoothed(handle.domain, pos, wts, grid, e)
        for e in ladder
    ])
    if not np.all(np.isfinite(vals)):
        raise ConvergenceError("transform evaluation produced non-finite values")
    # square-root edges make the expansion run in powers of sqrt(eps)
    dens, err = richardson(np.sqrt(ladder), vals)
    bad = err > DISAGREEMENT_TOL * np.maximum(1.0, np.abs(dens))
    if np.mean(bad) > DISAGREEMENT_FRACTION:
        raise ConvergenceError(
            f"extrapolation disagreement above {DISAGREEMENT_TOL} at "
            f"{int(bad.sum())}/{grid.size} grid points", residual=float(np.max(err)))
    dens = np.clip(dens, 0.0, None)
    if handle.domain is Domain.POSITIVE:
        pos = [max(a, 0.0) for a in pos]
    if handle.domain is Domain.CIRCLE:
        pos = [a % TWO_PI for a in pos]
    wts = [max(w, 0.0) for w in wts]
    return DensityMeasure(handle.domain, grid, dens, tuple(pos), tuple(wts), mass_tol=None)


# -- class membership -------------------------------------------------------------

@dataclass(frozen=True)
class ClassReport:
    cls: str
    witnesses: tuple = field(default=())

    @property
    def passed(self):
        return not self.witnesses

    def worst(self):
        return max((v for _, v in self.witnesses), default=0.0)


def sample_upper_half_plane(n, seed=DEFAULT_SEED):
    rng = np.random.default_rng(seed)
    r = 10.0 ** rng.uniform(-3.0, 3.0, n)
    phi = rng.uniform(0.0, math.pi, n)
    z = r * np.exp(1j * phi)
    return z[z.imag > 0]


def sample_disk(n, seed=DEFAULT_SEED, radius=0.999):
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, n))
    return r * np.exp(1j * rng.uniform(0.0, TWO_PI, n))


def _call(fn, z):
    with np.errstate(all="ignore"):
        return np.asarray(fn(z), dtype=complex)


def class_check(handle, which, samples=200, seed=DEFAULT_SEED, tol=1e-10):
    """Sampled membership test of a transform in class F, S or P.

    ``handle`` may be a measure, a :class:`TransformHandle` or, for S and P,
    a bare callable ``K``.  Passing is evidence; a witness is conclusive up
    to ``tol``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    which = which.upper()
    if callable(handle) and not isinstance(handle, TransformHandle):
        kfun = handle
        ffun = None
    else:
        h = handle_of(handle)
        kfun, ffun = h._k, h._f
    wit = []
    if which == "F":
        if ffun is None:
            raise ValueError("class F needs a handle")
        z = sample_upper_half_plane(samples, seed)
        f = _call(ffun, z)
        defect = z.imag - f.imag
        for zi, d, fi in zip(z, defect, f):
            if not np.isfinite(fi) or d > tol * (1.0 + abs(fi)):
                wit.append((complex(zi), float(d) if np.isfinite(d) else math.inf))
    elif which == "S":
        z = sample_disk(samples, seed)
        k = _call(kfun, z)
        for zi, ki in zip(z, k):
            excess = abs(ki) - 1.0
            if not np.isfinite(ki) or excess > tol:
                wit.append((complex(zi), float(excess) if np.isfinite(excess) else math.inf))
        k0 = _call(kfun, np.zeros(1, dtype=complex))[0]
        if not abs(k0) <= tol:
            wit.append((0j, float(abs(k0))))
    elif which == "P":
        z = sample_upper_half_plane(samples, seed)
        k = _call(kfun, z)
        kc = _call(kfun, np.conj(z))
        if np.all(np.abs(k) <= tol) and np.all(np.abs(kc) <= tol):
            # K = 0 is the transform of delta_0
            return ClassReport(which, ())
        for zi, ki, kci in zip(z, k, kc):
            if not (np.isfinite(ki) and np.isfinite(kci)):
                wit.append((complex(zi), math.inf))
                continue
            arg_k = math.atan2(ki.imag, ki.real)
            arg_z = math.atan2(zi.imag, zi.real)
            low = arg_z - arg_k
            refl = abs(kci - np.conj(ki)) / (1.0 + abs(ki))
            viol = max(low, refl)
            if viol > tol:
                wit.append((complex(zi), float(viol)))
        t = -1e-9
        kt = _call(kfun, np.array([t], dtype=complex))[0]
        if not abs(kt) <= 1e-6:
            wit.append((complex(t), float(abs(kt))))
    else:
        raise ValueError(f"unknown class {which!r}")
    return ClassReport(which, tuple(wit))
