"""Subordination functions of free convolutions and monotone deconvolution.

The free additive convolution ``lambda = mu [+] nu`` is determined by two
self-maps ``Z1, Z2`` of the upper half-plane with

    F_mu(Z1(z)) = F_nu(Z2(z)) = Z1(z) + Z2(z) - z.

``Z1`` is the attracting fixed point of ``w -> z + H_nu(z + H_mu(w))`` with
``H = F - id``.  The multiplicative analogue ``K_mu(Z1) = K_nu(Z2) = Z1 Z2/z``
is solved by iterating ``w -> z h_nu(z h_mu(w))`` with ``h = K/id``.

Plain iteration converges (Denjoy-Wolff) but its contraction rate tends to
one at the boundary, e.g. ``1 - 2 Im z`` for two symmetric Bernoulli laws at
the origin.  After 100 plain steps the solvers therefore switch to Newton
steps on ``phi(w) - w``, accepted only if they stay in the admissible region
and reduce the residual, and fall back to the half-damped step otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, NoSolutionError, PreconditionError
from .measures import AtomicMeasure, Domain, moments
from .transforms import TransformHandle, class_check, handle_of

PLAIN_STEPS = 100
BACKTRACK = 50
CACHE_DIGITS = 15
CIRCLE_RADIUS = 0.95


@dataclass(frozen=True)
class SubordinationPair:
    """Solved subordination values at ``z`` (scalars or arrays of equal shape)."""

    z: complex
    Z1: complex
    Z2: complex
    iterations: int
    residual: float


def _domain_of(obj):
    return getattr(obj, "domain", None)


def _require(obj, domain, what):
    if _domain_of(obj) is not domain:
        raise DomainError(f"{what} must live on the {domain.value} domain")


def _newton_fixed_point(phi, dphi, z, w0, admissible, tol, max_iter):
    """Solve ``phi(w) = w`` pointwise for an array of query points.

    Returns ``(w, iterations, converged)``.  Points are frozen once their
    step falls below ``tol``.
    """
    w = w0.copy()
    iters = np.zeros(z.shape, dtype=int)
    done = np.zeros(z.shape, dtype=bool)
    for k in range(max_iter):
        act = ~done
        if not act.any():
            break
        za, wa = z[act], w[act]
        p = phi(za, wa)
        if k < PLAIN_STEPS:
            wn = p
        else:
            g = p - wa
            with np.errstate(divide="ignore", invalid="ignore"):
                step = -g / (dphi(za, wa) - 1.0)
            wn = 0.5 * (wa + p)
            pending = np.isfinite(step)
            lam = 1.0
            for _ in range(BACKTRACK):
                c = wa + lam * step
                with np.errstate(all="ignore"):
                    ok = pending & admissible(za, c)
                    if ok.any():
                        gc = np.full(c.shape, np.inf, dtype=complex)
                        gc[ok] = phi(za[ok], c[ok]) - c[ok]
                        ok &= np.abs(gc) < np.abs(g)
                wn = np.where(ok, c, wn)
                pending &= ~ok
                if not pending.any():
                    break
                lam *= 0.5
        delta = np.abs(wn - wa)
        w[act] = wn
        iters[act] = k + 1
        newly = np.zeros(z.shape, dtype=bool)
        newly[act] = delta < tol
        done |= newly
    return w, iters, done


def _as_points(z):
    arr = np.asarray(z, dtype=complex)
    return arr.reshape(-1), arr.ndim == 0, arr.shape


def _pack(z, Z1, Z2, iters, residual, scalar, shape):
    if scalar:
        return SubordinationPair(complex(z[0]), complex(Z1[0]), complex(Z2[0]),
                                 int(iters[0]), float(residual[0]))
    return SubordinationPair(z.reshape(shape), Z1.reshape(shape), Z2.reshape(shape),
                             iters.reshape(shape), residual.reshape(shape))


def solve_additive_subordination(mu, nu, z, tol=1e-12, max_iter=500):
    """Subordination functions of ``mu [+] nu`` at ``z`` (scalar or array).

    Points in the lower half-plane are handled by conjugate symmetry.
    Raises :class:`ConvergenceError` if any point fails within ``max_iter``.
    """
    _require(mu, Domain.REAL, "mu")
    _require(nu, Domain.REAL, "nu")
    hm, hn = handle_of(mu), handle_of(nu)
    zf, scalar, shape = _as_points(z)
    if np.any(zf.imag == 0):
        raise DomainError("additive subordination needs z off the real line")
    lower = zf.imag < 0
    zu = np.where(lower, np.conj(zf), zf)

    def phi(zz, w):
        a = zz + hm._f(w) - w
        return zz + hn._f(a) - a

    def dphi(zz, w):
        a = zz + hm._f(w) - w
        return (hn.dF(a) - 1.0) * (hm.dF(w) - 1.0)

    def admissible(zz, c):
        return c.imag >= zz.imag

    w, iters, done = _newton_fixed_point(phi, dphi, zu, zu.copy(), admissible, tol, max_iter)
    Z1 = w
    Z2 = zu + hm._f(Z1) - Z1
    f1 = hm._f(Z1)
    residual = np.maximum(np.abs(f1 - hn._f(Z2)), np.abs(f1 - (Z1 + Z2 - zu)))
    if not done.all():
        bad = np.flatnonzero(~done)
        raise ConvergenceError(
            f"additive subordination did not converge at {len(bad)} point(s), "
            f"e.g. z={complex(zf[bad[0]])}", residual=float(np.max(residual[bad])))
    Z1 = np.where(lower, np.conj(Z1), Z1)
    Z2 = np.where(lower, np.conj(Z2), Z2)
    return _pack(zf, Z1, Z2, iters, residual, scalar, shape)


def _first_moment(obj):
    if isinstance(obj, TransformHandle):
        # K(z) = m1 z + O(z^2)
        h = 1e-4
        return complex(np.mean(obj.K(h * np.exp(2j * np.pi * np.arange(8) / 8))
                               / (h * np.exp(2j * np.pi * np.arange(8) / 8))))
    return complex(moments(obj, 1)[0])


def _is_delta_zero(obj):
    if isinstance(obj, AtomicMeasure):
        return obj.is_dirac() and obj.x[0] == 0.0
    if isinstance(obj, TransformHandle):
        return abs(obj.psi(-1.0 + 0j)) < 1e-15
    return False


def check_multiplicative_preconditions(mu, nu, domain):
    domain = Domain.parse(domain)
    for name, obj in (("mu", mu), ("nu", nu)):
        _require(obj, domain, name)
        if domain is Domain.CIRCLE:
            if abs(_first_moment(obj)) < 1e-12:
                raise PreconditionError(f"{name} has vanishing first moment")
        elif domain is Domain.POSITIVE:
            if _is_delta_zero(obj):
                raise PreconditionError(f"{name} is the point mass at 0")
        else:
            raise DomainError("multiplicative subordination lives on the circle or half-line")


def _k_derivative(h, w):
    step = 1e-7 * (1.0 + np.abs(w))
    return (h._k(w + step) - h._k(w - step)) / (2.0 * step)


def solve_multiplicative_subordination(mu, nu, z, domain, tol=1e-12, max_iter=None):
    """Subordination functions with ``K_mu(Z1) = K_nu(Z2) = Z1 Z2 / z``.

    Circle: ``z`` in the disk; points with ``|z| > 0.95`` need an explicit
    ``max_iter``.  Half-line: ``z`` off the positive half-line.
    """
    domain = Domain.parse(domain)
    check_multiplicative_preconditions(mu, nu, domain)
    hm, hn = handle_of(mu), handle_of(nu)
    zf, scalar, shape = _as_points(z)
    if np.any(zf == 0):
        raise DomainError("z = 0 is excluded")
    if domain is Domain.CIRCLE:
        if np.any(np.abs(zf) >= 1):
            raise DomainError("circle subordination needs |z| < 1")
        if max_iter is None and np.any(np.abs(zf) > CIRCLE_RADIUS):
            raise DomainError(f"|z| > {CIRCLE_RADIUS} requires an explicit max_iter")

        def admissible(zz, c):
            return np.abs(c) < 1.0
    else:
        if np.any((zf.imag == 0) & (zf.real >= 0)):
            raise DomainError("half-line subordination needs z off [0, inf)")

        def admissible(zz, c):
            return (c.imag * zz.imag > 0) | ((zz.imag == 0) & (c.imag == 0) & (c.real < 0))
    max_iter = 500 if max_iter is None else max_iter

    def hfun(h, w):
        return h._k(w) / w

    def phi(zz, w):
        return zz * hfun(hn, zz * hfun(hm, w))

    def dphi(zz, w):
        a = zz * hfun(hm, w)
        dhm = (_k_derivative(hm, w) * w - hm._k(w)) / w ** 2
        dhn = (_k_derivative(hn, a) * a - hn._k(a)) / a ** 2
        return zz * dhn * zz * dhm

    with np.errstate(divide="ignore", invalid="ignore"):
        w, iters, done = _newton_fixed_point(phi, dphi, zf, zf.copy(), admissible, tol, max_iter)
        Z1 = w
        Z2 = zf * hfun(hm, Z1)
        k1 = hm._k(Z1)
        residual = np.maximum(np.abs(k1 - hn._k(Z2)), np.abs(k1 - Z1 * Z2 / zf))
    if not done.all():
        bad = np.flatnonzero(~done)
        raise ConvergenceError(
            f"multiplicative subordination did not converge at {len(bad)} point(s), "
            f"e.g. z={complex(zf[bad[0]])}", residual=float(np.nanmax(residual[bad])))
    return _pack(zf, Z1, Z2, iters, residual, scalar, shape)


class SubordinationCache:
    """Memoized per-point subordination solves for one pair of measures."""

    def __init__(self, solve):
        self._solve = solve
        self._memo = {}

    @staticmethod
    def _key(z):
        return (round(z.real, CACHE_DIGITS), round(z.imag, CACHE_DIGITS))

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        flat = z.reshape(-1)
        keys = [self._key(v) for v in flat]
        missing = [i for i, k in enumerate(keys) if k not in self._memo]
        if missing:
            pair = self._solve(flat[missing])
            for i, a, b in zip(missing, pair.Z1, pair.Z2):
                self._memo[keys[i]] = (complex(a), complex(b))
        Z1 = np.array([self._memo[k][0] for k in keys], dtype=complex).reshape(z.shape)
        Z2 = np.array([self._memo[k][1] for k in keys], dtype=complex).reshape(z.shape)
        return Z1, Z2


def free_additive_handle(mu, nu, tol=1e-12, max_iter=500):
    """Transform handle of ``mu [+] nu`` with ``F = F_mu o Z1``."""
    hm = handle_of(mu)
    cache = SubordinationCache(
        lambda z: solve_additive_subordination(mu, nu, z, tol=tol, max_iter=max_iter))
    handle = TransformHandle(Domain.REAL, F=lambda z: hm._f(cache(z)[0]),
                             label=f"free_add({hm.label},{handle_of(nu).label})")
    handle.subordination = cache
    return handle


def free_multiplicative_handle(mu, nu, domain, tol=1e-12, max_iter=None):
    """Transform handle with ``K = K_mu o Z1``."""
    domain = Domain.parse(domain)
    check_multiplicative_preconditions(mu, nu, domain)
    hm = handle_of(mu)
    cache = SubordinationCache(
        lambda z: solve_multiplicative_subordination(mu, nu, z, domain, tol=tol, max_iter=max_iter))

    def K(z):
        out = np.zeros_like(z)
        nz = z != 0
        if nz.any():
            out[nz] = hm._k(cache(z[nz])[0])
        return out

    handle = TransformHandle(domain, K=K, label=f"free_mult({hm.label},{handle_of(nu).label})")
    handle.subordination = cache
    return handle


def decompose_free(mu, nu, tol=1e-12, max_iter=500):
    """Measures ``zeta1, zeta2`` with ``mu [+] nu = mu |> zeta1 = nu |> zeta2 = zeta1 (u) zeta2``.

    Their reciprocal Cauchy transforms are the subordination functions.
    """
    cache = SubordinationCache(
        lambda z: solve_additive_subordination(mu, nu, z, tol=tol, max_iter=max_iter))
    z1 = TransformHandle(Domain.REAL, F=lambda z: cache(z)[0], label="zeta1")
    z2 = TransformHandle(Domain.REAL, F=lambda z: cache(z)[1], label="zeta2")
    return z1, z2


def mono_deconvolve_left(prefix, total, z, tol=1e-12, max_iter=100):
    """Solve ``F_prefix(w) = F_total(z)`` for ``w`` in the upper half-plane.

    ``w`` is the value at ``z`` of the reciprocal Cauchy transform of the
    measure ``zeta`` with ``total = prefix |> zeta``.  Damped Newton from
    ``w = z``; steps that leave the upper half-plane or do not reduce the
    residual are halved.  Raises :class:`NoSolutionError` listing the points
    where no admissible solution was found.
    """
    hp, ht = handle_of(prefix), handle_of(total)
    if hp.domain is not Domain.REAL or ht.domain is not Domain.REAL:
        raise DomainError("monotone deconvolution acts on real-line measures")
    zf, scalar, shape = _as_points(z)
    if np.any(zf.imag <= 0):
        raise DomainError("deconvolution needs z in the upper half-plane")
    target = ht._f(zf)
    w = zf.copy()
    res = hp._f(w) - target
    scale = 1.0 + np.abs(target)
    ok = np.abs(res) <= tol * scale
    stalled = np.zeros(zf.shape, dtype=bool)
    for _ in range(max_iter):
        act = ~(ok | stalled)
        if not act.any():
            break
        wa, ra = w[act], res[act]
        step = -ra / hp.dF(wa)
        lam = np.ones(wa.shape)
        new_w, new_r = wa.copy(), ra.copy()
        pending = np.isfinite(step)
        for _ in range(BACKTRACK):
            c = wa + lam * step
            good = pending & (c.imag > 0)
            rc = np.full(c.shape, np.inf, dtype=complex)
            if good.any():
                rc[good] = hp._f(c[good]) - target[act][good]
            good &= np.abs(rc) < np.abs(ra)
            new_w = np.where(good, c, new_w)
            new_r = np.where(good, rc, new_r)
            pending &= ~good
            if not pending.any():
                break
            lam = np.where(pending, lam * 0.5, lam)
        moved = ~pending & np.isfinite(step)
        w[act], res[act] = new_w, new_r
        idx = np.flatnonzero(act)
        stalled[idx[~moved]] = True
        ok = np.abs(res) <= tol * scale
    # a stalled point whose residual is already at rounding level counts as solved
    ok |= np.abs(res) <= 1e3 * tol * scale
    if not ok.all():
        bad = zf[~ok]
        pts = ", ".join(f"{complex(b):.6g}" for b in bad[:5])
        raise NoSolutionError(f"no admissible solution at {len(bad)} point(s): {pts}")
    return complex(w[0]) if scalar else w.reshape(shape)


def deconvolution_handle(prefix, total, samples=100, seed=None, label="zeta"):
    """Assemble the per-point deconvolution into a handle and class-check it.

    Returns ``(handle, report)``; ``report`` is the class-F check at
    ``samples`` seeded points (``None`` when ``samples`` is 0).
    """
    handle = TransformHandle(Domain.REAL, F=lambda z: _deconvolve_any(prefix, total, z),
                             label=label)
    report = None
    if samples:
        kw = {} if seed is None else {"seed": seed}
        report = class_check(handle, "F", samples=samples, **kw)
    return handle, report


def _deconvolve_any(prefix, total, z):
    # conjugate symmetry for points below the axis
    z = np.asarray(z, dtype=complex)
    lower = z.imag < 0
    w = mono_deconvolve_left(prefix, total, np.where(lower, np.conj(z), z))
    return np.where(lower, np.conj(w), w)


class _IndexedHandle(TransformHandle):
    """Handle whose evaluation failures carry the hemi-group index."""

    def __init__(self, index, inner):
        self.index = index
        self.inner = inner
        super().__init__(Domain.REAL, F=self._eval, label=f"zeta{index}")

    def _eval(self, z):
        try:
            return self.inner._f(z)
        except NoSolutionError as exc:
            raise NoSolutionError(f"zeta{self.index}: {exc}") from None


def _identity_handle():
    return TransformHandle(Domain.REAL, F=lambda z: z.copy(), label="delta0")


def hemigroup_transfer(marginals, check_points=None):
    """Transition measures ``zeta[i][j]`` (``i <= j``) of a monotone hemi-group.

    ``marginals[k]`` is the law at time ``t_k``; ``zeta[i][j]`` satisfies
    ``marginals[j] = marginals[i] |> zeta[i][j]``.  Entries below the
    diagonal are ``None``.  When ``check_points`` is given every handle is
    evaluated there so a missing solution surfaces with its ``(i, j)``.
    """
    n = len(marginals)
    zeta = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            if i == j:
                zeta[i][j] = _identity_handle()
                continue
            inner = TransformHandle(
                Domain.REAL, F=lambda z, a=marginals[i], b=marginals[j]: _deconvolve_any(a, b, z))
            zeta[i][j] = _IndexedHandle((i, j), inner)
            if check_points is not None:
                zeta[i][j].F(np.asarray(check_points, dtype=complex))
    return zeta


def hemigroup_residual(zeta, z):
    """Worst ``|F_{zeta[i][k]} o F_{zeta[k][j]} - F_{zeta[i][j]}|`` over ``i < k < j``."""
    z = np.asarray(z, dtype=complex)
    n = len(zeta)
    worst = 0.0
    for i in range(n):
        for k in range(i + 1, n):
            for j in range(k + 1, n):
                lhs = zeta[i][k].F(zeta[k][j].F(z))
                rhs = zeta[i][j].F(z)
                worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
