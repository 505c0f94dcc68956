"""Free, monotone and boolean convolutions.

Atomic inputs are convolved exactly: the result is the vacuum spectral
distribution of the corresponding finite operator model.  Any other input
(a density or a :class:`TransformHandle`) gives a transform-level result
that can be turned into a measure with :func:`stieltjes_invert`.  Every
result carries a handle for its transform either way.

Defining relations::

    mono_add                 real       F = F_mu o F_nu
    bool_add                 real       F = F_mu + F_nu - z
    free_add                 real       subordination
    mono_mult_pos            half-line  K = K_mu o K_nu
    mono_mult_alt            half-line  law of sqrt(Y) X sqrt(Y)
    bool_mult_new            half-line  law of sqrt(X) Y sqrt(X)
    bool_mult_bercovici_pos  half-line  K = K_mu K_nu / z, if in class P
    mono_mult_circle         circle     K = K_mu o K_nu
    bool_mult_circle         circle     K = K_mu K_nu / z
    free_mult_pos/_circle    both       subordination
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .measures import AtomicMeasure, Domain, dirac, moments
from .operator_models import combined_operator, model_for, spectral_distribution
from .subordination import free_additive_handle, free_multiplicative_handle
from .transforms import TransformHandle, class_check, handle_of

IDENTITY_POINTS = 20
BERCOVICI_SAMPLES = 4000


class Method(enum.Enum):
    OPERATOR_MODEL = "operator_model"
    TRANSFORM = "transform"
    SUBORDINATION = "subordination"
    SHORT_CIRCUIT = "short_circuit"


def seeded_upper_points(n=50):
    """Fixed evaluation grid ``(-3 + 6k/(n-1)) + i(0.5 + k mod 3)``."""
    k = np.arange(n)
    return (-3.0 + 6.0 * k / (n - 1)) + 1j * (0.5 + k % 3)


def seeded_disk_points(n=50):
    """Fixed grid in the disk of radius 0.9 (golden-angle spiral)."""
    k = np.arange(n)
    r = 0.05 + 0.85 * (k + 0.5) / n
    return r * np.exp(1j * k * math.pi * (3.0 - math.sqrt(5.0)))


@dataclass(frozen=True, eq=False)
class ConvolutionResult:
    """Outcome of a convolution.

    ``measure`` is an :class:`AtomicMeasure` when exactly computable and the
    transform handle otherwise; ``handle`` is always the transform handle.
    """

    op: str
    measure: object
    handle: TransformHandle
    method: Method
    diagnostics: dict = field(default_factory=dict)
    defined = True

    @property
    def is_atomic(self):
        return isinstance(self.measure, AtomicMeasure)

    @property
    def domain(self):
        return self.handle.domain


@dataclass(frozen=True, eq=False)
class Undefined:
    """The convolution does not exist; ``witness`` is ``(z, violation)``."""

    op: str
    witness: tuple
    report: object = None
    defined = False

    def __str__(self):
        z, v = self.witness
        return f"undefined: class P violated at z={z:.6g} (magnitude {v:.3g})"


def _operand(x):
    if isinstance(x, ConvolutionResult):
        return x.measure
    if isinstance(x, Undefined):
        raise DomainError(f"cannot convolve an undefined {x.op} result")
    return x


def _check(domain, *args):
    for a in args:
        d = getattr(a, "domain", None)
        if d is not domain:
            name = d.value if d is not None else type(a).__name__
            raise DomainError(f"operand on {name} domain, expected {domain.value}")


def _atomic(*args):
    return all(isinstance(a, AtomicMeasure) for a in args)


def _from_model(op, mu, nu, domain, name=None):
    model = model_for(op, mu, nu)
    A = combined_operator(model, op)
    lam = spectral_distribution(A, model.omega, domain)
    return ConvolutionResult(name or op, lam, handle_of(lam), Method.OPERATOR_MODEL,
                             {"dimension": model.dim, "model": model.kind.value})


def _transform_result(op, handle, method=Method.TRANSFORM, **diag):
    return ConvolutionResult(op, handle, handle, method, dict(diag))


# -- additive -----------------------------------------------------------------

def mono_add(mu, nu):
    """Monotone additive convolution ``mu |> nu`` (``F = F_mu o F_nu``)."""
    mu, nu = _operand(mu), _operand(nu)
    _check(Domain.REAL, mu, nu)
    if _atomic(mu, nu):
        return _from_model("mono_add", mu, nu, Domain.REAL)
    hm, hn = handle_of(mu), handle_of(nu)
    h = TransformHandle(Domain.REAL, F=lambda z: hm._f(hn._f(z)),
                        label=f"mono_add({hm.label},{hn.label})")
    return _transform_result("mono_add", h)


def bool_add(mu, nu):
    """Boolean additive convolution (``F = F_mu + F_nu - z``)."""
    mu, nu = _operand(mu), _operand(nu)
    _check(Domain.REAL, mu, nu)
    if _atomic(mu, nu):
        return _from_model("bool_add", mu, nu, Domain.REAL)
    hm, hn = handle_of(mu), handle_of(nu)
    h = TransformHandle(Domain.REAL, F=lambda z: hm._f(z) + hn._f(z) - z,
                        label=f"bool_add({hm.label},{hn.label})")
    return _transform_result("bool_add", h)


def free_add(mu, nu, tol=1e-12, max_iter=500):
    """Free additive convolution via the subordination fixed point."""
    mu, nu = _operand(mu), _operand(nu)
    _check(Domain.REAL, mu, nu)
    for a, b in ((mu, nu), (nu, mu)):
        # a point mass only translates
        if isinstance(a, AtomicMeasure) and a.is_dirac() and isinstance(b, AtomicMeasure):
            lam = AtomicMeasure(Domain.REAL, tuple(x + a.x[0] for x in b.x), b.weights) \
                if len(b) else b
            return ConvolutionResult("free_add", lam, handle_of(lam), Method.SHORT_CIRCUIT)
    h = free_additive_handle(mu, nu, tol=tol, max_iter=max_iter)
    return _transform_result("free_add", h, Method.SUBORDINATION)


# -- multiplicative on the half-line -------------------------------------------------

def _g_of_mono_mult(hm, hn):
    def G(z):
        gn = hn._g(z)
        t = z * gn - 1.0
        return gn / t * hm._g(z * gn / t)
    return G


def mono_mult_pos(mu, nu):
    """Monotone multiplicative convolution on the half-line (``K = K_mu o K_nu``)."""
    mu, nu = _operand(mu), _operand(nu)
    _check(Domain.POSITIVE, mu, nu)
    if isinstance(nu, AtomicMeasure) and nu.is_dirac() and nu.x[0] == 0.0:
        lam = dirac(0.0, Domain.POSITIVE)
        return ConvolutionResult("mono_mult_pos", lam, handle_of(lam), Method.SHORT_CIRCUIT)
    if _atomic(mu, nu):
        return _from_model("mono_mult", mu, nu, Domain.POSITIVE, "mono_mult_pos")
    hm, hn = handle_of(mu), handle_of(nu)
    h = TransformHandle(Domain.POSITIVE, G=_g_of_mono_mult(hm, hn),
                        label=f"mono_mult({hm.label},{hn.label})")
    return _transform_result("mono_mult_pos", h)


def _need_w(h, name):
    if not h.has_W():
        raise DomainError(f"{name} needs the W transform of {h.label}; "
                          "pass an atomic or density measure")


def mono_mult_alt(mu, nu):
    """Law of ``sqrt(Y) X sqrt(Y)`` for monotone independent ``X - 1``, ``Y``."""
    mu, nu = _operand(mu), _operand(nu)
    _check(Domain.POSITIVE, mu, nu)
    if _atomic(mu, nu):
        return _from_model("mono_mult_alt", mu, nu, Domain.POSITIVE)
    hm, hn = handle_of(mu), handle_of(nu)
    _need_w(hn, "mono_mult_alt")

    def G(z):
        gn, wn = hn._g(z), hn._W(z)
        t = z * gn - 1.0
        return gn - wn ** 2 / t + wn ** 2 / t ** 2 * hm._g(z * gn / t)

    h = TransformHandle(Domain.POSITIVE, G=G, label=f"mono_mult_alt({hm.label},{hn.label})")
    return _transform_result("mono_mult_alt", h)


def bool_mult_new(mu, nu):
    """Law of ``sqrt(X) Y sqrt(X)`` for boolean independent ``X - 1``, ``Y - 1``."""
    mu, nu = _operand(mu), _operand(nu)
    _check(Domain.POSITIVE, mu, nu)
    if _atomic(mu, nu):
        return _from_model("bool_mult_new", mu, nu, Domain.POSITIVE)
    hm, hn = handle_of(mu), handle_of(nu)
    _need_w(hm, "bool_mult_new")

    def G(z):
        gm, gn, wm = hm._g(z), hn._g(z), hm._W(z)
        den = z * gm * gn - (z * gm - 1.0) * (z * gn - 1.0)
        return gm + wm ** 2 * ((z - 1.0) * gn - 1.0) / den

    h = TransformHandle(Domain.POSITIVE, G=G, label=f"bool_mult_new({hm.label},{hn.label})")
    return _transform_result("bool_mult_new", h)


def bool_mult_bercovici_pos(mu, nu, samples=BERCOVICI_SAMPLES, seed=None):
    """Boolean multiplicative convolution on the half-line, when it exists.

    ``K = K_mu K_nu / z`` defines a measure only if it lies in class P; the
    check is sampled.  Returns :class:`Undefined` with the worst witness
    otherwise.
    """
    mu, nu = _operand(mu), _operand(nu)
    _check(Domain.POSITIVE, mu, nu)
    hm, hn = handle_of(mu), handle_of(nu)

    def K(z):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(z == 0, 0.0, hm._k(z) * hn._k(z) / np.where(z == 0, 1.0, z))

    h = TransformHandle(Domain.POSITIVE, K=K, label=f"bool_mult({hm.label},{hn.label})")
    kw = {} if seed is None else {"seed": seed}
    report = class_check(h, "P", samples=samples, **kw)
    if not report.passed:
        witness = max(report.witnesses, key=lambda t: t[1])
        return Undefined("bool_mult_bercovici_pos", witness, report)
    return _transform_result("bool_mult_bercovici_pos", h, report=report)


def free_mult_pos(mu, nu, tol=1e-12, max_iter=None):
    mu, nu = _operand(mu), _operand(nu)
    _check(Domain.POSITIVE, mu, nu)
    h = free_multiplicative_handle(mu, nu, Domain.POSITIVE, tol=tol, max_iter=max_iter)
    return _transform_result("free_mult_pos", h, Method.SUBORDINATION)


# -- multiplicative on the circle ------------------------------------------------------

def mono_mult_circle(mu, nu):
    """Monotone multiplicative convolution on the circle (``K = K_mu o K_nu``)."""
    mu, nu = _operand(mu), _operand(nu)
    _check(Domain.CIRCLE, mu, nu)
    if _atomic(mu, nu):
        return _from_model("mono_mult_circle", mu, nu, Domain.CIRCLE)
    hm, hn = handle_of(mu), handle_of(nu)
    h = TransformHandle(Domain.CIRCLE, K=lambda z: hm._k(hn._k(z)),
                        label=f"mono_mult({hm.label},{hn.label})")
    return _transform_result("mono_mult_circle", h)


def bool_mult_circle(mu, nu):
    """Boolean multiplicative convolution on the circle (``K = K_mu K_nu / z``)."""
    mu, nu = _operand(mu), _operand(nu)
    _check(Domain.CIRCLE, mu, nu)
    if _atomic(mu, nu):
        return _from_model("bool_mult_circle", mu, nu, Domain.CIRCLE)
    hm, hn = handle_of(mu), handle_of(nu)

    def K(z):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(z == 0, 0.0, hm._k(z) * hn._k(z) / np.where(z == 0, 1.0, z))

    h = TransformHandle(Domain.CIRCLE, K=K, label=f"bool_mult({hm.label},{hn.label})")
    return _transform_result("bool_mult_circle", h)


def free_mult_circle(mu, nu, tol=1e-12, max_iter=None):
    mu, nu = _operand(mu), _operand(nu)
    _check(Domain.CIRCLE, mu, nu)
    h = free_multiplicative_handle(mu, nu, Domain.CIRCLE, tol=tol, max_iter=max_iter)
    return _transform_result("free_mult_circle", h, Method.SUBORDINATION)


OPERATIONS = {
    "mono_add": mono_add,
    "bool_add": bool_add,
    "free_add": free_add,
    "mono_mult_pos": mono_mult_pos,
    "mono_mult_alt": mono_mult_alt,
    "bool_mult_new": bool_mult_new,
    "bool_mult_bercovici_pos": bool_mult_bercovici_pos,
    "free_mult_pos": free_mult_pos,
    "mono_mult_circle": mono_mult_circle,
    "bool_mult_circle": bool_mult_circle,
    "free_mult_circle": free_mult_circle,
}


# -- defining identities -------------------------------------------------------------

def defining_transform(op, mu, nu, z):
    """Right-hand side of the identity that defines ``op``, evaluated at ``z``.

    Returns ``(which, value)``: the name of the transform of the result that
    should equal ``value``.
    """
    hm, hn = handle_of(_operand(mu)), handle_of(_operand(nu))
    z = np.asarray(z, dtype=complex)
    if op == "mono_add":
        return "F", hm.F(hn.F(z))
    if op == "bool_add":
        return "F", hm.F(z) + hn.F(z) - z
    if op in ("mono_mult_pos", "mono_mult_circle"):
        return "K", hm.K(hn.K(z))
    if op in ("bool_mult_circle", "bool_mult_bercovici_pos"):
        return "K", hm.K(z) * hn.K(z) / z
    if op == "mono_mult_alt":
        gn, wn = hn.G(z), hn.W(z)
        t = z * gn - 1.0
        return "G", gn - wn ** 2 / t + wn ** 2 / t ** 2 * hm.G(z * gn / t)
    if op == "bool_mult_new":
        gm, gn, wm = hm.G(z), hn.G(z), hm.W(z)
        den = z * gm * gn - (z * gm - 1.0) * (z * gn - 1.0)
        return "G", gm + wm ** 2 * ((z - 1.0) * gn - 1.0) / den
    raise ValueError(f"no closed defining identity for {op!r}")


def identity_points(domain, n=IDENTITY_POINTS):
    domain = Domain.parse(domain)
    return seeded_disk_points(n) if domain is Domain.CIRCLE else seeded_upper_points(n)


def identity_residual(result, mu, nu, z=None):
    """Worst defect of the defining transform identity of ``result``."""
    if z is None:
        z = identity_points(result.domain)
    which, rhs = defining_transform(result.op, mu, nu, z)
    lhs = result.handle.evaluate(which, z)
    return float(np.max(np.abs(lhs - rhs)))


def first_moments(result_or_measure, n, radius=None):
    """First ``n`` moments of a measure, an atomic result or a handle."""
    m = result_or_measure.measure if isinstance(result_or_measure, ConvolutionResult) \
        else result_or_measure
    if isinstance(m, TransformHandle):
        return m.moments(n, radius=radius)
    return moments(m, n)
