"""Self-check suites: point-mass bridges, oracle agreement, (non-)associativity.

Each suite returns a list of :class:`Check` records; the command line runs
them under ``ncconv verify``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import convolutions as conv
from .measures import Domain, bernoulli, dirac, make_atomic, mixture
from .operator_models import (analytic_resolvent, build_boolean_pair, build_monotone_pair,
                              combined_operator, matrix_resolvent, matrix_sqrt_psd,
                              model_for, random_atomic, spectral_distribution,
                              sqrt_shifted_closed_form, verify_independence)
from .transforms import DEFAULT_SEED, handle_of

SUITES = ("diracs", "oracles", "associativity")


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    expect_small: bool = True

    @property
    def passed(self):
        return self.value < self.tol if self.expect_small else self.value > self.tol

    def line(self):
        rel = "<" if self.expect_small else ">"
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} {rel} {self.tol:.0e}"


def atom_gap(a, b):
    """Hausdorff distance between the atom sets of two atomic measures."""
    xa, xb = np.asarray(a.x, dtype=float), np.asarray(b.x, dtype=float)
    d = np.abs(xa[:, None] - xb[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def measure_gap(a, b):
    """Largest difference in atom positions or weights (inf if atom counts differ)."""
    if len(a) != len(b):
        return float("inf")
    return float(max(np.max(np.abs(a.x - b.x)), np.max(np.abs(a.w - b.w))))


def _transform_gap(which, h1, h2, z):
    return float(np.max(np.abs(h1.evaluate(which, z) - h2.evaluate(which, z))))


# -- point-mass bridges --------------------------------------------------------------

def dirac_bridges(seed=DEFAULT_SEED, cases=5, tol=1e-12):
    """Point-mass identities between monotone and boolean convolutions, plus affinity."""
    rng = np.random.default_rng(seed)
    zu = conv.seeded_upper_points(20)
    zd = conv.seeded_disk_points(20)
    worst = {k: 0.0 for k in ("real", "circle", "positive", "alt", "affine", "affine_atoms")}
    for _ in range(cases):
        x = float(rng.uniform(-3, 3))
        mu = random_atomic(rng, Domain.REAL)
        a = conv.mono_add(dirac(x), mu)
        b = conv.bool_add(dirac(x), mu)
        worst["real"] = max(worst["real"], _transform_gap("F", a.handle, b.handle, zu))

        th = float(rng.uniform(0, 2 * np.pi))
        mu = random_atomic(rng, Domain.CIRCLE)
        a = conv.mono_mult_circle(dirac(th, Domain.CIRCLE), mu)
        b = conv.bool_mult_circle(dirac(th, Domain.CIRCLE), mu)
        worst["circle"] = max(worst["circle"], _transform_gap("K", a.handle, b.handle, zd))

        xp = float(rng.uniform(0.1, 3))
        mu = random_atomic(rng, Domain.POSITIVE)
        dx = dirac(xp, Domain.POSITIVE)
        a = conv.mono_mult_pos(dx, mu)
        b = conv.bool_mult_new(dx, mu)
        worst["positive"] = max(worst["positive"], _transform_gap("G", a.handle, b.handle, zu))
        a = conv.mono_mult_alt(dx, mu)
        b = conv.bool_mult_new(mu, dx)
        worst["alt"] = max(worst["alt"], _transform_gap("G", a.handle, b.handle, zu))

        m1, m2, nu = (random_atomic(rng, Domain.REAL) for _ in range(3))
        w = float(rng.uniform(0.1, 0.9))
        lhs = conv.mono_add(mixture([w, 1 - w], [m1, m2]), nu).measure
        rhs = mixture([w, 1 - w], [conv.mono_add(m1, nu).measure, conv.mono_add(m2, nu).measure])
        worst["affine"] = max(worst["affine"], _transform_gap("G", handle_of(lhs), handle_of(rhs), zu))
        worst["affine_atoms"] = max(worst["affine_atoms"], measure_gap(lhs, rhs))
    return [
        Check("dirac |> mu = dirac (u) mu on the real line", worst["real"], tol),
        Check("dirac mono-mult mu = dirac bool-mult mu on the circle", worst["circle"], tol),
        Check("dirac mono-mult mu = dirac new-bool-mult mu on the half-line", worst["positive"], tol),
        Check("dirac alt-mono-mult mu = mu new-bool-mult dirac", worst["alt"], tol),
        Check("mono_add is affine in its first argument (transform)", worst["affine"], tol),
        Check("mono_add is affine in its first argument (atoms)", worst["affine_atoms"], 1e-9),
    ]


# -- oracle agreement -------------------------------------------------------------------

TRIANGLE_OPS = (
    ("mono_add", Domain.REAL),
    ("bool_add", Domain.REAL),
    ("mono_mult", Domain.POSITIVE),
    ("mono_mult_alt", Domain.POSITIVE),
    ("bool_mult_new", Domain.POSITIVE),
)

_CONV_NAME = {"mono_mult": "mono_mult_pos"}


def resolvent_triangle(op, mu, nu, z):
    """Pairwise gaps between matrix, closed-form-resolvent and transform-identity ``G``."""
    model = model_for(op, mu, nu)
    g_matrix = matrix_resolvent(combined_operator(model, op), model.omega, z)
    g_analytic = analytic_resolvent(op, mu, nu, z)
    which, rhs = conv.defining_transform(_CONV_NAME.get(op, op), mu, nu, z)
    if which == "F":
        g_identity = 1.0 / rhs
    elif which == "K":
        # G(w) = 1 / (w (1 - K(1/w))); the identity is re-expressed at 1/z
        _, k = conv.defining_transform(_CONV_NAME.get(op, op), mu, nu, 1.0 / z)
        g_identity = 1.0 / (z * (1.0 - k))
    else:
        g_identity = rhs
    return (float(np.max(np.abs(g_matrix - g_analytic))),
            float(np.max(np.abs(g_matrix - g_identity))),
            float(np.max(np.abs(g_analytic - g_identity))))


def oracle_triangles(seed=DEFAULT_SEED, pairs=25, tol=1e-10):
    rng = np.random.default_rng(seed)
    z = conv.seeded_upper_points(50)
    checks = []
    for op, dom in TRIANGLE_OPS:
        worst = 0.0
        for _ in range(pairs):
            mu, nu = random_atomic(rng, dom), random_atomic(rng, dom)
            worst = max(worst, *resolvent_triangle(op, mu, nu, z))
        checks.append(Check(f"resolvent triangle {op}", worst, tol))
    return checks


def model_checks(seed=DEFAULT_SEED, models=50, word_len=6, tol=1e-10):
    """Marginal fidelity, independence factorization, unitarity, closed-form root."""
    rng = np.random.default_rng(seed)
    fidelity = indep = unitary = root = 0.0
    for k in range(models):
        dom = (Domain.REAL, Domain.POSITIVE, Domain.CIRCLE)[k % 3]
        mu, nu = random_atomic(rng, dom), random_atomic(rng, dom)
        shifted = dom is not Domain.REAL
        for build in (build_monotone_pair, build_boolean_pair):
            for sh in {False, shifted}:
                m = build(mu, nu, shifted=sh)
                indep = max(indep, verify_independence(m, word_len).max_defect)
                if sh and dom is Domain.CIRCLE:
                    eye = np.eye(m.dim)
                    unitary = max(unitary, np.linalg.norm(m.X.conj().T @ m.X - eye),
                                  np.linalg.norm(m.Y.conj().T @ m.Y - eye))
                if not sh:
                    fidelity = max(fidelity,
                                   measure_gap(spectral_distribution(m.X, m.omega, dom), mu),
                                   measure_gap(spectral_distribution(m.Y, m.omega, dom), nu))
        if dom is Domain.POSITIVE:
            m = build_monotone_pair(mu, nu, shifted=True)
            root = max(root, np.max(np.abs(matrix_sqrt_psd(m.X) - sqrt_shifted_closed_form(m))))
    return [
        Check("model marginals reproduce the inputs", fidelity, 1e-9),
        Check(f"independence factorization, words <= {word_len}", indep, tol),
        Check("shifted circle models are unitary", unitary, 1e-12),
        Check("matrix square root of S matches the closed form", root, 1e-12),
    ]


def oracles(seed=DEFAULT_SEED):
    return oracle_triangles(seed) + model_checks(seed)


# -- associativity and commutativity ---------------------------------------------------

def _assoc_gap(op, a, b, c, which, z):
    f = conv.OPERATIONS[op]
    left = f(f(a, b), c)
    right = f(a, f(b, c))
    return _transform_gap(which, left.handle, right.handle, z)


def associativity(seed=DEFAULT_SEED, tol=1e-8):
    rng = np.random.default_rng(seed)
    zu = conv.seeded_upper_points(20)
    zd = conv.seeded_disk_points(20)
    checks = []
    plan = (
        ("mono_add", Domain.REAL, "F", zu),
        ("bool_add", Domain.REAL, "F", zu),
        ("mono_mult_pos", Domain.POSITIVE, "G", zu),
        ("mono_mult_circle", Domain.CIRCLE, "K", zd),
        ("bool_mult_circle", Domain.CIRCLE, "K", zd),
    )
    for op, dom, which, z in plan:
        worst = 0.0
        for _ in range(5):
            a, b, c = (random_atomic(rng, dom, max_atoms=3) for _ in range(3))
            worst = max(worst, _assoc_gap(op, a, b, c, which, z))
        checks.append(Check(f"{op} is associative", worst, tol))
    a, b, c = (random_atomic(rng, Domain.REAL, max_atoms=2, min_atoms=2) for _ in range(3))
    checks.append(Check("free_add is associative", _assoc_gap("free_add", a, b, c, "F", zu[:8]), tol))

    for op, dom, which, z in (("bool_add", Domain.REAL, "F", zu),
                              ("bool_mult_circle", Domain.CIRCLE, "K", zd)):
        worst = 0.0
        for _ in range(5):
            a, b = random_atomic(rng, dom, max_atoms=3), random_atomic(rng, dom, max_atoms=3)
            f = conv.OPERATIONS[op]
            worst = max(worst, _transform_gap(which, f(a, b).handle, f(b, a).handle, z))
        checks.append(Check(f"{op} is commutative", worst, tol))
    a, b = (random_atomic(rng, Domain.REAL, max_atoms=3, min_atoms=2) for _ in range(2))
    gap = _transform_gap("F", conv.free_add(a, b).handle, conv.free_add(b, a).handle, zu[:8])
    checks.append(Check("free_add is commutative", gap, tol))

    w = witnesses()
    checks += [
        Check("mono_mult_alt associativity witness (atom gap)", w["mono_mult_alt_assoc"], 1e-3, False),
        Check("bool_mult_new associativity witness (atom gap)", w["bool_mult_new_assoc"], 1e-3, False),
        Check("bool_mult_new commutativity witness (weight gap)", w["bool_mult_new_comm"], 1e-3, False),
        Check("mono_add commutativity witness (atom gap)", w["mono_add_comm"], 1e-3, False),
    ]
    return checks


def witnesses():
    """Concrete triples and pairs on which associativity or commutativity fails."""
    d2, d3 = dirac(2.0, Domain.POSITIVE), dirac(3.0, Domain.POSITIVE)
    half = make_atomic(Domain.POSITIVE, [(0.0, 0.5), (1.0, 0.5)])
    other = make_atomic(Domain.POSITIVE, [(1.0, 0.5), (2.0, 0.5)])
    alt, new = conv.mono_mult_alt, conv.bool_mult_new
    out = {
        "mono_mult_alt_assoc": atom_gap(alt(alt(d2, d3), half).measure,
                                        alt(d2, alt(d3, half)).measure),
        "bool_mult_new_assoc": atom_gap(new(new(half, d2), d3).measure,
                                        new(half, new(d2, d3)).measure),
        "bool_mult_new_comm": measure_gap(new(other, half).measure, new(half, other).measure),
        "mono_add_comm": atom_gap(conv.mono_add(dirac(1.0), bernoulli(0.5)).measure,
                                  conv.mono_add(bernoulli(0.5), dirac(1.0)).measure),
    }
    return out


def run_suite(name, seed=DEFAULT_SEED):
    if name == "diracs":
        return dirac_bridges(seed)
    if name == "oracles":
        return oracles(seed)
    if name == "associativity":
        return associativity(seed)
    if name == "all":
        return [c for s in SUITES for c in run_suite(s, seed)]
    raise ValueError(f"unknown suite {name!r}")
