"""Finite matrix models of monotone and boolean independence.

For atomic marginals ``mu = sum p_i delta_{x_i}`` and ``nu = sum q_j
delta_{y_j}`` the weighted space ``L2(mu x nu)`` is realized in ``C^{nm}``
by scaling coordinate ``(i, j)`` with ``sqrt(p_i q_j)``.  There the
multiplication operators are diagonal, the conditional expectation onto
functions of ``x`` is ``P2 = I_n (x) s s*`` with ``s = sqrt(q)``, and

    X = M_x P2,   S = M_x P2 + (I - P2),   Y = M_y

realize monotone independence of ``X`` (or ``S - I``) and ``Y`` in the
vacuum ``omega = sqrt(p (x) q)``.  The boolean model lives on
``C + L2(mu)_0 + L2(nu)_0`` of dimension ``1 + (n-1) + (m-1)``.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, NonNormalError, NotPSDError, PoleError
from .measures import Domain, TWO_PI, make_atomic
from .transforms import POLE_TOL

CLUSTER_TOL = 1e-9
DROP_TOL = 1e-14
NORMAL_TOL = 1e-10
PSD_CLAMP = 1e-10
PSD_FAIL = 1e-8


class ModelKind(enum.Enum):
    MONOTONE_ADDITIVE = "MonotoneAdditive"
    MONOTONE_SHIFTED = "MonotoneShifted"
    BOOLEAN_ADDITIVE = "BooleanAdditive"
    BOOLEAN_SHIFTED = "BooleanShifted"

    @property
    def monotone(self):
        return self in (ModelKind.MONOTONE_ADDITIVE, ModelKind.MONOTONE_SHIFTED)

    @property
    def shifted(self):
        return self in (ModelKind.MONOTONE_SHIFTED, ModelKind.BOOLEAN_SHIFTED)


@dataclass(frozen=True, eq=False)
class OperatorModel:
    """Matrices ``X``, ``Y`` and a unit vacuum ``omega``.

    For shifted kinds ``X`` is ``S`` (monotone) or ``Q_x`` (boolean) and the
    independent pair is ``(X - I, Y)`` resp. ``(X - I, Y - I)``.  ``P2`` is the
    conditional expectation of the monotone models and ``None`` otherwise.
    """

    kind: ModelKind
    X: np.ndarray
    Y: np.ndarray
    omega: np.ndarray
    marginals: tuple
    P2: np.ndarray = None

    @property
    def dim(self):
        return self.omega.shape[0]

    def independent_pair(self):
        eye = np.eye(self.dim)
        if self.kind is ModelKind.MONOTONE_SHIFTED:
            return self.X - eye, self.Y
        if self.kind is ModelKind.BOOLEAN_SHIFTED:
            return self.X - eye, self.Y - eye
        return self.X, self.Y


def _values(mu):
    # complex points on the circle, reals otherwise
    return mu.points if mu.domain is Domain.CIRCLE else mu.x.astype(float)


def _freeze(*arrays):
    for a in arrays:
        if a is not None:
            a.setflags(write=False)


def build_monotone_pair(mu, nu, shifted=False):
    """Monotone model of ``(mu, nu)`` on ``C^{n m}``, index ``i*m + j``."""
    if shifted and mu.domain is Domain.REAL:
        raise DomainError("shifted monotone model needs a half-line or circle marginal")
    x, y = _values(mu), _values(nu)
    p, q = mu.w, nu.w
    n, m = len(x), len(y)
    s = np.sqrt(q)
    P2 = np.kron(np.eye(n), np.outer(s, s))
    Mx = np.kron(np.diag(x), np.eye(m))
    X = Mx @ P2
    if shifted:
        X = X + (np.eye(n * m) - P2)
    Y = np.kron(np.eye(n), np.diag(y))
    omega = np.sqrt(np.kron(p, q))
    kind = ModelKind.MONOTONE_SHIFTED if shifted else ModelKind.MONOTONE_ADDITIVE
    _freeze(X, Y, omega, P2)
    return OperatorModel(kind, X, Y, omega, (mu, nu), P2)


def householder_with_first_column(u):
    """Real orthogonal symmetric matrix whose first column is the unit vector ``u``."""
    u = np.asarray(u, dtype=float)
    e1 = np.zeros_like(u)
    e1[0] = 1.0
    v = e1 - u
    nv = v @ v
    if nv < 1e-30:
        return np.eye(len(u))
    return np.eye(len(u)) - 2.0 * np.outer(v, v) / nv


def _marginal_block(mu):
    # A = U diag(x) U* with U e1 = sqrt(p), so <e1, f(A) e1> = sum p_i f(x_i)
    U = householder_with_first_column(np.sqrt(mu.w))
    return U @ np.diag(_values(mu)) @ U.T


def build_boolean_pair(mu, nu, shifted=False):
    """Boolean model on ``C + L2(mu)_0 + L2(nu)_0`` with vacuum ``e_1``."""
    if shifted and (mu.domain is Domain.REAL or nu.domain is Domain.REAL):
        raise DomainError("shifted boolean model needs half-line or circle marginals")
    n, m = len(mu), len(nu)
    dim = n + m - 1
    A = _marginal_block(mu)
    B = _marginal_block(nu)
    dtype = complex if np.iscomplexobj(A) or np.iscomplexobj(B) else float
    X = np.zeros((dim, dim), dtype=dtype)
    Y = np.zeros((dim, dim), dtype=dtype)
    X[:n, :n] = A
    ycoords = np.r_[0, np.arange(n, dim)]
    Y[np.ix_(ycoords, ycoords)] = B
    if shifted:
        X[n:, n:] += np.eye(m - 1)
        Y[1:n, 1:n] += np.eye(n - 1)
    omega = np.zeros(dim)
    omega[0] = 1.0
    kind = ModelKind.BOOLEAN_SHIFTED if shifted else ModelKind.BOOLEAN_ADDITIVE
    _freeze(X, Y, omega)
    return OperatorModel(kind, X, Y, omega, (mu, nu))


# -- spectral calculus ----------------------------------------------------------

def normality_defect(A):
    A = np.asarray(A)
    return float(np.linalg.norm(A @ A.conj().T - A.conj().T @ A))


def _is_hermitian(A, tol=1e-12):
    return np.allclose(A, A.conj().T, atol=tol, rtol=0)


def eigen_decompose(A):
    """Eigenvalues and orthonormal eigenvectors of a normal matrix."""
    A = np.asarray(A)
    scale = max(1.0, float(np.linalg.norm(A)))
    if _is_hermitian(A, 1e-12 * scale):
        return np.linalg.eigh((A + A.conj().T) / 2)
    if normality_defect(A) > NORMAL_TOL * scale ** 2:
        raise NonNormalError(f"matrix is not normal (defect {normality_defect(A):.3g})")
    T, Z = scipy.linalg.schur(A.astype(complex), output="complex")
    return np.diag(T), Z


def _cluster(values, weights, circle):
    if circle:
        ang = np.mod(np.angle(values), TWO_PI)
        order = np.argsort(ang)
        ang, weights = ang[order], weights[order]
        groups = [[0]]
        for k in range(1, len(ang)):
            if ang[k] - ang[groups[-1][-1]] <= CLUSTER_TOL:
                groups[-1].append(k)
            else:
                groups.append([k])
        if len(groups) > 1 and ang[0] + TWO_PI - ang[-1] <= CLUSTER_TOL:
            groups[0] = groups.pop() + groups[0]
        out = []
        for g in groups:
            w = weights[g].sum()
            z = np.sum(weights[g] * np.exp(1j * ang[g])) / w if w > 0 else np.exp(1j * ang[g[0]])
            out.append((float(np.mod(np.angle(z), TWO_PI)), w))
        return out
    order = np.argsort(values)
    values, weights = values[order], weights[order]
    out = []
    start = 0
    for k in range(1, len(values) + 1):
        if k == len(values) or values[k] - values[k - 1] > CLUSTER_TOL:
            w = weights[start:k].sum()
            pos = np.sum(weights[start:k] * values[start:k]) / w if w > 0 else values[start]
            out.append((float(pos), w))
            start = k
    return out


def spectral_distribution(A, omega, domain=None):
    """Vacuum distribution ``<omega, h(A) omega> = int h dmu`` as an atomic measure.

    ``domain`` defaults to the real line for Hermitian ``A`` and to the unit
    circle otherwise.  Half-line results clamp eigenvalues within the
    clustering tolerance of zero.
    """
    A = np.asarray(A)
    omega = np.asarray(omega)
    lam, V = eigen_decompose(A)
    coeff = V.conj().T @ omega
    weights = np.abs(coeff) ** 2
    hermitian = np.isrealobj(lam)
    if domain is None:
        domain = Domain.REAL if hermitian else Domain.CIRCLE
    domain = Domain.parse(domain)
    circle = domain is Domain.CIRCLE
    if not circle:
        lam = np.real(lam)
    atoms = [(x, w) for x, w in _cluster(lam, weights, circle) if w >= DROP_TOL]
    if domain is Domain.POSITIVE:
        atoms = [(0.0 if abs(x) <= CLUSTER_TOL else x, w) for x, w in atoms]
    total = sum(w for _, w in atoms)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"vacuum weights sum to {total!r}; omega is not a unit vector")
    return make_atomic(domain, atoms)


def matrix_sqrt_psd(A):
    """Principal square root of a Hermitian positive semidefinite matrix."""
    A = np.asarray(A)
    lam, V = np.linalg.eigh((A + A.conj().T) / 2)
    if lam.size and lam.min() < -PSD_FAIL:
        raise NotPSDError(f"minimum eigenvalue {lam.min():.3g}")
    root = np.sqrt(np.clip(lam, 0.0, None))
    return (V * root) @ V.conj().T


def sqrt_shifted_closed_form(model):
    """``M_sqrt(x) P2 + (I - P2)`` built directly from the marginal."""
    if model.kind is not ModelKind.MONOTONE_SHIFTED:
        raise DomainError("closed-form root applies to the shifted monotone model")
    mu, nu = model.marginals
    m = len(nu)
    root = np.kron(np.diag(np.sqrt(_values(mu))), np.eye(m))
    return root @ model.P2 + (np.eye(model.dim) - model.P2)


def combined_operator(model, op):
    """The operator whose vacuum distribution is the convolution ``op``."""
    X, Y = model.X, model.Y
    if op == "mono_add":
        return X + Y
    if op == "bool_add":
        return X + Y
    if op == "mono_mult":
        r = matrix_sqrt_psd(X)
        return r @ Y @ r
    if op == "mono_mult_alt":
        r = matrix_sqrt_psd(Y)
        return r @ X @ r
    if op == "bool_mult_new":
        r = matrix_sqrt_psd(X)
        return r @ Y @ r
    if op in ("mono_mult_circle", "bool_mult_circle"):
        return X @ Y
    raise ValueError(f"unknown model operation {op!r}")


MODEL_FOR_OP = {
    "mono_add": (build_monotone_pair, False),
    "bool_add": (build_boolean_pair, False),
    "mono_mult": (build_monotone_pair, True),
    "mono_mult_alt": (build_monotone_pair, True),
    "mono_mult_circle": (build_monotone_pair, True),
    "bool_mult_new": (build_boolean_pair, True),
    "bool_mult_circle": (build_boolean_pair, True),
}


def model_for(op, mu, nu):
    build, shifted = MODEL_FOR_OP[op]
    return build(mu, nu, shifted=shifted)


def matrix_resolvent(A, omega, z):
    """``<omega, (z - A)^{-1} omega>`` by dense solves, vectorized over ``z``."""
    z = np.asarray(z, dtype=complex)
    flat = z.reshape(-1)
    dim = A.shape[0]
    lhs = flat[:, None, None] * np.eye(dim) - np.asarray(A)[None]
    rhs = np.broadcast_to(np.asarray(omega, dtype=complex), (len(flat), dim))[..., None]
    sol = np.linalg.solve(lhs, rhs)[..., 0]
    out = sol @ np.conj(omega)
    return complex(out[0]) if z.ndim == 0 else out.reshape(z.shape)


# -- closed-form resolvents --------------------------------------------------------

def _sums(mu, z):
    # G and W of an atomic measure at z, with a pole guard
    x = mu.x
    d = z[..., None] - x
    if np.min(np.abs(d)) < POLE_TOL:
        raise PoleError("resolvent evaluated on the spectrum")
    G = np.sum(mu.w / d, axis=-1)
    W = np.sum(mu.w * np.sqrt(np.clip(x, 0.0, None)) / d, axis=-1)
    return G, W


def analytic_resolvent(kind, mu, nu, z):
    """Vacuum expectation of the model resolvent from its explicit inverse.

    The resolvent of the combined operator is known in closed form as a
    multiplication-plus-rank-one operator; applying it to the vacuum and
    integrating gives finite sums over the atoms of ``mu`` and ``nu``.  No
    matrix is formed.  ``kind`` is one of ``mono_add``, ``bool_add``,
    ``mono_mult``, ``mono_mult_alt`` or ``bool_mult_new``.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = z.reshape(-1)
    x, p = mu.x, mu.w
    y, q = nu.x, nu.w
    with np.errstate(divide="raise", invalid="raise"):
        try:
            Gm, Wm = _sums(mu, z)
            Gn, Wn = _sums(nu, z)
            zz = z[:, None]
            if kind == "mono_add":
                # (z - M_x P2 - M_y)^{-1} 1 = 1/(z-y) + x G_nu / ((z-y)(1 - x G_nu))
                gn = Gn[:, None]
                terms = 1.0 / (zz - y)[:, None, :] + (
                    (x * gn)[:, :, None] / ((zz - y)[:, None, :] * (1.0 - x * gn)[:, :, None]))
                out = np.einsum("i,j,kij->k", p, q, terms)
            elif kind == "bool_add":
                out = Gm * Gn / (Gm + Gn - z * Gm * Gn)
            elif kind == "mono_mult":
                gn = Gn[:, None]
                rx = np.sqrt(x)
                D = (1.0 - x) * zz * gn + x
                g = ((rx - x) + zz * (x - 1.0) * gn) / D
                h = ((rx - 1.0) ** 2 * gn + (rx - x) * gn) / D
                terms = (1.0 + g)[:, :, None] / (zz - y)[:, None, :] + h[:, :, None]
                out = np.einsum("i,j,kij->k", p, q, terms)
            elif kind == "mono_mult_alt":
                gn = Gn[:, None]
                D = (1.0 - x) * zz * gn + x
                out = Gn + Wn * np.sum(p * (x - 1.0) * Wn[:, None] / D, axis=1)
            elif kind == "bool_mult_new":
                den = z * Gm * Gn - (z * Gm - 1.0) * (z * Gn - 1.0)
                c1 = Gn * Wm / den
                c2 = (z * Gn - 1.0) * Wm / den
                out = Gm + Wm * (c2 - c1)
            else:
                raise ValueError(f"unknown resolvent kind {kind!r}")
        except FloatingPointError as exc:
            raise PoleError(f"resolvent formula singular: {exc}") from None
    return complex(out[0]) if scalar else out


# -- independence check -------------------------------------------------------------

@dataclass(frozen=True)
class IndependenceReport:
    notion: str
    max_word_len: int
    words_checked: int
    max_defect: float
    worst_word: tuple
    tol: float = 1e-10

    @property
    def passed(self):
        return self.max_defect < self.tol


def spectral_projections(A):
    """Spectral projections of ``A`` for its nonzero eigenvalues."""
    lam, V = eigen_decompose(A)
    if np.isrealobj(lam):
        order = np.argsort(lam)
    else:
        order = np.lexsort((lam.imag, lam.real))
    lam, V = lam[order], V[:, order]
    projs = []
    k = 0
    while k < len(lam):
        j = k + 1
        while j < len(lam) and abs(lam[j] - lam[k]) <= CLUSTER_TOL:
            j += 1
        if abs(lam[k]) > CLUSTER_TOL:
            B = V[:, k:j]
            projs.append(B @ B.conj().T)
        k = j
    return projs


def verify_independence(model, max_word_len=6, notion=None, tol=1e-10):
    """Check the moment factorization of all alternating words.

    Letters are spectral projections of the independent pair (any bounded
    ``h`` with ``h(0) = 0`` is a combination of them, so these words span
    every mixed moment).  Monotone: second-algebra letters factor out as
    scalars; boolean: every letter factors.  ``notion`` overrides the
    model's own notion, which is how a boolean check of a monotone model
    produces a nonzero defect.
    """
    if max_word_len > 8:
        raise ValueError("max_word_len must be <= 8")
    notion = notion or ("monotone" if model.kind.monotone else "boolean")
    A, B = model.independent_pair()
    letters = (np.array(spectral_projections(A)), np.array(spectral_projections(B)))
    omega = model.omega.astype(complex)
    expect = [np.einsum("a,kab,b->k", omega.conj(), L, omega) for L in letters]
    dim = model.dim
    worst, worst_word, checked = 0.0, (), 0
    for start in (0, 1):
        # words are built right to left; vec is the product applied to omega
        vec = np.broadcast_to(omega, (1, dim)).copy()
        kept = vec.copy()
        scal = np.ones(1, dtype=complex)
        idx = np.zeros((1, 0), dtype=int)
        side = start
        for length in range(1, max_word_len + 1):
            L = letters[side]
            nl = len(L)
            if nl == 0:
                break
            vec = np.einsum("kab,wb->wka", L, vec).reshape(-1, dim)
            idx = np.concatenate([np.repeat(idx, nl, axis=0),
                                  np.tile(np.arange(nl), len(idx))[:, None]], axis=1)
            if notion == "boolean" or side == 1:
                kept = np.repeat(kept, nl, axis=0)
                scal = (scal[:, None] * expect[side][None]).reshape(-1)
            else:
                kept = np.einsum("kab,wb->wka", L, kept).reshape(-1, dim)
                scal = np.repeat(scal, nl)
            lhs = vec @ omega.conj()
            rhs = (kept @ omega.conj()) * scal
            defect = np.abs(lhs - rhs)
            checked += len(defect)
            k = int(np.argmax(defect))
            if defect[k] > worst:
                sides = [(start + t) % 2 for t in range(length)][::-1]
                worst = float(defect[k])
                worst_word = tuple(zip(sides, idx[k][::-1].tolist()))
            side = 1 - side
    return IndependenceReport(notion, max_word_len, checked, worst, worst_word, tol)


# -- free-type decomposition -----------------------------------------------------------

def lenczewski_decompose(X, Y, omega):
    """Split ``X + Y = X0 + Z`` with ``X0 = X P_X`` and ``Z = X (I - P_X) + Y``.

    ``P_X`` projects onto the cyclic subspace spanned by ``poly(X) omega``.
    """
    X = np.asarray(X)
    Y = np.asarray(Y)
    omega = np.asarray(omega, dtype=complex)
    lam, V = eigen_decompose(X)
    dim = X.shape[0]
    P = np.zeros((dim, dim), dtype=complex)
    k = 0
    while k < len(lam):
        j = k + 1
        while j < len(lam) and abs(lam[j] - lam[k]) <= CLUSTER_TOL:
            j += 1
        B = V[:, k:j]
        u = B @ (B.conj().T @ omega)
        nu2 = np.vdot(u, u).real
        if nu2 > DROP_TOL:
            P += np.outer(u, u.conj()) / nu2
        k = j
    if np.isrealobj(X) and np.isrealobj(Y) and not np.any(omega.imag):
        P = P.real
    X0 = X @ P
    Z = X - X0 + Y
    if not np.allclose(X0 + Z, X + Y, atol=1e-12, rtol=0):
        raise ArithmeticError("decomposition does not reproduce X + Y")
    return X0, Z, P


# -- serialization ---------------------------------------------------------------------

def _matrix_json(A):
    A = np.asarray(A, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in A]


def model_to_json(model, indent=None):
    data = {
        "kind": model.kind.value,
        "dimension": model.dim,
        "X": _matrix_json(model.X),
        "Y": _matrix_json(model.Y),
        "omega": [[float(v.real), float(v.imag)] for v in np.asarray(model.omega, dtype=complex)],
    }
    return json.dumps(data, indent=indent)


def random_atomic(rng, domain, max_atoms=5, low=None, high=None, min_weight=0.02, min_atoms=1):
    """Random atomic measure for seeded test batteries."""
    domain = Domain.parse(domain)
    n = int(rng.integers(min_atoms, max_atoms + 1))
    if domain is Domain.CIRCLE:
        pos = rng.uniform(0.0, TWO_PI, n)
    else:
        lo = (0.0 if domain is Domain.POSITIVE else -3.0) if low is None else low
        hi = 3.0 if high is None else high
        pos = rng.uniform(lo, hi, n)
    w = min_weight + rng.dirichlet(np.ones(n)) * (1.0 - min_weight * n)
    return make_atomic(domain, list(zip(pos, w)))


__all__ = [
    "ModelKind", "OperatorModel", "build_monotone_pair", "build_boolean_pair",
    "spectral_distribution", "matrix_sqrt_psd", "matrix_resolvent", "analytic_resolvent",
    "verify_independence", "IndependenceReport", "lenczewski_decompose", "model_to_json",
    "combined_operator", "model_for", "spectral_projections", "householder_with_first_column",
    "random_atomic", "sqrt_shifted_closed_form", "eigen_decompose",
]
