"""Independent reference computations used by the tests.

Nothing here touches transforms or subordination: free cumulants come from
enumerating non-crossing partitions, free multiplicative moments from
truncated S-transform series, and the rest are closed forms.
"""
from functools import lru_cache
from itertools import combinations

import numpy as np


# -- non-crossing partitions ----------------------------------------------------

def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k in range(len(rest) + 1):
        for others in combinations(rest, k):
            block = [first, *others]
            remaining = [x for x in rest if x not in others]
            for tail in set_partitions(remaining):
                yield [block, *tail]


def is_noncrossing(partition):
    for a in partition:
        for b in partition:
            if a is b:
                continue
            for i, k in combinations(a, 2):
                for j, l in combinations(b, 2):
                    if i < j < k < l:
                        return False
    return True


@lru_cache(maxsize=None)
def nc_partitions(n):
    return tuple(tuple(tuple(b) for b in p)
                 for p in set_partitions(range(n)) if is_noncrossing(p))


def moments_from_free_cumulants(kappa, n):
    """``m_k = sum over NC(k) of prod kappa_{|block|}`` for ``k = 1..n``."""
    return [sum(np.prod([kappa[len(b) - 1] for b in p]) for p in nc_partitions(k))
            for k in range(1, n + 1)]


def free_cumulants(m):
    """Invert the moment-cumulant relation recursively."""
    kappa = []
    for k in range(1, len(m) + 1):
        kappa.append(0.0)
        rest = sum(np.prod([kappa[len(b) - 1] for b in p])
                   for p in nc_partitions(k) if len(p) > 1)
        kappa[-1] = m[k - 1] - rest
    return kappa


def atomic_moments(x, w, n):
    x, w = np.asarray(x, float), np.asarray(w, float)
    return [float(np.sum(w * x ** k)) for k in range(1, n + 1)]


def free_additive_moments(m_mu, m_nu):
    n = len(m_mu)
    k = [a + b for a, b in zip(free_cumulants(m_mu), free_cumulants(m_nu))]
    return moments_from_free_cumulants(k, n)


# -- truncated power series ---------------------------------------------------------

def _mul(a, b, n):
    out = np.zeros(n + 1)
    for i, ai in enumerate(a[:n + 1]):
        out[i:n + 1] += ai * b[:n + 1 - i]
    return out


def _compose_inverse(f, n):
    """Coefficients of g with g(f(z)) = z, given f(0) = 0, f'(0) != 0."""
    g = np.zeros(n + 1)
    g[1] = 1.0 / f[1]
    for k in range(2, n + 1):
        # coefficient of z^k in sum_j g_j f^j must vanish
        power = f.copy()
        total = 0.0
        for j in range(1, k):
            total += g[j] * power[k]
            power = _mul(power, f, n)
        g[k] = -total / f[1] ** k
    return g


def _reciprocal(a, n):
    out = np.zeros(n + 1)
    out[0] = 1.0 / a[0]
    for k in range(1, n + 1):
        out[k] = -sum(a[j] * out[k - j] for j in range(1, k + 1)) / a[0]
    return out


def s_transform(m, n):
    """Coefficients of ``S(z)`` to order ``n - 1`` from moments ``m_1..m_n``."""
    psi = np.zeros(n + 1)
    psi[1:] = m[:n]
    chi = _compose_inverse(psi, n)
    # S = chi(z) (1 + z) / z
    shifted = np.append(chi[1:], 0.0)
    return _mul(shifted, np.r_[1.0, 1.0, np.zeros(n - 1)], n)


def free_multiplicative_moments(m_mu, m_nu):
    """Moments of the free multiplicative convolution from ``S_mu S_nu``."""
    n = len(m_mu)
    S = _mul(s_transform(m_mu, n), s_transform(m_nu, n), n)
    # chi(z) = S(z) z / (1 + z)
    geo = _reciprocal(np.r_[1.0, 1.0, np.zeros(n - 1)], n)
    chi = np.r_[0.0, _mul(S, geo, n)[:n]]
    psi = _compose_inverse(chi, n)
    return list(psi[1:])


# -- closed forms ----------------------------------------------------------------------

def semicircle_F(z, variance):
    """Reciprocal Cauchy transform of the centered semicircle law, Im F >= Im z."""
    z = np.asarray(z, dtype=complex)
    r = 2.0 * np.sqrt(variance)
    root = np.sqrt(z - r) * np.sqrt(z + r)
    return 2.0 * variance / (z - root)


def arcsine_G(z):
    z = np.asarray(z, dtype=complex)
    return 1.0 / (np.sqrt(z - 2.0) * np.sqrt(z + 2.0))


def dirac_bernoulli_closed_form(x, p):
    """Atoms of the point mass at x monotone-convolved with p d_1 + (1-p) d_-1."""
    root = np.sqrt(x * x + 4 * (2 * p - 1) * x + 4)
    z1 = (x + root) / 2
    z2 = (x - root) / 2
    q = (x + 4 * p - 2 + root) / (2 * root)
    return z1, z2, q
