"""Fundamental measure free-energy densities.

Hard spheres use Rosenfeld's functional with six weighted densities. Hard
disks use the two-dimensional functional with scalar, vector and tensor
weighted densities. Because all species share one radius, the solvers work
with reduced variables: ``(n2, n3, v)`` for spheres and ``(n2, n3, v, T)``
for disks, from which the remaining weighted densities follow by constant
factors. The reduced forms provide analytic gradients and Hessians.
"""

from __future__ import annotations

import numpy as np


class PackingError(ValueError):
    """Raised when the local packing fraction reaches 1."""


def _check_packing(n3) -> None:
    n3 = np.asarray(n3)
    bad = ~(n3 < 1.0)
    if np.any(bad):
        idx = np.unravel_index(int(np.flatnonzero(bad.ravel())[0]), n3.shape) if n3.ndim else ()
        raise PackingError(f"packing fraction n3 >= 1 at index {idx} (n3 = {n3[idx]!r})")


def hs_free_energy_density(n0, n1, n2, n3, nv1, nv2):
    """Rosenfeld free-energy density and its partial derivatives.

    Parameters
    ----------
    n0, n1, n2, n3 : array_like
        Scalar weighted densities.
    nv1, nv2 : array_like
        Vector weighted densities, leading axis holding the components.

    Returns
    -------
    phi : ndarray
    partials : tuple of ndarray
        ``(d/dn0, d/dn1, d/dn2, d/dn3, d/dnv1, d/dnv2)``; vector partials keep
        the component axis.
    """
    n0, n1, n2, n3 = (np.asarray(a, dtype=float) for a in (n0, n1, n2, n3))
    nv1 = np.asarray(nv1, dtype=float)
    nv2 = np.asarray(nv2, dtype=float)
    _check_packing(n3)
    D = 1.0 - n3
    lnD = np.log(D)
    v12 = np.sum(nv1 * nv2, axis=0)
    v22 = np.sum(nv2 * nv2, axis=0)
    c = 1.0 / (24.0 * np.pi)
    phi = -n0 * lnD + (n1 * n2 - v12) / D + c * (n2**3 - 3.0 * n2 * v22) / D**2
    d0 = -lnD
    d1 = n2 / D
    d2 = n1 / D + 3.0 * c * (n2**2 - v22) / D**2
    d3 = n0 / D + (n1 * n2 - v12) / D**2 + 2.0 * c * (n2**3 - 3.0 * n2 * v22) / D**3
    dv1 = -nv2 / D
    dv2 = -nv1 / D - 6.0 * c * n2 * nv2 / D**2
    return phi, (d0, d1, d2, d3, dv1, dv2)


def hs_reduced(n2, n3, v, R: float = 0.5, order: int = 1):
    """Rosenfeld density in the reduced variables of a single radius.

    Uses ``n0 = n2 / (4 pi R^2)``, ``n1 = n2 / (4 pi R)`` and
    ``nv1 = v / (4 pi R)`` with ``v = nv2``.

    Parameters
    ----------
    n2, n3 : ndarray
    v : ndarray
        Vector density with a leading component axis (any length).
    order : {0, 1, 2}
        Highest derivative order returned.

    Returns
    -------
    phi, grad, hess
        ``grad = (d2, d3, dv)`` and ``hess`` a dict keyed by pairs of
        ``"2"``, ``"3"``, ``"v"``; ``hess["vv"]`` is the diagonal factor
        multiplying the identity in component space, ``hess["2v"]`` and
        ``hess["3v"]`` keep the component axis.
    """
    n2 = np.asarray(n2, dtype=float)
    n3 = np.asarray(n3, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_packing(n3)
    a = 1.0 / (4.0 * np.pi * R * R)
    b = 1.0 / (4.0 * np.pi * R)
    c = 1.0 / (24.0 * np.pi)
    d = 1.0 / (8.0 * np.pi)
    D = 1.0 - n3
    lnD = np.log(D)
    s = np.sum(v * v, axis=0)
    phi = -a * n2 * lnD + b * (n2**2 - s) / D + c * n2**3 / D**2 - d * n2 * s / D**2
    if order == 0:
        return phi
    g2 = -a * lnD + 2.0 * b * n2 / D + 3.0 * c * n2**2 / D**2 - d * s / D**2
    g3 = a * n2 / D + b * (n2**2 - s) / D**2 + 2.0 * c * n2**3 / D**3 - 2.0 * d * n2 * s / D**3
    gvf = -2.0 * b / D - 2.0 * d * n2 / D**2
    gv = gvf * v
    if order == 1:
        return phi, (g2, g3, gv)
    hess = {
        "22": 2.0 * b / D + 6.0 * c * n2 / D**2,
        "23": a / D + 2.0 * b * n2 / D**2 + 6.0 * c * n2**2 / D**3 - 2.0 * d * s / D**3,
        "33": a * n2 / D**2
        + 2.0 * b * (n2**2 - s) / D**3
        + 6.0 * c * n2**3 / D**4
        - 6.0 * d * n2 * s / D**4,
        "2v": -2.0 * d * v / D**2,
        "3v": (-2.0 * b / D**2 - 4.0 * d * n2 / D**3) * v,
        "vv": gvf,
    }
    return phi, (g2, g3, gv), hess


def hd_free_energy_density(n0, n2, n3, nv, nt):
    """Hard-disk free-energy density and partial derivatives.

    Parameters
    ----------
    n0, n2, n3 : array_like
        Scalar weighted densities (``n3`` is the local area fraction).
    nv : array_like, shape (2, ...)
        Vector weighted density.
    nt : array_like, shape (2, 2, ...)
        Symmetric tensor weighted density.

    Returns
    -------
    phi : ndarray
    partials : tuple
        ``(d/dn0, d/dn2, d/dn3, d/dnv, d/dnt)`` with the component axes of
        the inputs.
    """
    n0, n2, n3 = (np.asarray(a, dtype=float) for a in (n0, n2, n3))
    nv = np.asarray(nv, dtype=float)
    nt = np.asarray(nt, dtype=float)
    _check_packing(n3)
    D = 1.0 - n3
    vv = np.sum(nv * nv, axis=0)
    tt = np.sum(nt * nt, axis=(0, 1))
    q = 19.0 / 12.0 * n2**2 - 5.0 / 12.0 * vv - 7.0 / 6.0 * tt
    k = 1.0 / (4.0 * np.pi)
    phi = -n0 * np.log(D) + k * q / D
    d0 = -np.log(D)
    d2 = k * 19.0 / 6.0 * n2 / D
    d3 = n0 / D + k * q / D**2
    dv = -k * 5.0 / 6.0 * nv / D
    dt = -k * 7.0 / 3.0 * nt / D
    return phi, (d0, d2, d3, dv, dt)


# symmetric tensor components are stored as (xx, xy, yy); xy counts twice in T:T
_TT_MULT = np.array([1.0, 2.0, 1.0])


def hd_reduced(n2, n3, v, t, R: float = 0.5, order: int = 1):
    """Hard-disk density in reduced variables with ``n0 = n2 / (2 pi R)``.

    Parameters
    ----------
    v : ndarray, shape (2, ...)
    t : ndarray, shape (3, ...)
        Tensor components ``(xx, xy, yy)``.

    Returns
    -------
    phi, grad, hess
        ``grad = (d2, d3, dv, dt)``. The Hessian is returned as a dict with
        the non-zero blocks; ``"vv"`` and ``"tt"`` are diagonal factors.
    """
    n2 = np.asarray(n2, dtype=float)
    n3 = np.asarray(n3, dtype=float)
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    _check_packing(n3)
    a = 1.0 / (2.0 * np.pi * R)
    k = 1.0 / (4.0 * np.pi)
    m = _TT_MULT.reshape((3,) + (1,) * (t.ndim - 1))
    D = 1.0 - n3
    lnD = np.log(D)
    vv = np.sum(v * v, axis=0)
    tt = np.sum(m * t * t, axis=0)
    q = 19.0 / 12.0 * n2**2 - 5.0 / 12.0 * vv - 7.0 / 6.0 * tt
    phi = -a * n2 * lnD + k * q / D
    if order == 0:
        return phi
    g2 = -a * lnD + k * 19.0 / 6.0 * n2 / D
    g3 = a * n2 / D + k * q / D**2
    gv = -k * 5.0 / 6.0 * v / D
    gt = -k * 7.0 / 3.0 * m * t / D
    if order == 1:
        return phi, (g2, g3, gv, gt)
    hess = {
        "22": k * 19.0 / 6.0 / D,
        "23": a / D + k * 19.0 / 6.0 * n2 / D**2,
        "33": a * n2 / D**2 + 2.0 * k * q / D**3,
        "3v": -k * 5.0 / 6.0 * v / D**2,
        "3t": -k * 7.0 / 3.0 * m * t / D**2,
        "vv": -k * 5.0 / 6.0 / D,
        "tt": -k * 7.0 / 3.0 * m / D,
    }
    return phi, (g2, g3, gv, gt), hess


def uniform_weighted_densities(n, kind: str = "hs", R: float = 0.5, normalized: bool = False):
    """Weighted densities of a uniform fluid (reduced variables)."""
    n = np.asarray(n, dtype=float)
    if kind == "hs":
        return {"n2": 4.0 * np.pi * R**2 * n, "n3": 4.0 / 3.0 * np.pi * R**3 * n}
    if kind == "hd":
        tscale = np.pi * R if normalized else np.pi * R**3
        return {"n2": 2.0 * np.pi * R * n, "n3": np.pi * R**2 * n, "t": tscale * n}
    raise ValueError(f"unknown functional {kind!r}")
