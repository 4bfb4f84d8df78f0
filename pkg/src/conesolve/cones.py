"""Symmetric cones in eigenvalue space and the elementary symmetric polynomials.

The admissibility cones used throughout are the k-positive cones

    Gamma_k = { lam in R^n : sigma_1(lam) > 0, ..., sigma_k(lam) > 0 },

together with preimages of such cones under the averaging map

    T(lam)_k = (sum_{i != k} lam_i) / (n - 1).

All membership tests are strict (the cones are open); a separate ``margin``
accessor returns the smallest sigma value so callers can damp toward the
boundary without a fudge factor baked into membership.

Every function accepts batched input: ``lam`` may have shape ``(..., n)`` and
results broadcast over the leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ConeViolation(ValueError):
    """Raised when an eigenvalue tuple is outside the required cone.

    ``index`` is the 1-based order j of the first violated sigma_j > 0
    constraint, ``value`` the offending sigma value.
    """

    def __init__(self, index: int, value: float, lam=None):
        self.index = index
        self.value = value
        self.lam = None if lam is None else np.asarray(lam)
        super().__init__(f"sigma_{index} = {value:.6g} is not > 0")


def sigma(k: int, lam) -> np.ndarray | float:
    """Elementary symmetric polynomial sigma_k of the last axis of ``lam``.

    Uses the stable O(n*k) recurrence
        e_k(x_1..x_m) = e_k(x_1..x_{m-1}) + x_m * e_{k-1}(x_1..x_{m-1})
    rather than subset enumeration.  sigma_0 = 1 by convention.
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 0 <= k <= n:
        raise ValueError(f"k must be in 0..{n}, got {k}")
    out = sigma_all(lam, k)[..., k]
    return out if out.ndim else float(out)


def sigma_all(lam, kmax: int | None = None) -> np.ndarray:
    """All sigma_0..sigma_kmax of ``lam``, stacked on a trailing axis."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if kmax is None:
        kmax = n
    e = np.zeros(lam.shape[:-1] + (kmax + 1,))
    e[..., 0] = 1.0
    for m in range(n):
        top = min(m + 1, kmax)
        for j in range(top, 0, -1):
            e[..., j] += lam[..., m] * e[..., j - 1]
    return e


def sigma_without(k: int, lam, drop: int) -> np.ndarray:
    """sigma_k of ``lam`` with component ``drop`` removed."""
    lam = np.asarray(lam, dtype=float)
    reduced = np.delete(lam, drop, axis=-1)
    n = reduced.shape[-1]
    if k > n:
        return np.zeros(lam.shape[:-1])
    return sigma_all(reduced, k)[..., k]


def t_map(lam) -> np.ndarray:
    """The averaging map T(lam)_k = (sigma_1(lam) - lam_k) / (n - 1)."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if n < 2:
        raise ValueError("t_map requires dimension n >= 2")
    s1 = lam.sum(axis=-1, keepdims=True)
    return (s1 - lam) / (n - 1)


@dataclass(frozen=True)
class GammaCone:
    """The cone Gamma_k in dimension n: sigma_1, ..., sigma_k all > 0."""

    n: int
    k: int

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")

    def contains(self, lam) -> np.ndarray | bool:
        lam = np.asarray(lam, dtype=float)
        e = sigma_all(lam, self.k)
        ok = np.all(e[..., 1:] > 0.0, axis=-1)
        return ok if ok.ndim else bool(ok)

    def margin(self, lam) -> np.ndarray | float:
        """min_{j<=k} sigma_j(lam); positive iff lam is strictly inside."""
        lam = np.asarray(lam, dtype=float)
        e = sigma_all(lam, self.k)
        m = e[..., 1:].min(axis=-1)
        return m if m.ndim else float(m)

    def violation(self, lam) -> ConeViolation:
        """The first violated constraint at a single point outside the cone."""
        lam = np.asarray(lam, dtype=float)
        e = sigma_all(lam, self.k)
        for j in range(1, self.k + 1):
            if not e[j] > 0.0:
                return ConeViolation(j, float(e[j]), lam)
        raise ValueError("point is inside the cone")


@dataclass(frozen=True)
class PreimageCone:
    """Preimage T^{-1}(inner) of a cone under the averaging map T."""

    inner: GammaCone | PreimageCone

    @property
    def n(self) -> int:
        return self.inner.n

    @property
    def k(self) -> int:  # order of the innermost Gamma_k
        return self.inner.k

    def contains(self, lam):
        return self.inner.contains(t_map(lam))

    def margin(self, lam):
        return self.inner.margin(t_map(lam))

    def violation(self, lam) -> ConeViolation:
        return self.inner.violation(t_map(np.asarray(lam, dtype=float)))


Cone = GammaCone | PreimageCone


def cone_contains(cone: Cone, lam) -> np.ndarray | bool:
    """Strict membership of ``lam`` in ``cone``."""
    return cone.contains(lam)


def projected_cone(cone: Cone) -> tuple[Cone, bool]:
    """The slice { x' in R^{n-1} : (x', 0) in cone } as a cone in R^{n-1}.

    For Gamma_k with k < n the slice is exactly Gamma_k in dimension n-1,
    since sigma_j(x', 0) = sigma_j(x').  For Gamma_n the slice is empty; by
    convention Gamma_{n-1} is returned with the flag set to False.  The
    returned flag is True when the slice is represented exactly.
    """
    n = cone.n
    if n < 2:
        raise ValueError("projection requires n >= 2")
    if isinstance(cone, GammaCone):
        if cone.k < n:
            return GammaCone(n - 1, cone.k), True
        return GammaCone(n - 1, n - 1), False
    return _SliceCone(cone), True


@dataclass(frozen=True)
class _SliceCone:
    """Generic slice of a parent cone at x_n = 0."""

    parent: Cone

    @property
    def n(self) -> int:
        return self.parent.n - 1

    def contains(self, lam):
        lam = np.asarray(lam, dtype=float)
        ext = np.concatenate([lam, np.zeros(lam.shape[:-1] + (1,))], axis=-1)
        return self.parent.contains(ext)

    def margin(self, lam):
        lam = np.asarray(lam, dtype=float)
        ext = np.concatenate([lam, np.zeros(lam.shape[:-1] + (1,))], axis=-1)
        return self.parent.margin(ext)


def _append(lam, t: float) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    pad = np.full(lam.shape[:-1] + (1,), t)
    return np.concatenate([lam, pad], axis=-1)


def in_projection(cone: Cone, mu_prime, t_factor: float = 1e8) -> np.ndarray | bool:
    """Membership of mu' in the projection of ``cone`` along the last axis.

    Checked by testing (mu', t) in cone for large t; membership in the open
    projection is monotone in t because cone + closure(Gamma_n) stays in cone.
    """
    mu_prime = np.asarray(mu_prime, dtype=float)
    scale = 1.0 + np.abs(mu_prime).max(initial=0.0)
    return cone.contains(_append(mu_prime, t_factor * scale))


def in_gamma_tilde(cone: Cone, mu, t_factor: float = 1e8) -> bool:
    """Whether mu + t*e_i lies in ``cone`` for large t, for every axis i.

    This is the natural domain on which boundedness of the level-set
    intersection (mu + Gamma_n) for f = const can be decided.
    """
    mu = np.asarray(mu, dtype=float)
    n = mu.shape[-1]
    t = t_factor * (1.0 + float(np.abs(mu).max()))
    for i in range(n):
        shifted = mu.copy()
        shifted[..., i] += t
        if not np.all(cone.contains(shifted)):
            return False
    return True
