"""Discrete geodesic caps of the hyperbolic plane.

The cap is ``{r <= r_max}`` in geodesic polar coordinates ``(r, theta)`` on
the unit hyperboloid, with base metric ``dr^2 + sinh(r)^2 dtheta^2``.  Radial
nodes are staggered, ``r_j = (j + 1/2) dr``, so no node sits on the pole.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .symmetric import SymMatrixField

__all__ = [
    "HyperbolicCap",
    "build_cap",
    "metric_at",
    "christoffel_at",
    "curvature_tensor",
    "verify_constant_curvature",
]


@dataclass(frozen=True, eq=False)
class HyperbolicCap:
    n: int
    r_max: float
    Nr: int
    Ntheta: int
    pole_filter: bool = True
    r: np.ndarray = field(init=False, repr=False)
    theta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        dr = self.r_max / self.Nr
        dtheta = 2.0 * np.pi / self.Ntheta
        r = (np.arange(self.Nr) + 0.5) * dr
        theta = np.arange(self.Ntheta) * dtheta
        R, TH = np.meshgrid(r, theta, indexing="ij")
        sh, ch = np.sinh(R), np.cosh(R)
        for k, v in dict(
            dr=dr, dtheta=dtheta, r=r, theta=theta, R=R, TH=TH,
            sinh_r=sh, cosh_r=ch,
        ).items():
            set_(k, v)
        set_("sigma", SymMatrixField.from_components(np.ones_like(R), 0.0, sh * sh))
        set_("sigma_inv", SymMatrixField.from_components(np.ones_like(R), 0.0, 1.0 / (sh * sh)))
        set_("det_sigma", sh * sh)
        # nonzero Christoffel symbols of the polar chart
        set_("gamma_t_rt", ch / sh)
        set_("gamma_r_tt", -sh * ch)
        mask = np.zeros(R.shape, dtype=bool)
        mask[-1, :] = True
        set_("boundary_mask", mask)
        mu = np.zeros((2,) + R.shape)
        mu[0, -1, :] = 1.0
        set_("mu", mu)
        keep = self._angular_cutoff()
        set_("_keep_modes", keep)
        set_("_filtered_rings", np.flatnonzero(~keep.all(axis=1)))
        # unresolved mode m on ring j is copied from the innermost ring J that
        # keeps it, scaled by (sinh r_j / sinh r_J)^m like a smooth function
        src = np.where(keep.any(axis=0), np.argmax(keep, axis=0), -1)
        ratio = np.sinh(r)[:, None] / np.sinh(r[np.maximum(src, 0)])[None, :]
        modes = np.arange(keep.shape[1])[None, :]
        fac = np.where(src[None, :] >= 0, ratio**modes, 0.0)
        set_("_slave_source", src)
        set_("_slave_factor", np.where(keep, 1.0, fac))
        m = np.array([np.flatnonzero(row).max() for row in keep])
        set_("_max_kept_mode", m)
        s = np.sin(0.5 * m * dtheta)
        h_theta = np.sinh(r) * dtheta / np.where(s > 0, s, np.nan)
        set_("_h_min", float(min(dr, np.nanmin(h_theta))))

    def _angular_cutoff(self):
        # Largest angular mode kept on each ring so that its physical
        # wavenumber does not exceed the radial Nyquist wavenumber 2/dr.
        half = self.Ntheta // 2
        m = np.arange(half + 1)
        kt = 2.0 * np.sin(0.5 * m * self.dtheta)[None, :] / (
            np.sinh(self.r)[:, None] * self.dtheta
        )
        keep = kt <= 2.0 / self.dr * (1.0 + 1e-12)
        if not self.pole_filter:
            keep[:] = True
        return keep

    @property
    def shape(self):
        return (self.Nr, self.Ntheta)

    @property
    def filtered_rings(self):
        """Indices of rings on which some angular modes are not resolved."""
        return self._filtered_rings

    @property
    def max_kept_mode(self):
        return self._max_kept_mode

    @property
    def h_min(self):
        """Smallest effective node spacing, measured with the base metric.

        On filtered rings the effective angular spacing is that of the
        highest retained mode rather than ``sinh(r) dtheta``.
        """
        return self._h_min

    @property
    def boundary_convexity(self):
        """Second fundamental form of the boundary circle w.r.t. ``mu``,
        relative to its induced metric (``coth r_max``)."""
        return 1.0 / np.tanh(self.r_max)

    def node_index(self, node):
        j, k = node
        if not (0 <= j < self.Nr and 0 <= k < self.Ntheta):
            raise IndexError(f"node {node} outside grid {self.shape}")
        return j, k


def build_cap(n=2, r_max=1.0, Nr=64, Ntheta=128, pole_filter=True) -> HyperbolicCap:
    """Build the staggered polar grid on the geodesic ball of radius ``r_max``."""
    if n != 2:
        raise ValueError("only n = 2 grids are supported")
    if not r_max > 0:
        raise ValueError(f"r_max must be positive, got {r_max}")
    if int(Nr) != Nr or Nr < 4:
        raise ValueError(f"Nr must be an integer >= 4, got {Nr}")
    if int(Ntheta) != Ntheta or Ntheta < 8:
        raise ValueError(f"Ntheta must be an integer >= 8, got {Ntheta}")
    if Ntheta % 2:
        raise ValueError(f"Ntheta must be even for the antipodal pole ghost, got {Ntheta}")
    return HyperbolicCap(int(n), float(r_max), int(Nr), int(Ntheta), bool(pole_filter))


def metric_at(cap: HyperbolicCap, node):
    """Base metric, its inverse and determinant at ``node = (j, k)``."""
    j, _ = cap.node_index(node)
    s2 = np.sinh(cap.r[j]) ** 2
    sigma = np.array([[1.0, 0.0], [0.0, s2]])
    sigma_inv = np.array([[1.0, 0.0], [0.0, 1.0 / s2]])
    return sigma, sigma_inv, s2


def christoffel_at(cap: HyperbolicCap, node):
    """Christoffel symbols ``G[k, i, j] = Gamma^k_{ij}`` at ``node``.

    Index 0 is ``r`` and index 1 is ``theta``.
    """
    j, _ = cap.node_index(node)
    return _christoffel_analytic(cap.r[j])


def _christoffel_analytic(r):
    g = np.zeros((2, 2, 2))
    g[1, 0, 1] = g[1, 1, 0] = np.cosh(r) / np.sinh(r)
    g[0, 1, 1] = -np.sinh(r) * np.cosh(r)
    return g


def _christoffel_analytic_dr(r):
    g = np.zeros((2, 2, 2))
    g[1, 0, 1] = g[1, 1, 0] = -1.0 / np.sinh(r) ** 2
    g[0, 1, 1] = -np.cosh(2.0 * r)
    return g


def _christoffel_fd(r, h):
    # from centred differences of sigma_tt = sinh^2
    s_tt = lambda x: np.sinh(x) ** 2  # noqa: E731
    d_tt = (s_tt(r + h) - s_tt(r - h)) / (2.0 * h)
    g = np.zeros((2, 2, 2))
    g[1, 0, 1] = g[1, 1, 0] = 0.5 * d_tt / s_tt(r)
    g[0, 1, 1] = -0.5 * d_tt
    return g


def curvature_tensor(gamma, dgamma_dr, sigma):
    """All-lower curvature components ``R[i, j, k, l]`` for an ``r``-only chart.

    Uses the sign convention ``R(X,Y)Z = -D_X D_Y Z + D_Y D_X Z + D_[X,Y] Z``
    and lowers the output slot with ``sigma`` as the last index.
    """
    dg = np.zeros((2, 2, 2, 2))  # dg[p, m, j, k] = d_p Gamma^m_{jk}
    dg[0] = dgamma_dr
    Rup = np.zeros((2, 2, 2, 2))  # Rup[i, j, k, m] = R^m_{ijk}
    for i, j, k, m in product(range(2), repeat=4):
        std = (
            dg[i, m, j, k]
            - dg[j, m, i, k]
            + sum(gamma[m, i, p] * gamma[p, j, k] - gamma[m, j, p] * gamma[p, i, k] for p in range(2))
        )
        Rup[i, j, k, m] = -std
    return np.einsum("ijkm,ml->ijkl", Rup, sigma)


def verify_constant_curvature(cap: HyperbolicCap, christoffel="analytic", h=None) -> float:
    """Max deviation of the curvature tensor from the constant-curvature
    model ``sigma_il sigma_jk - sigma_ik sigma_jl`` over all rings.

    ``christoffel="fd"`` builds the symbols and their radial derivative by
    centred differences with step ``h`` (default ``cap.dr``).  The step is
    scaled by ``r / r_max`` on each ring so that no stencil reaches across
    the pole, where ``coth r`` is singular.
    """
    if christoffel not in ("analytic", "fd"):
        raise ValueError("christoffel must be 'analytic' or 'fd'")
    h = cap.dr if h is None else h
    worst = 0.0
    for r in cap.r:
        sigma = np.diag([1.0, np.sinh(r) ** 2])
        if christoffel == "analytic":
            gam, dgam = _christoffel_analytic(r), _christoffel_analytic_dr(r)
        else:
            hr = h * r / cap.r_max
            gam = _christoffel_fd(r, hr)
            dgam = (_christoffel_fd(r + hr, hr) - _christoffel_fd(r - hr, hr)) / (2.0 * hr)
        R = curvature_tensor(gam, dgam, sigma)
        model = np.einsum("il,jk->ijkl", sigma, sigma) - np.einsum("ik,jl->ijkl", sigma, sigma)
        worst = max(worst, float(np.abs(R - model).max()))
    return worst
