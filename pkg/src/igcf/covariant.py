"""Second-order covariant finite differences on a :class:`HyperbolicCap`.

All derivative indices are chart indices ``(r, theta)``; covariance enters
only through the Christoffel symbols.  The radial direction is closed by two
ghost rows: the pole ghost at ``r = -dr/2`` uses the antipodal value
``f(r_0, theta + pi)`` and the outer ghost mirrors the boundary ring, which
makes the discrete normal derivative on ``r = r_max`` vanish.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import HyperbolicCap
from .symmetric import SymMatrixField

__all__ = [
    "ScalarField",
    "Jet",
    "apply_neumann_ghost",
    "partials",
    "cov_gradient",
    "cov_hessian",
    "grad_norm_sq",
    "angular_filter",
]


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Grid function on a cap; shape ``(Nr, Ntheta)``, theta-periodic."""

    values: np.ndarray
    cap: HyperbolicCap

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.cap.shape:
            raise ValueError(f"field shape {v.shape} does not match cap {self.cap.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, cap, fn):
        return cls(fn(cap.R, cap.TH), cap)

    def map(self, fn):
        return ScalarField(fn(self.values), self.cap)

    def roll_theta(self, m):
        return ScalarField(np.roll(self.values, m, axis=1), self.cap)

    def __add__(self, other):
        return ScalarField(self.values + getattr(other, "values", other), self.cap)

    def __sub__(self, other):
        return ScalarField(self.values - getattr(other, "values", other), self.cap)

    def __mul__(self, other):
        return ScalarField(self.values * getattr(other, "values", other), self.cap)

    __radd__ = __add__
    __rmul__ = __mul__

    def oscillation(self):
        return float(self.values.max() - self.values.min())


@dataclass(frozen=True, eq=False)
class Jet:
    """Value, covariant gradient and covariant Hessian of a scalar at every node.

    Either computed by finite differences (:meth:`from_field`) or supplied
    analytically, which lets the pointwise geometry kernels be checked
    independently of the stencils.
    """

    value: np.ndarray
    grad: np.ndarray  # (2, Nr, Ntheta)
    hess: SymMatrixField
    cap: HyperbolicCap

    @classmethod
    def from_field(cls, f: ScalarField):
        grad, hess = _cov_derivatives(f)
        return cls(f.values, grad, hess, f.cap)

    @classmethod
    def from_partials(cls, cap, value, fr, ft, frr, frt, ftt):
        """Build from coordinate partial derivatives."""
        fr, ft, frr, frt, ftt = (np.broadcast_to(np.asarray(a, float), cap.shape) for a in (fr, ft, frr, frt, ftt))
        grad = np.stack([fr, ft])
        hess = _covariant_hessian(cap, grad, frr, frt, ftt)
        return cls(np.broadcast_to(np.asarray(value, float), cap.shape).copy(), grad, hess, cap)


def apply_neumann_ghost(f: ScalarField) -> np.ndarray:
    """Return the radially ghost-extended array of shape ``(Nr + 2, Ntheta)``.

    Row 0 is the antipodal pole ghost and row ``Nr + 1`` the Neumann mirror
    of the boundary ring.  The input is not modified.
    """
    v = f.values
    half = f.cap.Ntheta // 2
    ext = np.empty((v.shape[0] + 2, v.shape[1]))
    ext[1:-1] = v
    ext[0] = np.roll(v[0], -half)
    ext[-1] = v[-1]
    return ext


def partials(f: ScalarField):
    """Centred coordinate partials ``(f_r, f_t, f_rr, f_rt, f_tt)``."""
    cap = f.cap
    ext = apply_neumann_ghost(f)
    up, dn = ext[2:], ext[:-2]
    v = f.values
    fr = (up - dn) / (2.0 * cap.dr)
    frr = (up - 2.0 * v + dn) / cap.dr**2
    nxt, prv = np.roll(ext, -1, axis=1), np.roll(ext, 1, axis=1)
    ft_ext = (nxt - prv) / (2.0 * cap.dtheta)
    ft = ft_ext[1:-1]
    ftt = (nxt[1:-1] - 2.0 * v + prv[1:-1]) / cap.dtheta**2
    frt = (ft_ext[2:] - ft_ext[:-2]) / (2.0 * cap.dr)
    return fr, ft, frr, frt, ftt


def _covariant_hessian(cap, grad, frr, frt, ftt):
    return SymMatrixField.from_components(
        frr,
        frt - cap.gamma_t_rt * grad[1],
        ftt - cap.gamma_r_tt * grad[0],
    )


def _cov_derivatives(f):
    fr, ft, frr, frt, ftt = partials(f)
    grad = np.stack([fr, ft])
    return grad, _covariant_hessian(f.cap, grad, frr, frt, ftt)


def cov_gradient(f: ScalarField) -> np.ndarray:
    """Covector field ``f_i`` of shape ``(2, Nr, Ntheta)``."""
    fr, ft, *_ = partials(f)
    return np.stack([fr, ft])


def cov_hessian(f: ScalarField) -> SymMatrixField:
    """Covariant Hessian ``f_ij = d_i d_j f - Gamma^k_ij f_k``."""
    return _cov_derivatives(f)[1]


def grad_norm_sq(f: ScalarField) -> np.ndarray:
    """``sigma^ij f_i f_j``."""
    g = cov_gradient(f)
    return f.cap.sigma_inv.quad(g)


def angular_filter(cap: HyperbolicCap, values: np.ndarray) -> np.ndarray:
    """Replace angular modes that are finer than the radial spacing.

    On rings near the pole, a mode too fine for the grid is not evolved on
    its own; it follows the innermost ring that resolves it, scaled by the
    ``sinh(r)^m`` decay a smooth function has there.  This removes the stiff
    pole modes without freezing them.  The transform acts on the deviation
    from the first node of each ring, so ring-constant data pass through
    bit-for-bit.
    """
    rings = cap.filtered_rings
    if rings.size == 0:
        return values
    top = rings.max() + 2  # includes the first unfiltered ring
    sub = values[:top]
    dev = sub - sub[:, :1]
    coef = np.fft.rfft(dev, axis=1)
    keep = cap._keep_modes[:top]
    src = cap._slave_source
    m = np.arange(coef.shape[1])
    slaved = coef[np.maximum(src, 0), m][None, :] * cap._slave_factor[:top]
    change = np.where(keep, 0.0, slaved - coef)
    out = values.copy()
    out[:top] = sub + np.fft.irfft(change, n=cap.Ntheta, axis=1)
    return out
