"""Geometry of the spacelike radial graph ``{u(x) x : x in M}``.

With ``phi = log u`` the graph is described by

* tilt ``v = sqrt(1 - |D phi|^2)``,
* ``iota_ij = phi_ij + sigma_ij - phi_i phi_j``,
* induced metric ``g_ij = u^2 sigma_ij - u_i u_j``,
* second fundamental form ``h_ij = (u_ij + u sigma_ij - 2 u_i u_j / u) / v``,
* Gauss curvature ``K = det h / det g``
  ``= exp(-n phi) (1 - |D phi|^2)^(-(n+2)/2) det(iota) / det(sigma)``,
* flow speed ``Q = -(1 - |D phi|^2)^((n+1)/n) (det sigma / det iota)^(1/n)``.

Every function accepts either a :class:`ScalarField` (derivatives by finite
differences) or a :class:`Jet` (derivatives supplied by the caller).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .covariant import Jet, ScalarField, apply_neumann_ghost
from .symmetric import SymMatrixField, outer

__all__ = [
    "AdmissibilityError",
    "NotSpacelike",
    "NonConvex",
    "GeometryBundle",
    "geometry_bundle",
    "frame_eigs",
    "tilt_v",
    "iota_matrix",
    "induced_metric",
    "induced_metric_inverse_closed_form",
    "second_fundamental",
    "gauss_curvature_u",
    "gauss_curvature_phi",
    "rhs_Q",
    "linearization",
    "EmbeddingReport",
    "embedding_oracle",
    "gauss_formula_residual",
]


class AdmissibilityError(ValueError):
    """A state left the class of strictly convex spacelike graphs."""

    def __init__(self, message, node=None, value=None):
        super().__init__(message)
        self.node = node
        self.value = value


class NotSpacelike(AdmissibilityError):
    pass


class NonConvex(AdmissibilityError):
    pass


def _jet(f) -> Jet:
    if isinstance(f, Jet):
        return f
    if isinstance(f, ScalarField):
        return Jet.from_field(f)
    raise TypeError(f"expected ScalarField or Jet, got {type(f).__name__}")


def _worst(arr, largest=True):
    idx = np.unravel_index(np.argmax(arr) if largest else np.argmin(arr), arr.shape)
    return tuple(int(i) for i in idx), float(arr[idx])


def _require_spacelike(grad_sq):
    if not np.all(grad_sq < 1.0):
        node, val = _worst(np.where(np.isfinite(grad_sq), grad_sq, np.inf))
        raise NotSpacelike(f"|D phi|^2 = {val:.6g} >= 1 at node {node}", node, val)


def frame_eigs(m: SymMatrixField, cap):
    """Eigenvalues of ``m`` relative to the base metric (orthonormal frame)."""
    s = cap.sinh_r
    a, b, c = m.rr, m.rt / s, m.tt / (s * s)
    mean = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    return mean - rad, mean + rad


def tilt_v(phi):
    j = _jet(phi)
    p = j.cap.sigma_inv.quad(j.grad)
    _require_spacelike(p)
    return np.sqrt(1.0 - p)


def iota_matrix(phi) -> SymMatrixField:
    j = _jet(phi)
    return j.hess + j.cap.sigma - outer(j.grad)


def induced_metric(u):
    """``(g, g_inv)`` with ``g_inv`` from numeric inversion."""
    j = _jet(u)
    cap = j.cap
    p = cap.sigma_inv.quad(j.grad) / j.value**2
    _require_spacelike(p)
    g = cap.sigma * j.value**2 - outer(j.grad)
    return g, g.inv()


def induced_metric_inverse_closed_form(u) -> SymMatrixField:
    """``g^ij = (sigma^ij + u^i u^j / (u^2 v^2)) / u^2``."""
    j = _jet(u)
    cap = j.cap
    up = cap.sigma_inv.apply(j.grad)
    v2 = 1.0 - cap.sigma_inv.quad(j.grad) / j.value**2
    return (cap.sigma_inv + outer(up) * (1.0 / (j.value**2 * v2))) * (1.0 / j.value**2)


def second_fundamental(u) -> SymMatrixField:
    j = _jet(u)
    cap = j.cap
    p = cap.sigma_inv.quad(j.grad) / j.value**2
    _require_spacelike(p)
    v = np.sqrt(1.0 - p)
    return (j.hess + cap.sigma * j.value - outer(j.grad) * (2.0 / j.value)) * (1.0 / v)


def gauss_curvature_u(u) -> np.ndarray:
    g, _ = induced_metric(u)
    dg = g.det()
    if np.any(dg <= 0):
        node, val = _worst(dg, largest=False)
        raise NotSpacelike(f"degenerate induced metric at node {node}", node, val)
    return second_fundamental(u).det() / dg


def gauss_curvature_phi(phi) -> np.ndarray:
    j = _jet(phi)
    cap = j.cap
    n = cap.n
    p = cap.sigma_inv.quad(j.grad)
    _require_spacelike(p)
    iota = j.hess + cap.sigma - outer(j.grad)
    return np.exp(-n * j.value) / (1.0 - p) ** ((n + 2) / 2) * iota.det() / cap.det_sigma


def rhs_Q(phi) -> np.ndarray:
    return geometry_bundle(phi).Q


def linearization(phi, phi_t=None):
    """``(Q^ij, Q^k)``: derivatives of ``Q`` w.r.t. ``phi_ij`` and ``phi_k``."""
    b = geometry_bundle(phi)
    return b.Qij(phi_t), b.Qk(phi_t)


@dataclass(eq=False)
class GeometryBundle:
    """Per-node geometry of one state ``phi``.

    The quantities needed for time stepping are computed eagerly; the rest
    (``g``, ``h``, ``K`` ...) on first access.
    """

    jet: Jet
    grad_sq: np.ndarray
    iota: SymMatrixField
    det_iota: np.ndarray
    iota_eig: tuple
    Q: np.ndarray

    @property
    def cap(self):
        return self.jet.cap

    @property
    def n(self):
        return self.cap.n

    @property
    def phi(self):
        return self.jet.value

    @property
    def dphi(self):
        return self.jet.grad

    @cached_property
    def u(self):
        return np.exp(self.jet.value)

    @cached_property
    def v(self):
        return np.sqrt(1.0 - self.grad_sq)

    @property
    def eigmin_iota(self):
        return float(self.iota_eig[0].min())

    @cached_property
    def iota_inv(self):
        return self.iota.inv()

    @cached_property
    def g(self):
        # u_i = u phi_i
        return (self.cap.sigma - outer(self.dphi)) * self.u**2

    @cached_property
    def g_inv(self):
        return self.g.inv()

    @cached_property
    def h(self):
        # h_ij reduces to (u / v) iota_ij when written in phi
        return self.iota * (self.u / self.v)

    @cached_property
    def K(self):
        n = self.n
        return np.exp(-n * self.phi) / self.v ** (n + 2) * self.det_iota / self.cap.det_sigma

    def Qij(self, phi_t=None) -> SymMatrixField:
        phi_t = self.Q if phi_t is None else np.asarray(phi_t)
        return self.iota_inv * (-phi_t / self.n)

    def Qk(self, phi_t=None) -> np.ndarray:
        phi_t = self.Q if phi_t is None else np.asarray(phi_t)
        n = self.n
        m = self.cap.sigma_inv * ((n + 1) / (1.0 - self.grad_sq)) - self.iota_inv
        return m.apply(self.dphi) * (-2.0 * phi_t / n)

    @property
    def parabolicity(self):
        """Largest eigenvalue of ``Q^ij`` relative to the base metric, per node."""
        return -self.Q / self.n / self.iota_eig[0]

    @property
    def det_ratio(self):
        """``det(iota) / det(sigma)``, the chart-invariant determinant."""
        return self.det_iota / self.cap.det_sigma


def geometry_bundle(phi, floor=0.0, check=True) -> GeometryBundle:
    """Evaluate the stepping geometry of ``phi``.

    With ``check`` the state must be spacelike and satisfy
    ``eigmin(iota) > floor``; violations raise with the worst node.
    """
    j = _jet(phi)
    cap = j.cap
    n = cap.n
    p = cap.sigma_inv.quad(j.grad)
    if check:
        _require_spacelike(p)
    iota = j.hess + cap.sigma - outer(j.grad)
    eig = frame_eigs(iota, cap)
    if check and not np.all(eig[0] > floor):
        node, val = _worst(np.where(np.isfinite(eig[0]), eig[0], -np.inf), largest=False)
        raise NonConvex(f"eigmin(iota) = {val:.6g} <= {floor:g} at node {node}", node, val)
    det_iota = iota.det()
    with np.errstate(invalid="ignore", divide="ignore"):
        Q = -((1.0 - p) ** ((n + 1) / n)) * (cap.det_sigma / det_iota) ** (1.0 / n)
    return GeometryBundle(j, p, iota, det_iota, eig, Q)


# ---------------------------------------------------------------------------
# embedding oracle

def _lor(a, b):
    return a[0] * b[0] + a[1] * b[1] - a[2] * b[2]


def _hyperboloid(r, th):
    sh, ch = np.sinh(r), np.cosh(r)
    c, s = np.cos(th), np.sin(th)
    x = np.stack([sh * c, sh * s, ch])
    xr = np.stack([ch * c, ch * s, sh])
    xt = np.stack([-sh * s, sh * c, np.zeros_like(sh)])
    xrt = np.stack([-ch * s, ch * c, np.zeros_like(sh)])
    xtt = np.stack([-sh * c, -sh * s, np.zeros_like(sh)])
    return x, xr, xt, x, xrt, xtt  # x_rr = x


@dataclass(eq=False)
class EmbeddingReport:
    g: SymMatrixField
    h: SymMatrixField
    K: np.ndarray
    nu: np.ndarray
    X: np.ndarray
    tangents: tuple
    second: tuple
    residuals: dict


def embedding_oracle(u, analytic_partials=None) -> EmbeddingReport:
    """Brute-force geometry of ``X = u(x) x`` from ambient derivatives.

    By default ``X`` is differenced on the ghost-extended grid.  Passing
    ``analytic_partials = (ur, ut, urr, urt, utt)`` (coordinate partials of
    ``u``) differentiates the embedding exactly instead.  The normal is the
    past-directed unit timelike vector orthogonal to both tangents.
    """
    if isinstance(u, Jet):
        raise TypeError("embedding_oracle needs a ScalarField")
    cap = u.cap
    if cap.n != 2:
        raise ValueError("embedding oracle is implemented for n = 2")
    dr, dt = cap.dr, cap.dtheta
    if analytic_partials is None:
        r_ext = np.concatenate([[-0.5 * dr], cap.r, [cap.r_max + 0.5 * dr]])
        Rx, Tx = np.meshgrid(r_ext, cap.theta, indexing="ij")
        x_ext = _hyperboloid(Rx, Tx)[0]
        X = apply_neumann_ghost(u)[None] * x_ext
        up, dn, mid = X[:, 2:], X[:, :-2], X[:, 1:-1]
        Er = (up - dn) / (2 * dr)
        Err = (up - 2 * mid + dn) / dr**2
        nxt, prv = np.roll(X, -1, axis=2), np.roll(X, 1, axis=2)
        Et_ext = (nxt - prv) / (2 * dt)
        Et = Et_ext[:, 1:-1]
        Ett = (nxt[:, 1:-1] - 2 * mid + prv[:, 1:-1]) / dt**2
        Ert = (Et_ext[:, 2:] - Et_ext[:, :-2]) / (2 * dr)
        X = mid
    else:
        ur, ut, urr, urt, utt = (np.broadcast_to(a, cap.shape) for a in analytic_partials)
        x, xr, xt, xrr, xrt, xtt = _hyperboloid(cap.R, cap.TH)
        uu = u.values
        X = uu * x
        Er = ur * x + uu * xr
        Et = ut * x + uu * xt
        Err = urr * x + 2 * ur * xr + uu * xrr
        Ert = urt * x + ur * xt + ut * xr + uu * xrt
        Ett = utt * x + 2 * ut * xt + uu * xtt
    g = SymMatrixField.from_components(_lor(Er, Er), _lor(Er, Et), _lor(Et, Et))
    if np.any(g.det() <= 0):
        node, val = _worst(g.det(), largest=False)
        raise NotSpacelike(f"embedding not spacelike at node {node}", node, val)
    # Lorentzian cross product: J (a x b) is L-orthogonal to a and b
    c = np.cross(Er, Et, axis=0)
    nrm = c * np.array([1.0, 1.0, -1.0])[:, None, None]
    q = _lor(nrm, nrm)
    if np.any(q >= 0):
        node, val = _worst(q)
        raise NotSpacelike(f"no timelike normal at node {node}", node, val)
    nu = nrm / np.sqrt(-q)
    nu = np.where(nu[2] > 0, -nu, nu)  # past-directed
    h = SymMatrixField.from_components(_lor(Err, nu), _lor(Ert, nu), _lor(Ett, nu))
    K = h.det() / g.det()

    # residuals of the closed-form normal against tangents built from the
    # same derivatives of u
    jet = Jet.from_field(u) if analytic_partials is None else None
    if jet is None:
        ur, ut = analytic_partials[0], analytic_partials[1]
        du = np.stack(np.broadcast_arrays(ur, ut))
    else:
        du = jet.grad
    x, xr, xt = _hyperboloid(cap.R, cap.TH)[:3]
    uu = u.values
    p = cap.sigma_inv.quad(du) / uu**2
    v = np.sqrt(1.0 - p)
    up = cap.sigma_inv.apply(du)
    nu_f = -(x + (up[0] * xr + up[1] * xt) / uu) / v
    Ea_r, Ea_t = du[0] * x + uu * xr, du[1] * x + uu * xt
    residuals = {
        "normal_norm": float(np.abs(_lor(nu_f, nu_f) + 1.0).max()),
        "normal_tangent": float(max(np.abs(_lor(nu_f, Ea_r)).max(), np.abs(_lor(nu_f, Ea_t)).max())),
        "oracle_normal_norm": float(np.abs(_lor(nu, nu) + 1.0).max()),
        "oracle_normal_tangent": float(max(np.abs(_lor(nu, Er)).max(), np.abs(_lor(nu, Et)).max())),
        "normal_vs_oracle": float(np.abs(nu_f - nu).max()),
    }
    return EmbeddingReport(g, h, K, nu, X, (Er, Et), (Err, Ert, Ett), residuals)


def gauss_formula_residual(rep: EmbeddingReport, h_formula: SymMatrixField) -> float:
    """Max Euclidean size of ``X_{,ij} + h_ij nu`` over nodes and index pairs.

    ``X_{,ij}`` is the ambient second derivative with its tangential part
    removed; ``h_ij`` comes from the closed-form second fundamental form, so
    the residual measures agreement of the two routes.
    """
    Er, Et = rep.tangents
    ginv = rep.g.inv()
    worst = 0.0
    for E2, hc in zip(rep.second, (h_formula.rr, h_formula.rt, h_formula.tt)):
        a = _lor(E2, Er)
        b = _lor(E2, Et)
        cr = ginv.rr * a + ginv.rt * b
        ct = ginv.rt * a + ginv.tt * b
        cov = E2 - cr * Er - ct * Et
        res = cov + hc * rep.nu
        worst = max(worst, float(np.sqrt((res**2).sum(axis=0)).max()))
    return worst
