"""Small symmetric-matrix algebra on grids.

Fields of symmetric 2x2 matrices are stored by their upper triangle
``(m_rr, m_rt, m_tt)`` stacked along the leading axis, so symmetry holds by
construction.  Generic ``n x n`` matrices go through numpy.
"""

from __future__ import annotations

import numpy as np


class SingularMatrixError(ArithmeticError):
    """Raised when inverting a (numerically) singular matrix."""


class SymMatrixField:
    """Per-node symmetric 2x2 matrices (covector-covector valence).

    ``data`` has shape ``(3, *grid_shape)`` holding ``rr, rt, tt``.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        data = np.asarray(data, dtype=float)
        if data.shape[0] != 3:
            raise ValueError("expected upper-triangle storage with leading axis 3")
        self.data = data

    @classmethod
    def from_components(cls, rr, rt, tt):
        rr, rt, tt = np.broadcast_arrays(
            np.asarray(rr, float), np.asarray(rt, float), np.asarray(tt, float)
        )
        return cls(np.stack([rr, rt, tt]))

    @classmethod
    def from_full(cls, m):
        m = np.asarray(m, dtype=float)
        return cls.from_components(m[..., 0, 0], 0.5 * (m[..., 0, 1] + m[..., 1, 0]), m[..., 1, 1])

    @property
    def rr(self):
        return self.data[0]

    @property
    def rt(self):
        return self.data[1]

    @property
    def tt(self):
        return self.data[2]

    @property
    def shape(self):
        return self.data.shape[1:]

    def full(self):
        """Return an array of shape ``(*grid_shape, 2, 2)``."""
        out = np.empty(self.shape + (2, 2))
        out[..., 0, 0] = self.rr
        out[..., 0, 1] = self.rt
        out[..., 1, 0] = self.rt
        out[..., 1, 1] = self.tt
        return out

    def det(self):
        return self.rr * self.tt - self.rt * self.rt

    def inv(self):
        d = self.det()
        if np.any(d == 0.0) or not np.all(np.isfinite(d)):
            raise SingularMatrixError("singular matrix in field inverse")
        return SymMatrixField(np.stack([self.tt / d, -self.rt / d, self.rr / d]))

    def trace(self):
        return self.rr + self.tt

    def eigmin(self):
        return _eig2(self.rr, self.rt, self.tt)[0]

    def eigmax(self):
        return _eig2(self.rr, self.rt, self.tt)[1]

    def contract(self, other: "SymMatrixField"):
        """Full contraction ``A^{ij} B_{ij}``."""
        return self.rr * other.rr + 2.0 * self.rt * other.rt + self.tt * other.tt

    def quad(self, a, b=None):
        """Quadratic form ``M^{ij} a_i b_j`` for covector fields of shape (2, ...)."""
        if b is None:
            b = a
        return (
            self.rr * a[0] * b[0]
            + self.rt * (a[0] * b[1] + a[1] * b[0])
            + self.tt * a[1] * b[1]
        )

    def apply(self, a):
        """Raise/lower an index: ``M^{ij} a_j`` with output shape (2, ...)."""
        return np.stack([self.rr * a[0] + self.rt * a[1], self.rt * a[0] + self.tt * a[1]])

    def __add__(self, other):
        return SymMatrixField(self.data + _data(other))

    def __sub__(self, other):
        return SymMatrixField(self.data - _data(other))

    def __mul__(self, scalar):
        return SymMatrixField(self.data * np.asarray(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SymMatrixField(-self.data)

    def roll(self, shift, axis=-1):
        return SymMatrixField(np.roll(self.data, shift, axis=axis))

    def __repr__(self):
        return f"SymMatrixField(shape={self.shape})"


def _data(x):
    return x.data if isinstance(x, SymMatrixField) else np.asarray(x)


def _eig2(a, b, c):
    mean = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    return mean - rad, mean + rad


def outer(a, b=None) -> SymMatrixField:
    """Symmetrised outer product of covector fields of shape (2, ...)."""
    if b is None:
        b = a
    return SymMatrixField.from_components(a[0] * b[0], 0.5 * (a[0] * b[1] + a[1] * b[0]), a[1] * b[1])


def sym2_algebra(m):
    """Determinant, inverse and minimum eigenvalue of a symmetric matrix.

    ``m`` is either a :class:`SymMatrixField` or an array whose trailing two
    axes form a square matrix.  The 2x2 case is closed form; larger matrices
    use numpy's factorisations.

    Returns
    -------
    det, inverse, eigmin
        ``inverse`` has the same storage type as ``m``.
    """
    if isinstance(m, SymMatrixField):
        return m.det(), m.inv(), m.eigmin()
    m = np.asarray(m, dtype=float)
    if m.shape[-1] != m.shape[-2]:
        raise ValueError("matrix must be square")
    if not np.allclose(m, np.swapaxes(m, -1, -2), rtol=0.0, atol=1e-14 * max(1.0, np.abs(m).max())):
        raise ValueError("matrix must be symmetric")
    if m.shape[-1] == 2:
        field = SymMatrixField.from_full(m)
        det, inv, lo = sym2_algebra(field)
        return det, inv.full(), lo
    det = np.linalg.det(m)
    if np.any(det == 0.0):
        raise SingularMatrixError("singular matrix")
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrixError(str(exc)) from exc
    return det, inv, np.linalg.eigvalsh(m)[..., 0]
