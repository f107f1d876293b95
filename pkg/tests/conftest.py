import numpy as np
import pytest

from igcf.domain import build_cap


def cap_field(cap, const=0.0, a=0.05, b=0.02, k=2):
    """``const + a cos(pi r/R) + b sin(pi r/(2R))^k cos(k theta)`` and its
    exact coordinate partials ``(f_r, f_t, f_rr, f_rt, f_tt)``.

    Even about ``r = R`` and smooth at the pole, so the ghost rows are exact.
    """
    R, TH, Rm = cap.R, cap.TH, cap.r_max
    w, p = np.pi / Rm, np.pi / (2 * Rm)
    s, c = np.sin(p * R), np.cos(p * R)
    beta = s**k
    dbeta = k * s ** (k - 1) * c * p
    d2beta = k * p**2 * ((k - 1) * s ** (k - 2) * c * c - s**k)
    ck, sk = np.cos(k * TH), np.sin(k * TH)
    f = const + a * np.cos(w * R) + b * beta * ck
    fr = -a * w * np.sin(w * R) + b * dbeta * ck
    ft = -b * k * beta * sk
    frr = -a * w * w * np.cos(w * R) + b * d2beta * ck
    frt = -b * k * dbeta * sk
    ftt = -b * k * k * beta * ck
    return f, (fr, ft, frr, frt, ftt)


def exp_partials(phi, parts):
    """Partials of ``u = exp(phi)`` from those of ``phi``."""
    fr, ft, frr, frt, ftt = parts
    u = np.exp(phi)
    return u, (u * fr, u * ft, u * (frr + fr * fr), u * (frt + fr * ft), u * (ftt + ft * ft))


def observed_order(errors):
    e = np.asarray(errors, dtype=float)
    return np.log2(e[:-1] / e[1:])


@pytest.fixture
def cap16():
    return build_cap(2, 1.0, 16, 32)


@pytest.fixture
def cap32():
    return build_cap(2, 1.0, 32, 64)
