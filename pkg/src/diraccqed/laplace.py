"""Memory kernel of the Dirac-cone bath, the emitter resolvent, and
numerical inversion along the Bromwich line.

With ``X = chi21 / alpha^2``, ``D = alpha * delta_kappa`` and zero apex
detuning the kernel splits into a lower-band and an upper-band part:

    K_1(s) = X / (2 (s - i Omega_D)) * {2 Omega_D ln(Omega_D / (Omega_D - D))
             + s [-2 arctan(D/s) + i ln(s^2 / (s^2 + D^2))]}
    K_2(s) = X / (2 (s - i Omega_D)) * {2 Omega_D ln(Omega_D / (Omega_D + D))
             + s [+2 arctan(D/s) + i ln(s^2 / (s^2 + D^2))]}

and ``C2(s) = c2(0) / (s + K_1(s) + K_2(s))``.  All logarithms are principal;
``arctan(z) = (i/2) [ln(1 - iz) - ln(1 + iz)]``.  Nonzero apex detuning is
handled by direct quadrature of the radial integrals.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .constants import EPSILON0, HBAR
from .errors import InversionAccuracyError, ModelError


def chi21_value(a, omega21, d21, Nc, V):
    """Kernel strength ``sqrt(3) a^2 omega21^2 d21^2 / (4 pi hbar eps0 Nc V)``."""
    return np.sqrt(3) * a**2 * omega21**2 * d21**2 / (4 * np.pi * HBAR * EPSILON0 * Nc * V)


@dataclass(frozen=True)
class KernelParams:
    chi21: float
    omega_D: float
    alpha: float
    delta_kappa: float
    Delta_D: float = 0.0

    def __post_init__(self):
        if self.chi21 < 0:
            raise ModelError("chi21 must be non-negative")
        if not (self.alpha > 0 and self.delta_kappa > 0 and self.omega_D > 0):
            raise ModelError("omega_D, alpha and delta_kappa must be positive")
        if self.alpha * self.delta_kappa >= self.omega_D:
            raise ModelError("alpha * delta_kappa must be below omega_D (log singularity)")

    @classmethod
    def from_physical(cls, lattice, cone, emitter, system):
        chi = chi21_value(lattice.a, emitter.omega21, emitter.d21, system.Nc, system.V)
        return cls(chi, cone.omega_D, cone.slope, cone.delta_kappa, cone.omega_D - emitter.omega21)

    @property
    def scale(self):
        """``chi21 / alpha^2`` in rad/s."""
        return self.chi21 / self.alpha**2

    @property
    def bandwidth(self):
        return self.alpha * self.delta_kappa

    def sum_rule(self):
        """``lim s K(s)`` for real ``s -> inf``: total squared coupling."""
        x = self.bandwidth / self.omega_D
        return float(self.scale * self.omega_D * -np.log1p(-x * x))

    def collective_rate(self):
        """``sqrt(sum_rule)``: Rabi rate of the bath lumped into one mode."""
        return float(np.sqrt(self.sum_rule()))

    def dispersive_shift(self):
        """Weak-coupling frequency shift ``sum_rule / Omega_D`` (rad/s).

        When ``collective_rate`` is far below ``bandwidth`` the emitter is
        not exchanged with the bath; ``c2`` only rotates,
        ``c2(t) ~ c2(0) exp(-i shift t)``.  For the symmetric cone
        ``-sum |g|^2 / Delta`` collapses to this value, which scales as 1/V.
        """
        return self.sum_rule() / self.omega_D


def _as_s(s):
    s = np.asarray(s, dtype=complex)
    if np.any(s.real <= 0):
        raise ValueError("kernel requires Re(s) > 0")
    return s


def complex_arctan(z):
    """Principal ``arctan`` via ``(i/2) [ln(1 - iz) - ln(1 + iz)]``."""
    z = np.asarray(z, dtype=complex)
    return 0.5j * (np.log(1 - 1j * z) - np.log(1 + 1j * z))


def _log_ratio(s, D):
    # ln(s^2 / (s^2 + D^2)) = -ln(1 + (D/s)^2), no branch crossing for Re s > 0
    return -special.log1p((D / s) ** 2)


def _closed_lower(s, p):
    W, D = p.omega_D, p.bandwidth
    lead = 2 * W * -np.log1p(-D / W)
    tail = s * (-2 * complex_arctan(D / s) + 1j * _log_ratio(s, D))
    return p.scale * (lead + tail) / (2 * (s - 1j * W))


def _closed_upper(s, p):
    W, D = p.omega_D, p.bandwidth
    lead = 2 * W * -np.log1p(D / W)
    tail = s * (2 * complex_arctan(D / s) + 1j * _log_ratio(s, D))
    return p.scale * (lead + tail) / (2 * (s - 1j * W))


def _closed_total(s, p):
    W, D = p.omega_D, p.bandwidth
    x = D / W
    num = W * -np.log1p(-x * x) + 1j * s * _log_ratio(s, D)
    return p.scale * num / (s - 1j * W)


def radial_integrand(kappa, s, p, band):
    """Integrand of the band-``band`` radial kernel integral (without ``chi21``)."""
    sign = -1 if band == 1 else 1
    Om = p.omega_D + sign * p.alpha * kappa
    return kappa / (Om * (s + 1j * (p.Delta_D + sign * p.alpha * kappa)))


def kernel_quadrature(s, p, band, epsrel=1e-12):
    """Adaptive quadrature of ``chi21 * int_0^dk kappa / (Omega (s + i Delta)) dkappa``.

    Valid for any apex detuning ``Delta_D``; the near-resonant radius is
    passed to the integrator as a breakpoint.
    """
    s = _as_s(s)
    out = np.empty(s.shape, dtype=complex)
    sign = -1 if band == 1 else 1
    for idx, sv in np.ndenumerate(s):
        k_star = -sign * (p.Delta_D + sv.imag) / p.alpha
        pts = [k_star] if 0 < k_star < p.delta_kappa else None
        val, _ = integrate.quad(radial_integrand, 0.0, p.delta_kappa, args=(sv, p, band),
                                complex_func=True, points=pts, limit=500,
                                epsabs=0.0, epsrel=epsrel)
        out[idx] = p.chi21 * val
    return out if out.ndim else out[()]


def kernel_lower(s, p):
    s = _as_s(s)
    if p.Delta_D != 0:
        return kernel_quadrature(s, p, 1)
    return _closed_lower(s, p)


def kernel_upper(s, p):
    s = _as_s(s)
    if p.Delta_D != 0:
        return kernel_quadrature(s, p, 2)
    return _closed_upper(s, p)


def kernel_total(s, p, combined=True):
    """Full memory kernel; ``combined=False`` sums the two band parts instead."""
    s = _as_s(s)
    if p.Delta_D != 0:
        return kernel_quadrature(s, p, 1) + kernel_quadrature(s, p, 2)
    if combined:
        return _closed_total(s, p)
    return _closed_lower(s, p) + _closed_upper(s, p)


def c2_laplace(s, p, c2_0):
    """Laplace-domain excited-state amplitude ``c2_0 / (s + K(s))``."""
    s = _as_s(s)
    return c2_0 / (s + kernel_total(s, p))


# -- Bromwich inversion ----------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def estimate_asymptote(F, radius, n_terms=3):
    """Coefficients ``c_k`` of ``F(s) ~ sum_k c_k / s^(k+1)`` for large ``s``.

    Least-squares fit of ``s F(s)`` as a polynomial in ``1/s`` on real
    ``s = radius * 2^j``.
    """
    x = 2.0 ** -np.arange(2 * n_terms + 2)
    s = radius / x
    y = s * np.asarray(F(s.astype(complex)), dtype=complex)
    powers = np.arange(n_terms + 2)
    a = np.linalg.lstsq(x[:, None] ** powers, y, rcond=None)[0]
    return (a * radius**powers)[:n_terms]


def _asymptote(coefs, lam):
    """Model ``sum_k b_k / (s + lam)^(k+1)`` matching ``sum_k c_k / s^(k+1)``.

    Returns ``(evaluate(s), inverse(t))``.
    """
    n = len(coefs)
    # re-expand c_k/s^(k+1) around s + lam: 1/s^(j+1) = sum_k C(k, j) lam^(k-j) / (s+lam)^(k+1)
    b = np.zeros(n, dtype=complex)
    for j, c in enumerate(coefs):
        for k in range(j, n):
            b[k] += c * special.comb(k, j) * lam ** (k - j)

    def evaluate(s):
        return sum(b[k] / (s + lam) ** (k + 1) for k in range(n))

    def inverse(t):
        return sum(b[k] * t**k / special.factorial(k) for k in range(n)) * np.exp(-lam * t)

    return evaluate, inverse


@dataclass(frozen=True)
class InversionResult:
    t: np.ndarray
    values: np.ndarray
    err_est: np.ndarray
    sigma: float
    omega_max: float
    n_nodes: int

    @property
    def max_error(self):
        return float(np.max(self.err_est)) if len(self.err_est) else 0.0


def _bromwich(F, t, sigma, omega_max, asym, tol, max_depth=12, chunk=64):
    t_max = float(t.max())
    evaluate, inverse = asym
    h0 = np.pi / (4 * t_max)
    n0 = max(2, int(np.ceil(2 * omega_max / h0)))
    edges = np.linspace(-omega_max, omega_max, n0 + 1)

    def R(omega):
        s = sigma + 1j * omega
        return np.asarray(F(s), dtype=complex) - evaluate(s)

    probes = np.array([0.0, 0.5 * t_max, t_max])
    damp = np.exp(-sigma * t_max)
    accepted = []
    pairs = np.stack([edges[:-1], edges[1:]], axis=1)
    cn, cw = _pair_nodes(pairs)
    cv = R(cn)
    for depth in range(max_depth + 1):
        mids = pairs.mean(axis=1)
        halves = np.stack([pairs[:, 0], mids, mids, pairs[:, 1]], axis=1).reshape(-1, 2)
        fn, fw = _pair_nodes(halves)
        fv = R(fn)
        coarse = (cw * cv * np.exp(1j * cn[..., None] * probes).transpose(2, 0, 1)).sum(axis=2)
        fine = (fw * fv * np.exp(1j * fn[..., None] * probes).transpose(2, 0, 1)).sum(axis=2)
        fine = fine.reshape(len(probes), len(pairs), 2).sum(axis=2)
        width = pairs[:, 1] - pairs[:, 0]
        panel_tol = 0.05 * tol * 2 * np.pi * damp * width / (2 * omega_max)
        bad = np.abs(coarse - fine).max(axis=0) > panel_tol
        if depth == max_depth:
            bad[:] = False
        shape = (len(pairs), 2, -1)
        good = ~bad
        accepted.append((fn.reshape(shape)[good].ravel(), fw.reshape(shape)[good].ravel(),
                         fv.reshape(shape)[good].ravel()))
        if not np.any(bad):
            break
        pairs = halves.reshape(len(pairs), 2, 2)[bad].reshape(-1, 2)
        cn = fn.reshape(shape)[bad].reshape(-1, fn.shape[1])
        cw = fw.reshape(shape)[bad].reshape(-1, fw.shape[1])
        cv = fv.reshape(shape)[bad].reshape(-1, fv.shape[1])
    nodes = np.concatenate([a[0] for a in accepted])
    wts = np.concatenate([a[1] for a in accepted])
    vals = np.concatenate([a[2] for a in accepted])
    order = np.argsort(nodes, kind="stable")
    nodes, wv = nodes[order], (wts * vals)[order]
    out = np.empty(t.shape, dtype=complex)
    dt = np.diff(t)
    if len(t) > chunk and np.allclose(dt, dt[0], rtol=1e-12, atol=0):
        # uniform grid: e^{i w (t_i + m dt)} = e^{i w t_i} e^{i w m dt}
        local = np.exp(1j * np.outer(np.arange(chunk) * dt[0], nodes))
        for i in range(0, len(t), chunk):
            n = min(chunk, len(t) - i)
            out[i:i + n] = local[:n] @ (wv * np.exp(1j * nodes * t[i]))
    else:
        for i in range(0, len(t), chunk):
            tc = t[i:i + chunk]
            out[i:i + chunk] = np.exp(1j * np.outer(tc, nodes)) @ wv
    out = out * np.exp(sigma * t) / (2 * np.pi) + inverse(t)
    return out, len(nodes)


def _pair_nodes(pairs):
    half = 0.5 * (pairs[:, 1] - pairs[:, 0])
    mid = 0.5 * (pairs[:, 1] + pairs[:, 0])
    return mid[:, None] + half[:, None] * _GL_NODES, half[:, None] * _GL_WEIGHTS


def invert_laplace(F, t_grid, sigma=None, omega_max=None, tol=1e-6, asymptote=None,
                   n_asymptote_terms=3, check=True):
    """Inverse Laplace transform by truncated Bromwich-line quadrature.

    ``c(t) = e^{sigma t} / (2 pi) int_{-W}^{W} F(sigma + i w) e^{i w t} dw``,
    evaluated on Gauss-Legendre panels no wider than ``pi / (4 t_max)`` and
    bisected where a panel disagrees with its two halves.  The slowly
    decaying large-``|s|`` part of ``F`` (``asymptote`` coefficients of
    ``1/s, 1/s^2, ...``, estimated on the real axis when not given) is
    removed beforehand and inverted exactly.

    ``F`` must accept complex arrays.  ``err_est`` is the pointwise maximum
    deviation from reruns with ``2 W`` and ``2 sigma``; with ``check`` an
    estimate above ``tol`` raises :class:`InversionAccuracyError`.

    Defaults: ``sigma = 1 / t_max`` and ``W = 1000 / t_max``.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) == 0:
        raise ValueError("t_grid must be a non-empty 1D array")
    if np.any(t < 0) or np.any(np.diff(t) < 0):
        raise ValueError("t_grid must be non-negative and ascending")
    t_max = float(t.max())
    if asymptote is None:
        radius = 100 * (omega_max if omega_max else 1000 / t_max if t_max > 0 else 1.0)
        asymptote = estimate_asymptote(F, radius, n_asymptote_terms)
    asymptote = np.atleast_1d(np.asarray(asymptote, dtype=complex))
    if t_max == 0:
        # initial-value theorem: f(0+) = lim s F(s)
        vals = np.full(t.shape, asymptote[0], dtype=complex)
        return InversionResult(t, vals, np.zeros(t.shape), 0.0, 0.0, 0)
    sigma = 1.0 / t_max if sigma is None else float(sigma)
    omega_max = 1000.0 / t_max if omega_max is None else float(omega_max)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    lam = 0.25 / t_max
    asym = _asymptote(asymptote, lam)
    base, n_nodes = _bromwich(F, t, sigma, omega_max, asym, tol)
    err = np.zeros(t.shape)
    if check:
        wide, _ = _bromwich(F, t, sigma, 2 * omega_max, asym, tol)
        shifted, _ = _bromwich(F, t, 2 * sigma, omega_max, asym, tol)
        err = np.maximum(np.abs(wide - base), np.abs(shifted - base))
        if err.max() > tol:
            raise InversionAccuracyError(
                f"Bromwich inversion not converged: discrepancy {err.max():.3g} > tol {tol:g} "
                f"(sigma={sigma:.3g}, omega_max={omega_max:.3g})"
            )
    return InversionResult(t, base, err, sigma, omega_max, n_nodes)


def invert_c2(p, c2_0, t_grid, sigma=None, omega_max=None, tol=1e-4, check=True):
    """``c2(t)`` from the closed-form resolvent.

    ``W`` defaults to ``50 max(alpha dk, sqrt(sum_rule))``.
    """
    if omega_max is None:
        omega_max = 50 * max(p.bandwidth, p.collective_rate())
    # F ~ c2_0/s - c2_0 * sum_rule / s^3 for large s
    asym = [c2_0, 0.0, -c2_0 * p.sum_rule()]
    return invert_laplace(lambda s: c2_laplace(s, p, c2_0), t_grid, sigma=sigma,
                          omega_max=omega_max, tol=tol, asymptote=asym, check=check)
