"""Tight-binding bands of the coupled-cavity supercell and the Dirac cone.

Each cavity carries two degenerate modes (k, l = 1, 2).  Overlap tensors
``alpha[n, m, k, l]`` and ``beta[n, m, k, l]`` couple the cavity at the
origin to the one displaced by ``n a1 + m a2`` for ``|n|, |m| <= 1``; they
are inputs (file or preset), never computed from fields here.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConeFitError, ModelError, OverlapFileError
from .lattice import LatticeSpec

SHELL = (-1, 0, 1)
TENSOR_SHAPE = (3, 3, 2, 2)


@dataclass(frozen=True)
class TightBindingModel:
    """Single-cavity resonance ``nu`` (rad/s) and truncated overlap tensors.

    Tensors are indexed ``[n + 1, m + 1, k - 1, l - 1]``.
    """

    nu: float
    alpha: np.ndarray
    beta: np.ndarray
    lattice: LatticeSpec
    norm_tol: float = 1e-6
    label: str = "custom"

    def __post_init__(self):
        if not np.isfinite(self.nu) or self.nu <= 0:
            raise ModelError(f"nu must be positive, got {self.nu}")
        for name in ("alpha", "beta"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.shape != TENSOR_SHAPE:
                raise ModelError(
                    f"{name} must have shape {TENSOR_SHAPE} (|n|,|m| <= 1), got {arr.shape}"
                )
            dev = np.abs(arr[1, 1] - np.eye(2)).max()
            if dev > self.norm_tol:
                raise ModelError(
                    f"{name}[0,0] deviates from identity by {dev:.3g} "
                    f"(> {self.norm_tol:g}); cavity modes must be normalized"
                )
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def matrices(self, kappa):
        """Assemble ``A(kappa)`` and ``B(kappa)``.

        ``kappa`` may be a single wavevector ``(2,)`` or a stack ``(N, 2)``;
        the result has shape ``(2, 2)`` or ``(N, 2, 2)`` accordingly.
        """
        k = np.asarray(kappa, dtype=float)
        single = k.ndim == 1
        k = np.atleast_2d(k)
        shell = np.asarray(SHELL)
        p1 = (k @ self.lattice.a1)[:, None] * shell[None, :]
        p2 = (k @ self.lattice.a2)[:, None] * shell[None, :]
        phase = np.exp(-1j * (p1[:, :, None] + p2[:, None, :]))
        A = np.einsum("qnm,nmkl->qkl", phase, self.alpha)
        B = np.einsum("qnm,nmkl->qkl", phase, self.beta)
        return (A[0], B[0]) if single else (A, B)


def _check_hermitian_pd(A, B, tol=1e-10):
    scale = max(np.abs(A).max(), np.abs(B).max(), 1.0)
    for name, M in (("A", A), ("B", B)):
        dev = np.abs(M - np.conj(np.swapaxes(M, -1, -2))).max()
        if dev > tol * scale:
            raise ModelError(f"assembled {name}(kappa) is not Hermitian (deviation {dev:.3g})")
    b11 = B[..., 0, 0].real
    detB = (B[..., 0, 0] * B[..., 1, 1] - B[..., 0, 1] * B[..., 1, 0]).real
    if np.any(b11 <= 0) or np.any(detB <= 0):
        raise ModelError("assembled B(kappa) is not positive definite")


# -- presets ---------------------------------------------------------------

NEAREST = ((1, 0), (0, 1), (1, -1), (-1, 0), (0, -1), (-1, 1))


def identity_model(lattice, nu):
    """Isolated cavities: ``A = B = I`` and flat bands at ``nu``."""
    alpha = np.zeros(TENSOR_SHAPE, dtype=complex)
    alpha[1, 1] = np.eye(2)
    return TightBindingModel(nu, alpha, alpha.copy(), lattice, label="identity")


def symmetric_model(lattice, nu, t_sigma=0.04, t_pi=-0.02, overlap=0.01):
    """Synthetic C3v-symmetric preset with a Dirac point at K.

    Nearest-neighbour couplings follow the sigma/pi split of a pair of
    in-plane dipolar modes: ``t_sigma d d^T + t_pi (I - d d^T)`` along each
    bond direction ``d``; ``beta`` gets an isotropic overlap.  The numbers
    are illustrative, not extracted from any field solution.
    """
    alpha = np.zeros(TENSOR_SHAPE, dtype=complex)
    beta = np.zeros(TENSOR_SHAPE, dtype=complex)
    alpha[1, 1] = beta[1, 1] = np.eye(2)
    for n, m in NEAREST:
        d = n * lattice.a1 + m * lattice.a2
        d = d / np.linalg.norm(d)
        P = np.outer(d, d)
        alpha[n + 1, m + 1] = t_sigma * P + t_pi * (np.eye(2) - P)
        beta[n + 1, m + 1] = overlap * np.eye(2)
    return TightBindingModel(nu, alpha, beta, lattice, label="symmetric (synthetic)")


PRESETS = {"identity": identity_model, "symmetric": symmetric_model}


def _parse_tensor(raw, name):
    if not isinstance(raw, list) or len(raw) != 3:
        raise OverlapFileError(f"{name}: expected 3 entries for n in (-1, 0, 1); larger ranges are not supported")
    out = np.zeros(TENSOR_SHAPE, dtype=complex)
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != 3:
            raise OverlapFileError(f"{name}[{i}]: expected 3 entries for m in (-1, 0, 1)")
        for j, blk in enumerate(row):
            if not isinstance(blk, list) or len(blk) != 2:
                raise OverlapFileError(f"{name}[{i}][{j}]: expected 2 entries for k")
            for k, line in enumerate(blk):
                if not isinstance(line, list) or len(line) != 2:
                    raise OverlapFileError(f"{name}[{i}][{j}][{k}]: expected 2 entries for l")
                for l, z in enumerate(line):
                    where = f"{name}[{i}][{j}][{k}][{l}]"
                    if (
                        not isinstance(z, (list, tuple))
                        or len(z) != 2
                        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in z)
                    ):
                        raise OverlapFileError(f"{where}: expected [re, im] pair of numbers, got {z!r}")
                    out[i, j, k, l] = complex(z[0], z[1])
    return out


def load_overlap_file(path, lattice, norm_tol=1e-6):
    """Read ``{"nu": .., "alpha": [...], "beta": [...]}`` into a model.

    Entries are indexed ``[n+1][m+1][k-1][l-1]`` with complex numbers stored
    as ``[re, im]``.
    """
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise OverlapFileError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise OverlapFileError(f"{path}: top level must be an object")
    for key in ("nu", "alpha", "beta"):
        if key not in data:
            raise OverlapFileError(f"{path}: missing key {key!r}")
    alpha = _parse_tensor(data["alpha"], "alpha")
    beta = _parse_tensor(data["beta"], "beta")
    return TightBindingModel(float(data["nu"]), alpha, beta, lattice, norm_tol=norm_tol, label=str(path))


def save_overlap_file(model, path):
    def enc(t):
        return [[[[[z.real, z.imag] for z in line] for line in blk] for blk in row] for row in t]

    Path(path).write_text(json.dumps({"nu": model.nu, "alpha": enc(model.alpha), "beta": enc(model.beta)}))


# -- eigenproblem ----------------------------------------------------------


@dataclass(frozen=True)
class BlochEigenpair:
    omega: float
    b: np.ndarray


def _fix_phase(v):
    idx = 0 if abs(v[0]) > 1e-14 * np.abs(v).max() else 1
    return v * np.exp(-1j * np.angle(v[idx]))


def generalized_eigvals_2x2(A, B):
    """Roots ``lam`` of ``det(A - lam B) = 0`` for Hermitian ``A``, ``B > 0``.

    Closed-form quadratic, vectorized over leading axes; returned ascending
    along the last axis.
    """
    a11, a12, a21, a22 = A[..., 0, 0], A[..., 0, 1], A[..., 1, 0], A[..., 1, 1]
    b11, b12, b21, b22 = B[..., 0, 0], B[..., 0, 1], B[..., 1, 0], B[..., 1, 1]
    qa = (b11 * b22 - b12 * b21).real
    qb = -(a11 * b22 + a22 * b11 - a12 * b21 - a21 * b12).real
    qc = (a11 * a22 - a12 * a21).real
    disc = np.maximum(qb * qb - 4 * qa * qc, 0.0)
    # cancellation-free form of the quadratic formula
    q = -0.5 * (qb + np.copysign(np.sqrt(disc), qb))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = q / qa
        r2 = np.where(q != 0, qc / q, r1)
    return np.sort(np.stack([r1, r2], axis=-1), axis=-1)


def _eigvec(A, B, lam, other=None):
    M = A - lam * B
    c1 = np.array([-M[0, 1], M[0, 0]])
    c2 = np.array([M[1, 1], -M[1, 0]])
    v = c1 if np.linalg.norm(c1) >= np.linalg.norm(c2) else c2
    scale = max(np.abs(A).max(), abs(lam) * np.abs(B).max())
    if np.linalg.norm(v) <= 1e-12 * scale:
        # degenerate pencil: any vector works; keep B-orthogonality with ``other``
        v = np.array([1.0, 0.0], dtype=complex)
        if other is not None:
            v = np.array([0.0, 1.0], dtype=complex)
            v = v - other * np.vdot(other, B @ v)
    v = v / np.sqrt(np.vdot(v, B @ v).real)
    return _fix_phase(v)


def solve_supercell_bands(model, kappa):
    """Both solutions of ``nu^2 A b = omega^2 B b`` at one wavevector.

    Returns two :class:`BlochEigenpair` sorted by ascending ``omega``, with
    ``b^H B b = 1``.
    """
    A, B = model.matrices(kappa)
    _check_hermitian_pd(A, B)
    lam = generalized_eigvals_2x2(A, B)
    if lam[0] < -1e-12:
        raise ModelError(f"negative omega^2 ({lam[0] * model.nu**2:.3g}) at kappa={kappa}")
    lam = np.maximum(lam, 0.0)
    v0 = _eigvec(A, B, lam[0])
    v1 = _eigvec(A, B, lam[1], other=v0 if np.isclose(lam[0], lam[1], rtol=1e-12, atol=0) else None)
    omega = model.nu * np.sqrt(lam)
    return BlochEigenpair(float(omega[0]), v0), BlochEigenpair(float(omega[1]), v1)


def band_frequencies(model, kappas):
    """Vectorized ``(omega1, omega2)`` for a stack of wavevectors ``(N, 2)``."""
    A, B = model.matrices(np.atleast_2d(kappas))
    _check_hermitian_pd(A, B)
    lam = generalized_eigvals_2x2(A, B)
    if np.any(lam < -1e-12):
        raise ModelError("negative omega^2 encountered along the path")
    return model.nu * np.sqrt(np.maximum(lam, 0.0))


@dataclass(frozen=True)
class BandTable:
    arclength: np.ndarray
    kx: np.ndarray
    ky: np.ndarray
    omega1: np.ndarray
    omega2: np.ndarray

    def __len__(self):
        return len(self.arclength)


def band_path(model, path, samples_per_segment=100):
    """Sample both bands along a piecewise-linear k-path.

    Each segment contributes ``samples_per_segment`` points (the shared
    vertex is not repeated); ``arclength`` is cumulative in 1/m.
    """
    verts = [np.asarray(p, dtype=float) for p in path]
    if len(verts) == 0:
        raise ValueError("path must contain at least one k-point")
    if samples_per_segment < 1:
        raise ValueError("samples_per_segment must be >= 1")
    pts = [verts[0][None, :]]
    for start, stop in zip(verts[:-1], verts[1:]):
        f = np.arange(1, samples_per_segment + 1) / samples_per_segment
        pts.append(start + f[:, None] * (stop - start))
    k = np.concatenate(pts)
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(k, axis=0), axis=1))])
    w = band_frequencies(model, k)
    return BandTable(s, k[:, 0], k[:, 1], w[:, 0], w[:, 1])


# -- Dirac cone ------------------------------------------------------------


@dataclass(frozen=True)
class DiracCone:
    """Linearized bath dispersion ``Omega_D -/+ slope * kappa`` on a disc."""

    omega_D: float
    slope: float
    delta_kappa: float
    K: np.ndarray | None = None

    def __post_init__(self):
        if not self.slope > 0:
            raise ModelError(f"cone slope must be positive, got {self.slope}")
        if not self.delta_kappa > 0:
            raise ModelError(f"delta_kappa must be positive, got {self.delta_kappa}")
        if not self.slope * self.delta_kappa < self.omega_D:
            raise ModelError("slope * delta_kappa must stay below omega_D (lower band reaches zero)")

    @property
    def bandwidth(self):
        """Half-width ``slope * delta_kappa`` of the detuning range."""
        return self.slope * self.delta_kappa


def linearized_frequency(cone, kappa_radial, p):
    """``Omega_D - slope*kappa`` for the lower band (p=1), ``+`` for p=2."""
    k = np.asarray(kappa_radial, dtype=float)
    if np.any(k < 0) or np.any(k > cone.delta_kappa * (1 + 1e-12)):
        raise ValueError(f"kappa outside the disc [0, {cone.delta_kappa}]")
    if p == 1:
        return cone.omega_D - cone.slope * k
    if p == 2:
        return cone.omega_D + cone.slope * k
    raise ValueError(f"band index must be 1 or 2, got {p}")


@dataclass(frozen=True)
class ConeFit:
    cone: DiracCone
    max_residual: float
    gap_at_K: float
    flagged: bool


def fit_cone_samples(radii, lower, upper):
    """Least-squares ``(Omega_D, slope)`` with ``Omega_D`` fixed at kappa=0.

    ``radii[0]`` must be 0 (the apex).  Returns ``(omega_D, slope, residual)``.
    """
    r = np.asarray(radii, dtype=float)
    lo = np.asarray(lower, dtype=float)
    up = np.asarray(upper, dtype=float)
    apex = r == 0
    if not np.any(apex):
        raise ValueError("samples must include the apex (kappa = 0)")
    omega_D = 0.5 * (lo[apex].mean() + up[apex].mean())
    rr = np.concatenate([r, r])
    y = np.concatenate([omega_D - lo, up - omega_D])
    slope = float(rr @ y / (rr @ rr))
    resid = max(
        np.abs(lo - (omega_D - slope * r)).max(),
        np.abs(up - (omega_D + slope * r)).max(),
    )
    return float(omega_D), slope, float(resid)


def fit_dirac_cone(model, K=None, fit_radius=None, n_samples=16, n_directions=24,
                   gap_tol=1e-6, residual_tol=0.01):
    """Fit the Dirac cone of ``model`` around the zone corner ``K``.

    Bands are sampled on ``n_directions`` rays of ``n_samples`` points out to
    ``fit_radius`` (default ``|Gamma K| / 100``).  ``gap_tol`` is relative to
    ``nu``; ``residual_tol`` is relative to ``slope * fit_radius`` and only
    sets the ``flagged`` field.

    Raises
    ------
    ConeFitError
        When the bands are not degenerate at K or carry no linear splitting.
    """
    lat = model.lattice
    K = lat.K if K is None else np.asarray(K, dtype=float)
    fit_radius = lat.gamma_K / 100 if fit_radius is None else float(fit_radius)
    wK = band_frequencies(model, K[None, :])[0]
    gap = float(wK[1] - wK[0])
    if gap > gap_tol * model.nu:
        raise ConeFitError(f"bands not degenerate at K: gap {gap:.4g} rad/s > {gap_tol:g} nu")
    r = np.linspace(0.0, fit_radius, n_samples + 1)
    phi = 2 * np.pi * (np.arange(n_directions) + 0.5) / n_directions
    R, P = np.meshgrid(r, phi)
    ks = K + np.stack([R.ravel() * np.cos(P.ravel()), R.ravel() * np.sin(P.ravel())], axis=1)
    w = band_frequencies(model, ks)
    omega_D, slope, resid = fit_cone_samples(R.ravel(), w[:, 0], w[:, 1])
    if slope <= gap_tol * model.nu / fit_radius:
        raise ConeFitError("no linear band crossing at K (fitted slope is zero)")
    cone = DiracCone(omega_D, slope, fit_radius, K)
    flagged = resid > residual_tol * slope * fit_radius
    if flagged:
        warnings.warn(f"cone-fit residual {resid:.3g} exceeds {residual_tol:g} of slope*radius", stacklevel=2)
    return ConeFit(cone, resid, gap, bool(flagged))
