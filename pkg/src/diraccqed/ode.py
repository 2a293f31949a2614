"""Time-domain integration of the single-excitation amplitude equations.

In the interaction picture the amplitudes obey

    dc1/dt = 0
    dc2/dt = -sum_j c_j g_j exp(-i Delta_j t)
    dc_j/dt = c2 conj(g_j) exp(+i Delta_j t)

which are integrated as written, explicit phase factors included.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import DOP853

from .errors import InsufficientDataError, IntegrationError, StateError


@dataclass(frozen=True)
class InitialState:
    """Emitter superposition ``cos(theta) |1> + e^{i phi} sin(theta) |2>``, field in vacuum."""

    theta_a: float
    phi_a: float = 0.0

    @property
    def c1(self):
        return complex(np.cos(self.theta_a))

    @property
    def c2(self):
        return complex(np.exp(1j * self.phi_a) * np.sin(self.theta_a))

    def amplitudes(self, n_modes):
        y = np.zeros(n_modes + 2, dtype=complex)
        y[0], y[1] = self.c1, self.c2
        return y


@dataclass(frozen=True)
class AmplitudeState:
    t: float
    c1: complex
    c2: complex
    c_modes: np.ndarray

    @classmethod
    def from_vector(cls, t, y):
        return cls(float(t), complex(y[0]), complex(y[1]), np.asarray(y[2:]))

    def vector(self):
        return np.concatenate([[self.c1, self.c2], self.c_modes])

    @property
    def field_population(self):
        return float(np.sum(np.abs(self.c_modes) ** 2))

    @property
    def norm_sq(self):
        return abs(self.c1) ** 2 + abs(self.c2) ** 2 + self.field_population


def _rhs(t, y, delta, g):
    c2 = y[1]
    cm = y[2:]
    ph = np.exp(-1j * delta * t)
    out = np.empty_like(y)
    out[0] = 0.0
    out[1] = -np.sum(cm * g * ph)
    out[2:] = c2 * np.conj(g * ph)
    return out


def derivative(state, modeset):
    """Time derivative ``(dc1, dc2, dc_modes)`` packed as one complex vector."""
    if len(state.c_modes) != len(modeset):
        raise ValueError(f"state has {len(state.c_modes)} mode amplitudes, mode set has {len(modeset)}")
    return _rhs(state.t, state.vector(), modeset.delta, modeset.g)


def _entropy_bits(c1, c2, field_pop):
    """Von Neumann entropy (bits) of the reduced emitter state, vectorized."""
    c1 = np.asarray(c1)
    c2 = np.asarray(c2)
    p_e = np.abs(c2) ** 2
    p_g = np.abs(c1) ** 2 + np.asarray(field_pop)
    coh = np.abs(c1 * np.conj(c2))
    mean = 0.5 * (p_e + p_g)
    rad = np.sqrt(0.25 * (p_g - p_e) ** 2 + coh**2)
    lam = np.stack([mean + rad, mean - rad])
    lam = np.clip(lam, 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lam > 0, -lam * np.log2(np.where(lam > 0, lam, 1.0)), 0.0)
    return np.clip(terms.sum(axis=0), 0.0, 1.0)


def entanglement_entropy(state, tol=1e-6):
    """Emitter-field entanglement in bits.

    The reduced emitter density matrix has populations ``|c2|^2`` and
    ``|c1|^2 + sum |c_j|^2`` and coherence ``c1 conj(c2)``; one-photon
    amplitudes cannot interfere with the vacuum terms.
    """
    if abs(state.norm_sq - 1) > tol:
        raise StateError(f"state norm^2 = {state.norm_sq:.9g} deviates from 1 by more than {tol:g}")
    return float(_entropy_bits(state.c1, state.c2, state.field_population))


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    field_pop: np.ndarray
    entropy: np.ndarray
    final: AmplitudeState
    norm_drift: float
    n_steps: int = 0
    n_rhs: int = 0

    def __len__(self):
        return len(self.t)

    def column(self, name):
        """``re_c2``, ``im_c2``, ``abs_c2``, ... as a real array."""
        part, _, field = name.partition("_")
        if not field:
            return np.asarray(getattr(self, name))
        z = getattr(self, field)
        return {"re": np.real, "im": np.imag, "abs": np.abs}[part](z)


def propagate(y0, modeset, t0, t1, rtol=1e-9, atol=None, t_eval=None, observer=None):
    """Integrate the amplitude vector ``y0`` from ``t0`` to ``t1`` (either direction).

    ``observer(t, y)`` is called at every ``t_eval`` point from dense
    output, so sampled states never need to be stored in full.  Returns the
    final vector and solver statistics.
    """
    atol = rtol * 1e-3 if atol is None else atol
    delta = np.asarray(modeset.delta)
    g = np.asarray(modeset.g)
    y0 = np.asarray(y0, dtype=complex)
    samples = np.asarray([] if t_eval is None else t_eval, dtype=float)
    direction = 1.0 if t1 >= t0 else -1.0
    idx = 0
    while idx < len(samples) and samples[idx] == t0 and observer is not None:
        observer(t0, y0)
        idx += 1
    if t1 == t0:
        return y0.copy(), {"n_steps": 0, "n_rhs": 0}
    span = abs(t1 - t0)
    # explicit first step avoids a wasted probe on long mode vectors
    first = span / 200.0
    solver = DOP853(lambda t, y: _rhs(t, y, delta, g), t0, y0, t1, rtol=rtol, atol=atol,
                    first_step=first)
    n_steps = 0
    while solver.status == "running":
        msg = solver.step()
        n_steps += 1
        if solver.status == "failed":
            raise IntegrationError(
                f"integration failed at t={solver.t:.6g}: {msg}",
                {"t": solver.t, "step_size": solver.step_size, "n_steps": n_steps, "nfev": solver.nfev},
            )
        if observer is not None and idx < len(samples):
            dense = None
            while idx < len(samples) and direction * (samples[idx] - solver.t) <= 0:
                if dense is None:
                    dense = solver.dense_output()
                ts = samples[idx]
                observer(ts, solver.y if ts == solver.t else dense(ts))
                idx += 1
    return solver.y.copy(), {"n_steps": n_steps, "n_rhs": solver.nfev}


def evolve(initial, modeset, T, tolerance=1e-9, samples=2000):
    """Evolve from ``initial`` over ``[0, T]`` and sample observables uniformly.

    ``tolerance`` is the local relative tolerance of the order-8
    Dormand-Prince integrator (absolute tolerance ``1e-3`` of it).
    ``T = 0`` yields a single sample.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    n = 1 if T == 0 else int(samples)
    if n < 1:
        raise ValueError("samples must be >= 1")
    t = np.linspace(0.0, T, n) if n > 1 else np.array([0.0])
    c1 = np.empty(n, dtype=complex)
    c2 = np.empty(n, dtype=complex)
    fp = np.empty(n)
    norm = np.empty(n)
    count = [0]

    def observe(ts, y):
        i = count[0]
        c1[i], c2[i] = y[0], y[1]
        fp[i] = np.sum(np.abs(y[2:]) ** 2)
        norm[i] = abs(y[0]) ** 2 + abs(y[1]) ** 2 + fp[i]
        count[0] += 1

    y0 = initial.amplitudes(len(modeset))
    yT, stats = propagate(y0, modeset, 0.0, float(T), rtol=tolerance, t_eval=t, observer=observe)
    if count[0] != n:
        raise IntegrationError(f"sampled {count[0]} of {n} points", stats)
    entropy = _entropy_bits(c1, c2, fp)
    final = AmplitudeState.from_vector(T, yT)
    drift = float(np.max(np.abs(norm - 1.0)))
    return Trajectory(t, c1, c2, fp, entropy, final, drift, stats["n_steps"], stats["n_rhs"])


# -- oscillation analysis --------------------------------------------------


@dataclass(frozen=True)
class FrequencyReport:
    zero_crossing_rad_s: float
    spectrum_peak_rad_s: float
    n_crossings: int

    @property
    def agreement(self):
        """Relative difference of the two estimates."""
        return abs(self.spectrum_peak_rad_s - self.zero_crossing_rad_s) / self.zero_crossing_rad_s

    @property
    def consistent(self):
        return self.agreement <= 0.05

    def as_dict(self):
        return {
            "zero_crossing_rad_s": self.zero_crossing_rad_s,
            "spectrum_peak_rad_s": self.spectrum_peak_rad_s,
            "agreement": self.agreement,
        }


def _zero_crossings(t, x):
    s = np.signbit(x)
    idx = np.nonzero(s[:-1] != s[1:])[0]
    x0, x1 = x[idx], x[idx + 1]
    frac = np.where(x1 != x0, x0 / (x0 - x1), 0.5)
    return t[idx] + frac * (t[idx + 1] - t[idx])


def oscillation_frequency(t, x, pad=16):
    """Angular frequency of a sampled real signal.

    Primary estimate: mean spacing of zero crossings of the mean-removed
    signal, taken between crossings of the same direction so a residual
    offset cancels.  Cross-check: peak of the zero-padded, Hann-windowed
    spectrum refined by parabolic interpolation.
    """
    from scipy.signal import detrend

    t = np.asarray(t, dtype=float)
    x = detrend(np.asarray(x, dtype=float), type="constant")
    scale = np.abs(x).max() if len(x) else 0.0
    if scale == 0:
        raise InsufficientDataError("signal is constant")
    zc = _zero_crossings(t, x)
    if len(zc) < 3:
        raise InsufficientDataError(f"only {len(zc)} zero crossings; need at least 3")
    # span an even number of half periods so a residual offset cancels
    k = (len(zc) - 1) // 2 * 2
    w_zc = np.pi * k / (zc[k] - zc[0])
    dt = t[1] - t[0]
    nfft = pad * len(x)
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x)), nfft))
    k = int(np.argmax(spec[1:])) + 1
    if 0 < k < len(spec) - 1:
        a, b, c = np.log(spec[k - 1:k + 2] + 1e-300)
        k = k + 0.5 * (a - c) / (a - 2 * b + c)
    w_fft = 2 * np.pi * k / (nfft * dt)
    return FrequencyReport(float(w_zc), float(w_fft), len(zc))


def estimate_oscillation_frequency(trajectory, observable="re_c2"):
    return oscillation_frequency(trajectory.t, trajectory.column(observable))


def amplitude_decay(t, x, omega):
    """Envelope decay rate (1/s) from a log-linear fit to per-half-period peaks.

    Returns ``(rate, peaks)``; ``peaks`` holds ``max |x|`` for each half
    period starting at ``t[0]``.
    """
    t = np.asarray(t, dtype=float)
    x = np.abs(np.asarray(x, dtype=float))
    half = np.pi / omega
    edges = np.arange(t[0], t[-1] + half, half)
    centers, peaks = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (t >= lo) & (t < hi)
        if m.sum() >= 3:
            j = np.argmax(np.where(m, x, -np.inf))
            centers.append(t[j])
            peaks.append(x[j])
    peaks = np.array(peaks)
    if len(peaks) < 2 or np.any(peaks <= 0):
        raise InsufficientDataError("not enough oscillation peaks to fit an envelope")
    rate = -np.polyfit(np.array(centers), np.log(peaks), 1)[0]
    return float(rate), peaks
