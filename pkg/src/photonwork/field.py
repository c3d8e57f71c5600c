"""Signatures of the work/heat exchange in the outgoing field.

The backward-channel field at a detector position x_d < 0 is directly
proportional to the excited-state amplitude at the retarded time,
amp_b(t) ∝ ψ(t - |x_d|/c), so its phase derivative exposes the emitter
frequency: the effective color ω_eff(t) ≡ -θ̇_b(t) equals ω_s(t - |x_d|/c).
The dipole interaction energy obeys ω̇_s = (1/2) d/dt(⟨H_int⟩/P_e) and
vanishes identically at zero detuning.  After the cycle the outgoing photon
carries exactly the incident energy: E_a + E_b = ω_L.

Per-unit-time amplitudes are used throughout (c = 1), normalised so the
total outgoing single-photon norm is one; the backward-channel share of a
scattering run is Γ₁D/4 ∫P_e dt (half the emission, the other half exits
forward where it interferes with the transmitted packet).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import (
    DEGENERATE_EPS,
    PoleError,
    SimParams,
    ValidationError,
    _cexpm1,
    _poles,
    excited_amplitude_closed,
    excited_population,
    spontaneous_emission_amplitude,
)
from .lattice import C_LIGHT, FieldState, LatticeConfig

__all__ = [
    "DetectorTrace",
    "EnergyPartition",
    "Spectrogram",
    "BoundaryContaminationError",
    "detector_trace",
    "interaction_energy",
    "stark_shift_ratio",
    "energy_partition",
    "time_windowed_spectrum",
]

_FLOAT_FMT = "{:.17e}"


class BoundaryContaminationError(RuntimeError):
    """Field amplitude reached the band margin; the partition is invalid."""


@dataclass(frozen=True)
class DetectorTrace:
    """Backward-channel amplitude and effective color at a fixed detector.

    eff_color is measured from the unwrapped phase of amp_b by
    Richardson-extrapolated central differences; samples where the amplitude
    is too small for a meaningful phase (or at the grid edges) are flagged
    False in valid_mask.
    """

    times: np.ndarray
    amp_b: np.ndarray
    intensity: np.ndarray
    eff_color: np.ndarray
    valid_mask: np.ndarray
    detector_position: float

    def to_csv(self, path) -> None:
        lines = ["t,re_amp,im_amp,intensity,eff_color"]
        for t, a, i, w in zip(self.times, self.amp_b, self.intensity, self.eff_color):
            lines.append(
                ",".join(
                    _FLOAT_FMT.format(v) for v in (t, a.real, a.imag, i, w)
                )
            )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class EnergyPartition:
    """Average energy and photon-number share per output channel."""

    e_a: float
    e_b: float
    norm_a: float
    norm_b: float


@dataclass(frozen=True)
class Spectrogram:
    """Sliding-window Gaussian-tapered power spectrum of the detector signal."""

    window_centers: np.ndarray
    freqs: np.ndarray
    power: np.ndarray  # (n_windows, n_freqs)
    peak_freqs: np.ndarray
    window_width: float

    @property
    def resolution(self) -> float:
        """Nominal spectral resolution 2π/window_width."""
        return 2 * np.pi / self.window_width

    def to_csv(self, path) -> None:
        lines = ["window_center_time,frequency,power"]
        for i, tc in enumerate(self.window_centers):
            for f, p in zip(self.freqs, self.power[i]):
                lines.append(f"{tc:.17e},{f:.17e},{p:.17e}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    def peak_track_to_csv(self, path) -> None:
        lines = ["t_center,peak_freq"]
        for tc, pf in zip(self.window_centers, self.peak_freqs):
            lines.append(f"{tc:.17e},{pf:.17e}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_json(self, path) -> None:
        doc = {
            "window_width": self.window_width,
            "window_centers": list(self.window_centers),
            "freqs": list(self.freqs),
            "power": [list(row) for row in self.power],
            "peak_freqs": list(self.peak_freqs),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")


# ---------------------------------------------------------------------------
# detector trace
# ---------------------------------------------------------------------------

def detector_trace(
    params: SimParams,
    x_d: float,
    grid,
    spontaneous_emission: bool = False,
) -> DetectorTrace:
    """Backward-channel signal at detector position x_d < 0.

    amp_b(t) = (sqrt(Γ₁D)/2) ψ(t - |x_d|/c) for the scattering problem
    (sqrt(Γ₁D/2) ψ_SE for plain spontaneous emission, whose emitted norm
    splits evenly between the channels).  The grid must be uniform and fine
    enough to keep the per-sample phase step of the carrier below π/2.
    """
    grid = np.asarray(grid, dtype=float)
    if x_d >= 0:
        raise ValidationError("detector must sit in the backward channel (x_d < 0)")
    steps = np.diff(grid)
    if len(grid) < 8 or np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9):
        raise ValidationError("grid must be uniform and strictly increasing")
    dt = float(steps[0])
    retarded = grid - abs(x_d) / C_LIGHT
    if retarded[0] < -1e-12 or retarded[-1] > params.t_max * (1 + 1e-9):
        raise ValidationError("retarded times must lie within [0, t_max]")
    retarded = np.maximum(retarded, 0.0)
    carrier = params.omega0 + abs(params.detuning) + params.delta_lw
    if dt * carrier > np.pi / 2:
        raise ValidationError(
            f"grid spacing {dt:g} aliases the carrier; need dt < {np.pi / 2 / carrier:g}"
        )
    if spontaneous_emission:
        amp = np.sqrt(params.gamma1d / 2) * spontaneous_emission_amplitude(
            params.gamma1d, params.omega_l, retarded
        )
    else:
        amp = 0.5 * np.sqrt(params.gamma1d) * excited_amplitude_closed(params, retarded)
    intensity = np.abs(amp) ** 2

    eff, valid = _phase_derivative(grid, amp)
    return DetectorTrace(
        times=grid,
        amp_b=amp,
        intensity=intensity,
        eff_color=-eff,
        valid_mask=valid,
        detector_position=float(x_d),
    )


def _phase_derivative(t: np.ndarray, amp: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(dθ/dt, valid_mask) by Richardson-extrapolated central differences."""
    h = t[1] - t[0]
    theta = np.unwrap(np.angle(amp))
    n = len(t)
    d = np.full(n, np.nan)
    valid = np.zeros(n, dtype=bool)
    if n >= 5:
        d1 = (theta[3:-1] - theta[1:-3]) / (2 * h)
        d2 = (theta[4:] - theta[:-4]) / (4 * h)
        d[2:-2] = (4 * d1 - d2) / 3
        valid[2:-2] = True
    # phase is meaningless where the amplitude is at noise level
    scale = np.max(np.abs(amp)) if len(amp) else 0.0
    weak = np.abs(amp) < 1e-8 * scale
    # the stencil is contaminated by any weak neighbour
    bad = weak.copy()
    for shift in (1, 2):
        bad[shift:] |= weak[:-shift]
        bad[:-shift] |= weak[shift:]
    valid &= ~bad
    d[~valid] = np.nan
    return d, valid


# ---------------------------------------------------------------------------
# interaction energy
# ---------------------------------------------------------------------------

def interaction_energy(params: SimParams, t) -> float | np.ndarray:
    """Average dipole interaction energy ⟨H_int⟩(t).

    Closed form -2 Γ₁D Δ e^{-Δt} Im[r z̄]/|r|² with z = e^{rt} - 1: the
    product of the incident on-site field and ψ*, with the (real) emitted
    self-term dropped by the Im.  Vanishes identically at δ = 0.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValidationError("interaction energy is defined for t >= 0")
    g, d_lw = params.gamma1d, params.delta_lw
    _, _, r = _poles(params)
    if abs(r) < DEGENERATE_EPS:
        out = np.zeros_like(t_arr)  # fully degenerate point has delta = 0
        return out if out.ndim else 0.0
    rt = r * t_arr
    big = rt.real > 200.0
    with np.errstate(over="ignore", invalid="ignore"):
        z = _cexpm1(np.where(big, 0.0, rt))
        generic = -2 * g * d_lw * np.exp(-d_lw * t_arr) * np.imag(r * np.conj(z)) / abs(r) ** 2
    out = generic
    if np.any(big):
        s = (g + d_lw) / 2
        out = np.array(out, copy=True)
        tb = t_arr[big]
        out[big] = (
            -2 * g * d_lw
            * np.exp(-s * tb)
            * np.imag(r * np.exp(-1j * params.detuning * tb))
            / abs(r) ** 2
        )
    return out if out.ndim else float(out)


def stark_shift_ratio(params: SimParams, t, pe_floor: float = 1e-12) -> float | np.ndarray:
    """⟨H_int⟩/P_e, the quantity whose half time-derivative is ω̇_s.

    Guarded against division by a vanishing population: raises PoleError
    whenever P_e drops below pe_floor.
    """
    t_arr = np.asarray(t, dtype=float)
    pe = np.atleast_1d(excited_population(params, t_arr))
    if np.any(pe < pe_floor):
        t_bad = float(np.atleast_1d(t_arr)[pe < pe_floor][0])
        raise PoleError(f"population below {pe_floor:g} at t = {t_bad:g}", time=t_bad)
    out = np.asarray(interaction_energy(params, t_arr)) / pe.reshape(np.shape(t_arr))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# energy partition (from a lattice state)
# ---------------------------------------------------------------------------

def energy_partition(
    final_field: FieldState,
    config: LatticeConfig,
    params: SimParams,
    pe_threshold: float = 1e-8,
    edge_fraction: float = 0.02,
    edge_budget: float = 1e-6,
) -> EnergyPartition:
    """Per-channel average energies from the final mode amplitudes.

    Requires the emitter to have returned to the ground state (P_e below
    pe_threshold) and the spectrum to be clear of the band edges (no more
    than edge_budget of the norm within the outer edge_fraction of the band),
    otherwise the partition is invalid.
    """
    config = config.resolved(params)
    pe = abs(final_field.psi) ** 2
    if pe >= pe_threshold:
        raise ValidationError(
            f"emitter still excited (P_e = {pe:.3e} >= {pe_threshold:g})"
        )
    nu = config.detunings()
    wa = np.abs(final_field.phi_a) ** 2
    wb = np.abs(final_field.phi_b) ** 2
    total = np.sum(wa) + np.sum(wb)
    edge = np.abs(nu) > config.bandwidth * (1 - edge_fraction)
    edge_occ = (np.sum(wa[edge]) + np.sum(wb[edge])) / total
    if edge_occ > edge_budget:
        raise BoundaryContaminationError(
            f"band-edge occupation {edge_occ:.3e} exceeds {edge_budget:g}"
        )
    omega = params.omega0 + nu
    e_a = float(np.sum(omega * wa) / total)
    e_b = float(np.sum(omega * wb) / total)
    return EnergyPartition(
        e_a=e_a,
        e_b=e_b,
        norm_a=float(np.sum(wa) / total),
        norm_b=float(np.sum(wb) / total),
    )


# ---------------------------------------------------------------------------
# time-windowed spectrum
# ---------------------------------------------------------------------------

def time_windowed_spectrum(
    detector: DetectorTrace,
    window_width: float,
    hop: float,
    power_floor: float = 1e-10,
    pad_factor: int = 8,
) -> Spectrogram:
    """Gaussian-tapered sliding-window power spectrum of the detector signal.

    The signal is demodulated at the median effective color before the FFT
    so the window content is narrowband; reported frequencies are absolute.
    Windows whose total power is below power_floor are skipped.  Per-window
    peaks come from quadratic interpolation of the log-power around the
    maximum bin (exact for a Gaussian-windowed stationary tone).
    """
    if hop > window_width / 4 + 1e-12:
        raise ValidationError("hop must not exceed window_width/4")
    t = detector.times
    dt = t[1] - t[0]
    n_win = int(round(window_width / dt))
    if n_win < 16:
        raise ValidationError("window_width must span at least 16 samples")
    ref = float(np.median(detector.eff_color[detector.valid_mask]))
    u = detector.amp_b * np.exp(1j * ref * t)

    sigma = window_width / 4
    n_pad = pad_factor * n_win
    fft_freqs = np.fft.fftfreq(n_pad, dt) * 2 * np.pi
    # amp ~ e^{-i omega t}; after demodulation content sits at f = ref - omega
    abs_freqs = ref - fft_freqs

    centers, rows, peaks = [], [], []
    tc = t[0] + window_width / 2
    while tc <= t[-1] - window_width / 2 + 1e-12:
        i0 = int(np.searchsorted(t, tc - window_width / 2))
        seg = u[i0 : i0 + n_win]
        tt = t[i0 : i0 + n_win]
        taper = np.exp(-((tt - tc) ** 2) / (2 * sigma**2))
        su = seg * taper
        if np.sum(np.abs(su) ** 2) * dt >= power_floor:
            spec = np.abs(np.fft.fft(su, n_pad)) ** 2
            k = int(np.argmax(spec))
            km, kp = (k - 1) % n_pad, (k + 1) % n_pad
            la, lb, lc = np.log(spec[km]), np.log(spec[k]), np.log(spec[kp])
            denom = la - 2 * lb + lc
            frac = 0.5 * (la - lc) / denom if denom != 0 else 0.0
            df = fft_freqs[1] - fft_freqs[0]
            peaks.append(ref - (fft_freqs[k] + frac * df))
            centers.append(tc)
            rows.append(spec)
        tc += hop

    if not centers:
        raise ValidationError("no window had power above the floor")
    order = np.argsort(abs_freqs)
    freqs_sorted = abs_freqs[order]
    power = np.asarray(rows)[:, order]
    # keep a band around the carrier wide enough for the peak structure
    centers_arr = np.asarray(centers)
    span = max(
        12 * 2 * np.pi / window_width,
        4 * float(np.nanmax(np.abs(detector.eff_color[detector.valid_mask] - ref)))
        if np.any(detector.valid_mask)
        else 0.0,
    )
    keep = np.abs(freqs_sorted - ref) <= span
    return Spectrogram(
        window_centers=centers_arr,
        freqs=freqs_sorted[keep],
        power=power[:, keep],
        peak_freqs=np.asarray(peaks),
        window_width=float(window_width),
    )
