"""Discrete time-frequency analysis operator with wavelet and STFT backends.

Both backends work in sample units (``dt = 1``) so that transform energies
compare directly with the dimensionless signal energy ``sum x[n]^2``.

Wavelet backend
    Complex Morlet atoms ``psi_{a,b}[n] = a**-0.5 * psi((n - b) / a)`` truncated
    at four envelope standard deviations.  Rows are scales ``a_k`` with measure
    weights ``Delta a_k / a_k**2`` (geometric cell widths); ``Delta b`` is the
    translation step.

STFT backend
    One-sided DFT bins of windowed frames that start at ``b_m`` (frames may
    hang over either end of the signal, which is zero there).  Coefficients are
    scaled by ``1 / sqrt(L * sum(w**2))`` and rows carry the Hermitian fold
    weight (1 for DC and Nyquist, 2 otherwise), so with ``Delta b = hop`` the
    full-plane energy equals ``sum x[n]^2`` exactly whenever the squared window
    overlap-adds to a constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import fft as sp_fft
from scipy import integrate
from scipy.signal import get_window
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .errors import InvalidGrid, NotAdmissible
from .signal_model import Signal

PI_M14 = np.pi**-0.25
# |psi_hat(0)|^2 relative to the peak above which the admissibility integral
# is treated as divergent
DC_LEAKAGE_TOL = 1e-10


@dataclass(frozen=True)
class WaveletSpec:
    """Complex Morlet mother wavelet ``pi**-0.25 exp(i wc t) exp(-t**2 / 2)``.

    The admissibility correction term is omitted; that is only safe for
    ``center_frequency >= 5`` and smaller values are rejected.
    """

    center_frequency: float = 6.0
    family: str = "morlet"
    support: float = 4.0

    def __post_init__(self):
        if self.family != "morlet":
            raise InvalidGrid(f"unsupported wavelet family {self.family!r}")
        if not self.center_frequency > 0:
            raise InvalidGrid("center frequency must be positive")
        if _dc_leakage(self.psi_hat, self.center_frequency) > DC_LEAKAGE_TOL:
            raise NotAdmissible(
                f"uncorrected Morlet with center frequency {self.center_frequency} "
                "has non-negligible DC content"
            )

    def psi(self, t):
        t = np.asarray(t, dtype=float)
        return PI_M14 * np.exp(1j * self.center_frequency * t - 0.5 * t * t)

    def psi_hat(self, w):
        w = np.asarray(w, dtype=float)
        return np.pi**0.25 * math.sqrt(2.0) * np.exp(-0.5 * (w - self.center_frequency) ** 2)

    def half_width(self, scale: float) -> int:
        return int(math.floor(self.support * scale))

    def frequency(self, scale, fs: float = 1.0):
        """Peak frequency in Hz of the atom at ``scale`` (scale in samples)."""
        return self.center_frequency * fs / (2.0 * np.pi * np.asarray(scale, dtype=float))

    def scale_for_frequency(self, freq, fs: float = 1.0):
        return self.center_frequency * fs / (2.0 * np.pi * np.asarray(freq, dtype=float))


@dataclass(frozen=True)
class StftSpec:
    window: str = "hann"
    window_length: int = 256
    hop: int = 64

    def __post_init__(self):
        if self.window not in ("hann", "rectangular"):
            raise InvalidGrid(f"unsupported window {self.window!r}")
        if self.window_length <= 0 or self.hop <= 0:
            raise InvalidGrid("window_length and hop must be positive")
        if self.hop > self.window_length:
            raise InvalidGrid("hop must not exceed window_length")

    def window_array(self) -> np.ndarray:
        if self.window == "rectangular":
            return np.ones(self.window_length)
        return get_window("hann", self.window_length, fftbins=True)

    @property
    def n_bins(self) -> int:
        return self.window_length // 2 + 1

    def norm(self) -> float:
        w = self.window_array()
        return math.sqrt(self.window_length * float(np.dot(w, w)))

    def overlap_ripple(self) -> float:
        """Relative peak-to-peak ripple of the overlap-added squared window.

        Zero means the full-plane energy identity is exact.
        """
        w2 = self.window_array() ** 2
        L, H = self.window_length, self.hop
        acc = np.zeros(H)
        for start in range(0, L, H):
            seg = w2[start:start + H]
            acc[: seg.size] += seg
        return float((acc.max() - acc.min()) / acc.mean())

    def frequency(self, bins, fs: float = 1.0):
        return np.asarray(bins, dtype=float) * fs / self.window_length


Backend = Union[WaveletSpec, StftSpec]


def log_scales(a_min: float, a_max: float, num: int) -> np.ndarray:
    if not (0 < a_min <= a_max) or num < 1:
        raise InvalidGrid("need 0 < a_min <= a_max and num >= 1")
    if num == 1:
        return np.array([float(a_min)])
    return np.geomspace(a_min, a_max, num)


@dataclass(frozen=True)
class GridSpec:
    """Scale (or frequency-bin) by translation sampling grid.

    ``scales`` holds wavelet scales in samples for the wavelet backend and
    one-sided DFT bin indices for the STFT backend.  ``translations`` are
    sample indices: atom centres (wavelet) or frame starts (STFT).
    """

    backend: Backend
    scales: tuple
    translations: tuple
    n_samples: int

    def __post_init__(self):
        scales = tuple(float(a) for a in self.scales)
        trans = tuple(int(b) for b in self.translations)
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "translations", trans)
        if self.n_samples <= 0:
            raise InvalidGrid("n_samples must be positive")
        if not scales or not trans:
            raise InvalidGrid("grid needs at least one scale and one translation")
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise InvalidGrid("scales must be strictly increasing")
        if len(trans) > 1:
            steps = set(np.diff(trans).tolist())
            if len(steps) != 1 or steps.pop() <= 0:
                raise InvalidGrid("translations must be uniformly spaced and increasing")
        if isinstance(self.backend, StftSpec):
            L = self.backend.window_length
            if any(a != int(a) or a < 0 or a > L // 2 for a in scales):
                raise InvalidGrid(f"STFT rows must be integer bins in [0, {L // 2}]")
            if trans[0] < -(L - 1) or trans[-1] > self.n_samples - 1:
                raise InvalidGrid("STFT frames must overlap the signal")
        else:
            if scales[0] <= 0:
                raise InvalidGrid("scales must be positive")
            if trans[0] < 0 or trans[-1] > self.n_samples - 1:
                raise InvalidGrid("translations out of signal range")

    # -- constructors -------------------------------------------------------

    @classmethod
    def stft(cls, spec: StftSpec, n_samples: int, bins=None) -> "GridSpec":
        """Frames every ``hop`` samples, overhanging both ends so each sample
        sees the same number of frames."""
        if bins is None:
            bins = range(spec.n_bins)
        starts = range(-(spec.window_length - spec.hop), n_samples, spec.hop)
        return cls(spec, tuple(bins), tuple(starts), n_samples)

    @classmethod
    def wavelet(cls, spec: WaveletSpec, n_samples: int, scales, step: int = 1) -> "GridSpec":
        return cls(spec, tuple(scales), tuple(range(0, n_samples, step)), n_samples)

    # -- derived quantities -------------------------------------------------

    @property
    def is_stft(self) -> bool:
        return isinstance(self.backend, StftSpec)

    @property
    def shape(self) -> tuple:
        return (len(self.scales), len(self.translations))

    @property
    def scale_array(self) -> np.ndarray:
        return np.asarray(self.scales)

    @property
    def translation_array(self) -> np.ndarray:
        return np.asarray(self.translations)

    @property
    def delta_b(self) -> float:
        if len(self.translations) > 1:
            return float(self.translations[1] - self.translations[0])
        return float(self.backend.hop) if self.is_stft else 1.0

    def measure_weights(self) -> np.ndarray:
        if self.is_stft:
            L = self.backend.window_length
            bins = self.scale_array
            w = np.full(bins.size, 2.0)
            w[bins == 0] = 1.0
            if L % 2 == 0:
                w[bins == L // 2] = 1.0
            return w
        return _geometric_widths(self.scale_array) / self.scale_array**2

    def row_frequencies(self, fs: float = 1.0) -> np.ndarray:
        return np.asarray(self.backend.frequency(self.scale_array, fs), dtype=float)

    def column_centres(self) -> np.ndarray:
        """Sample position each column describes (frame centre for STFT)."""
        b = self.translation_array.astype(float)
        if self.is_stft:
            return b + self.backend.window_length / 2.0
        return b

    def boundary_columns(self) -> np.ndarray:
        """Columns whose atoms are clipped by a signal edge at some scale."""
        b = self.translation_array
        if self.is_stft:
            return (b < 0) | (b + self.backend.window_length > self.n_samples)
        k = self.backend.half_width(self.scales[-1])
        return (b - k < 0) | (b + k > self.n_samples - 1)


def _geometric_widths(scales: np.ndarray) -> np.ndarray:
    """Cell widths with edges at geometric midpoints of neighbouring scales."""
    if scales.size == 1:
        return scales.copy()
    mids = np.sqrt(scales[1:] * scales[:-1])
    lo = np.concatenate(([scales[0] ** 2 / mids[0]], mids))
    hi = np.concatenate((mids, [scales[-1] ** 2 / mids[-1]]))
    return hi - lo


@dataclass(frozen=True)
class CoefficientField:
    coefficients: np.ndarray = field(repr=False)
    grid: GridSpec
    measure_weights: np.ndarray = field(repr=False)
    delta_b: float
    source_energy: float

    def cell_weights(self) -> np.ndarray:
        """Per-row factor ``w_k * Delta b`` of the discrete measure."""
        return self.measure_weights * self.delta_b

    def weighted_energy(self) -> np.ndarray:
        """``|W|^2 w_k Delta b`` cell by cell."""
        return np.abs(self.coefficients) ** 2 * self.cell_weights()[:, None]


@dataclass(frozen=True)
class EnergyMap:
    density: np.ndarray = field(repr=False)
    grid: GridSpec


# -- projection -------------------------------------------------------------


def _as_samples(x, grid: GridSpec) -> np.ndarray:
    samples = x.samples if isinstance(x, Signal) else np.asarray(x, dtype=float)
    if samples.shape != (grid.n_samples,):
        raise InvalidGrid(
            f"signal has {samples.size} samples, grid expects {grid.n_samples}"
        )
    return samples


def _field(coeffs: np.ndarray, grid: GridSpec, x: np.ndarray) -> CoefficientField:
    return CoefficientField(
        coefficients=coeffs,
        grid=grid,
        measure_weights=grid.measure_weights(),
        delta_b=grid.delta_b,
        source_energy=float(np.dot(x, x)),
    )


def _wavelet_filter(spec: WaveletSpec, scale: float) -> np.ndarray:
    """Correlation filter ``conj(psi(j / a)) / sqrt(a)`` for ``j = -K..K``."""
    k = spec.half_width(scale)
    j = np.arange(-k, k + 1)
    return np.conj(spec.psi(j / scale)) / math.sqrt(scale)


def project(x, grid: GridSpec) -> CoefficientField:
    """FFT-based analysis ``W[k, m] = sum_n x[n] conj(psi_{a_k, b_m}[n])``.

    Each row is computed independently, so the result does not depend on
    evaluation order.
    """
    samples = _as_samples(x, grid)
    if grid.is_stft:
        coeffs = _stft_fft(samples, grid)
    else:
        coeffs = _wavelet_fft(samples, grid)
    return _field(coeffs, grid, samples)


def _wavelet_fft(x: np.ndarray, grid: GridSpec) -> np.ndarray:
    spec = grid.backend
    n = x.size
    b = grid.translation_array
    out = np.empty(grid.shape, dtype=complex)
    for row, a in enumerate(grid.scales):
        g = _wavelet_filter(spec, a)
        k = (g.size - 1) // 2
        nfft = sp_fft.next_fast_len(n + g.size - 1)
        conv = sp_fft.ifft(sp_fft.fft(x, nfft) * sp_fft.fft(g[::-1], nfft))
        out[row] = conv[b + k]
    return out


def _frames(x: np.ndarray, grid: GridSpec) -> np.ndarray:
    L = grid.backend.window_length
    padded = np.concatenate((np.zeros(L), x, np.zeros(L)))
    idx = grid.translation_array[:, None] + L + np.arange(L)[None, :]
    return padded[idx] * grid.backend.window_array()[None, :]


def _stft_fft(x: np.ndarray, grid: GridSpec) -> np.ndarray:
    spec = grid.backend
    spectra = sp_fft.rfft(_frames(x, grid), axis=1)
    bins = grid.scale_array.astype(int)
    return spectra[:, bins].T / spec.norm()


def project_direct(x, grid: GridSpec, block: int = 256) -> CoefficientField:
    """Reference projection by explicit inner products (O(M N) per row)."""
    samples = _as_samples(x, grid)
    if grid.is_stft:
        spec = grid.backend
        L = spec.window_length
        bins = grid.scale_array.astype(int)
        dft = np.exp(-2j * np.pi * np.outer(bins, np.arange(L)) / L)
        coeffs = dft @ _frames(samples, grid).T / spec.norm()
        return _field(coeffs, grid, samples)

    spec = grid.backend
    b = grid.translation_array
    coeffs = np.empty(grid.shape, dtype=complex)
    for row, a in enumerate(grid.scales):
        g = _wavelet_filter(spec, a)
        k = (g.size - 1) // 2
        padded = np.concatenate((np.zeros(k), samples, np.zeros(k)))
        offsets = np.arange(g.size)
        for start in range(0, b.size, block):
            bb = b[start:start + block]
            coeffs[row, start:start + bb.size] = padded[bb[:, None] + offsets[None, :]] @ g
    return _field(coeffs, grid, samples)


def synthesize(coeffs: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Adjoint of :func:`project`: ``sum_{k,m} c[k, m] psi_{a_k, b_m}`` (complex)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    n = grid.n_samples
    if grid.is_stft:
        spec = grid.backend
        L = spec.window_length
        full = np.zeros((coeffs.shape[1], L), dtype=complex)
        full[:, grid.scale_array.astype(int)] = coeffs.T
        frames = sp_fft.ifft(full, axis=1) * L * spec.window_array()[None, :] / spec.norm()
        padded = np.zeros(n + 2 * L, dtype=complex)
        idx = grid.translation_array[:, None] + L + np.arange(L)[None, :]
        np.add.at(padded, idx, frames)
        return padded[L:L + n]

    spec = grid.backend
    out = np.zeros(n, dtype=complex)
    for row, a in enumerate(grid.scales):
        atom = np.conj(_wavelet_filter(spec, a))
        k = (atom.size - 1) // 2
        spikes = np.zeros(n, dtype=complex)
        spikes[grid.translation_array] = coeffs[row]
        nfft = sp_fft.next_fast_len(n + atom.size - 1)
        conv = sp_fft.ifft(sp_fft.fft(spikes, nfft) * sp_fft.fft(atom, nfft))
        out += conv[k:k + n]
    return out


def frame_operator(grid: GridSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Real symmetric operator ``x -> Re T*(D T x)`` whose quadratic form is
    the weighted transform energy of a real signal."""
    weights = grid.measure_weights() * grid.delta_b

    def apply(x):
        x = np.asarray(x, dtype=float).ravel()
        coeffs = project(x, grid).coefficients * weights[:, None]
        return synthesize(coeffs, grid).real

    return apply


# -- energy -----------------------------------------------------------------


def energy_density(fld: CoefficientField) -> EnergyMap:
    return EnergyMap(np.abs(fld.coefficients) ** 2, fld.grid)


def total_transform_energy(fld: CoefficientField) -> float:
    return float(np.sum(fld.weighted_energy()))


def _dc_leakage(psi_hat: Callable, peak: float) -> float:
    p0 = abs(complex(np.asarray(psi_hat(0.0)))) ** 2
    pk = max(
        abs(complex(np.asarray(psi_hat(peak)))) ** 2,
        abs(complex(np.asarray(psi_hat(-peak)))) ** 2,
    )
    if pk == 0.0:
        return math.inf
    return p0 / pk


def admissibility_constant(spec, peak: float | None = None, epsrel: float = 1e-10) -> float:
    """Admissibility integral ``int_0^inf |psi_hat(w)|^2 / w dw``.

    ``spec`` is a :class:`WaveletSpec` or a callable Fourier transform.  The
    positive and negative half-axes are averaged, which is the constant that
    governs real-valued signals; for a real mother wavelet both halves agree.
    """
    if isinstance(spec, WaveletSpec):
        psi_hat, peak = spec.psi_hat, spec.center_frequency
    else:
        psi_hat = spec
        peak = 1.0 if peak is None else peak
    if _dc_leakage(psi_hat, peak) > DC_LEAKAGE_TOL:
        raise NotAdmissible("psi_hat(0) is not negligible; the integral diverges")

    def integrand(u):
        # log-frequency substitution: dw / w = du
        w = math.exp(u)
        return 0.5 * (abs(complex(psi_hat(w))) ** 2 + abs(complex(psi_hat(-w))) ** 2)

    lp = math.log(peak)
    pieces = [(lp - 40.0, lp - 3.0), (lp - 3.0, lp), (lp, lp + 3.0), (lp + 3.0, lp + 12.0)]
    total = 0.0
    for lo, hi in pieces:
        val, _ = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=epsrel, limit=400)
        total += val
    if not math.isfinite(total) or total <= 0:
        raise NotAdmissible(f"admissibility integral is not finite and positive: {total}")
    return total


def estimate_frame_bounds(
    grid: GridSpec, probe_count: int = 8, seed: int = 0, method: str = "lanczos"
) -> tuple[float, float]:
    """Empirical lower/upper frame bounds of ``grid``.

    ``method="probe"`` returns the min/max Rayleigh quotient
    ``energy / ||x||^2`` over ``probe_count`` random unit-norm signals.
    ``method="lanczos"`` additionally runs Lanczos iterations on the frame
    operator started from the first probe, converging to its largest
    eigenvalue; only this variant gives an upper bound that holds for
    arbitrary signals.  The lower bound always comes from the probes (the
    small end of the spectrum clusters near zero for wavelet grids).
    """
    if probe_count < 1:
        raise ValueError("probe_count must be >= 1")
    rng = np.random.default_rng(seed)
    probes = rng.standard_normal((probe_count, grid.n_samples))
    probes /= np.linalg.norm(probes, axis=1, keepdims=True)
    apply = frame_operator(grid)
    quotients = [float(np.dot(p, apply(p))) for p in probes]
    lo, hi = min(quotients), max(quotients)
    if method == "probe":
        return lo, hi
    if method != "lanczos":
        raise ValueError(f"unknown method {method!r}")

    n = grid.n_samples
    if n <= 2:
        mat = np.column_stack([apply(e) for e in np.eye(n)])
        eig = np.linalg.eigvalsh(0.5 * (mat + mat.T))
        return float(min(lo, eig[0])), float(max(hi, eig[-1]))
    op = LinearOperator((n, n), matvec=apply, dtype=float)
    try:
        val = eigsh(op, k=1, which="LA", v0=probes[0], tol=1e-10,
                    maxiter=20 * n, return_eigenvectors=False)[0]
    except ArpackNoConvergence as exc:
        val = exc.eigenvalues[0] if len(exc.eigenvalues) else hi
    return lo, max(hi, float(val))
