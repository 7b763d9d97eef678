"""Periodic-boundary image operators.

Gaussian blur, forward-difference total-variation stencils and the
frequency-domain machinery that makes the quadratic x-subproblem an exact
O(n log n) solve: with periodic boundaries both the blur H and the two
difference operators T1, T2 are circulant, hence jointly diagonalized by the
2-D DFT.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularSystemError

# Certification threshold for the frequency-domain solve: the returned u
# must satisfy ||(H^T H + gamma T^T T) u - rhs|| <= SOLVE_TOL * ||rhs||.
SOLVE_TOL = 1e-8


def as_image(data) -> np.ndarray:
    """Validate and return a finite 2-D float64 grid."""
    u = np.asarray(data, dtype=float)
    if u.ndim != 2 or u.size == 0:
        raise ValueError(f"expected a non-empty 2-D grid, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("grid contains non-finite entries")
    return u


@dataclass(frozen=True)
class Kernel:
    """Odd-sized isotropic convolution stencil with unit mass."""

    size: int
    sigma: float
    taps: np.ndarray

    def __post_init__(self):
        if self.size % 2 == 0 or self.size < 1:
            raise ValueError("kernel size must be odd and positive")
        if self.taps.shape != (self.size, self.size):
            raise ValueError("taps must be size x size")
        if np.any(self.taps < 0):
            raise ValueError("taps must be nonnegative")
        if abs(float(self.taps.sum()) - 1.0) > 1e-12:
            raise ValueError("taps must sum to 1")
        if not np.allclose(self.taps, np.rot90(self.taps), atol=1e-12):
            raise ValueError("taps must be symmetric under 90-degree rotation")


def gaussian_kernel(size: int, sigma: float) -> Kernel:
    """Normalized isotropic Gaussian taps on the centered odd grid.

    taps(i, j) is proportional to exp(-(i^2 + j^2) / (2 sigma^2)) for
    i, j in [-size//2, size//2], normalized to unit sum.
    """
    if size % 2 == 0 or size < 1:
        raise ValueError("kernel size must be odd and positive")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    r = size // 2
    ii, jj = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    taps = np.exp(-(ii**2 + jj**2) / (2.0 * sigma**2))
    taps /= taps.sum()
    return Kernel(size=size, sigma=float(sigma), taps=taps)


def embed_stencil(taps: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Zero-pad a centered stencil into a rows x cols array with the center
    tap at index (0, 0) and negative offsets wrapped periodically."""
    size = taps.shape[0]
    r = size // 2
    if size > rows or size > cols:
        raise ValueError(f"{size}x{size} kernel does not fit in {rows}x{cols} image")
    pad = np.zeros((rows, cols))
    ri = (np.arange(size) - r) % rows
    ci = (np.arange(size) - r) % cols
    pad[np.ix_(ri, ci)] = taps
    return pad


@dataclass(frozen=True)
class SpectralOperator:
    """2-D DFT spectra of the blur and of the two difference stencils."""

    rows: int
    cols: int
    h_hat: np.ndarray
    t1_hat: np.ndarray
    t2_hat: np.ndarray

    @classmethod
    def from_kernel(cls, kernel: Kernel, rows: int, cols: int) -> "SpectralOperator":
        h_hat = np.fft.fft2(embed_stencil(kernel.taps, rows, cols))
        s1 = np.zeros((rows, cols))
        s1[0, 0] = -1.0
        s1[0, cols - 1] = 1.0  # horizontal forward difference as convolution
        s2 = np.zeros((rows, cols))
        s2[0, 0] = -1.0
        s2[rows - 1, 0] = 1.0
        op = cls(
            rows=rows,
            cols=cols,
            h_hat=h_hat,
            t1_hat=np.fft.fft2(s1),
            t2_hat=np.fft.fft2(s2),
        )
        s = np.abs(op.t1_hat) ** 2 + np.abs(op.t2_hat) ** 2
        if s[0, 0] > 1e-14:
            raise ValueError("difference spectra must vanish at the zero frequency")
        return op

    def tv_spectrum_sq(self) -> np.ndarray:
        return np.abs(self.t1_hat) ** 2 + np.abs(self.t2_hat) ** 2

    def blur_spectrum_sq(self) -> np.ndarray:
        return np.abs(self.h_hat) ** 2


def circular_convolve(u, kernel: Kernel) -> np.ndarray:
    """Periodic convolution of an image with a stencil, computed spectrally."""
    u = as_image(u)
    h_hat = np.fft.fft2(embed_stencil(kernel.taps, *u.shape))
    return np.real(np.fft.ifft2(np.fft.fft2(u) * h_hat))


def tv_forward(u) -> np.ndarray:
    """Forward differences with periodic wrap, stacked as (2, rows, cols).

    Component 0 is the horizontal difference u(i, j+1) - u(i, j); component 1
    the vertical difference u(i+1, j) - u(i, j).  Exactly zero on constants.
    """
    u = np.asarray(u, dtype=float)
    return np.stack([np.roll(u, -1, axis=1) - u, np.roll(u, -1, axis=0) - u])


def tv_adjoint(v) -> np.ndarray:
    """Exact adjoint of :func:`tv_forward` (negative periodic divergence)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 3 or v.shape[0] != 2:
        raise ValueError(f"expected a (2, rows, cols) field, got shape {v.shape}")
    vx, vy = v[0], v[1]
    return (np.roll(vx, 1, axis=1) - vx) + (np.roll(vy, 1, axis=0) - vy)


def apply_normal_system(s: SpectralOperator, gamma: float, u) -> np.ndarray:
    """(H^T H + gamma T^T T) u via one spectral round trip."""
    u = np.asarray(u, dtype=float)
    denom = s.blur_spectrum_sq() + gamma * s.tv_spectrum_sq()
    return np.real(np.fft.ifft2(np.fft.fft2(u) * denom))


def spectral_solve(s: SpectralOperator, gamma: float, rhs) -> np.ndarray:
    """Solve (H^T H + gamma T^T T) u = rhs by frequency division.

    The result is certified: the residual of the reassembled system applied
    to u must not exceed ``SOLVE_TOL * ||rhs||``, guarding against
    cancellation when the spectral denominator is nearly singular.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    rhs = as_image(rhs)
    if rhs.shape != (s.rows, s.cols):
        raise ValueError(f"rhs shape {rhs.shape} does not match operator "
                         f"({s.rows}, {s.cols})")
    denom = s.blur_spectrum_sq() + gamma * s.tv_spectrum_sq()
    if np.any(denom == 0):
        raise SingularSystemError("spectral denominator vanishes at some frequency")
    u = np.real(np.fft.ifft2(np.fft.fft2(rhs) / denom))
    rhs_norm = float(np.linalg.norm(rhs))
    residual = float(np.linalg.norm(apply_normal_system(s, gamma, u) - rhs))
    if residual > SOLVE_TOL * rhs_norm:
        raise SingularSystemError(
            f"solve certificate failed: residual {residual:.3e} exceeds "
            f"{SOLVE_TOL:.0e} * ||rhs|| = {SOLVE_TOL * rhs_norm:.3e}"
        )
    return u


def strong_convexity_modulus(s: SpectralOperator) -> float:
    """Smallest joint spectral value min_w |h^|^2 + |t1^|^2 + |t2^|^2.

    Positive exactly when the blur and the differences share no null
    direction, which makes the data term plus squared-gradient energy
    strongly convex with this modulus.
    """
    return float(np.min(s.blur_spectrum_sq() + s.tv_spectrum_sq()))


def nullspace_check(s: SpectralOperator) -> bool:
    """True iff Null(H) and Null(T) intersect only in the zero image.

    Checks that the difference spectra vanish at (and only matter at) the
    zero frequency, that the blur passes constants, and that the joint
    modulus is positive.
    """
    t_dc = abs(s.t1_hat[0, 0]) + abs(s.t2_hat[0, 0])
    return bool(t_dc <= 1e-14 and abs(s.h_hat[0, 0]) > 0 and strong_convexity_modulus(s) > 0)
