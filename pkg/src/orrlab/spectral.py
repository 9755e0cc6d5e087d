"""Spectral grids and fields in the sheared frame z = x - t y.

Conventions
-----------
A field f(z, y) on the periodic window [0, 2 pi) x [-L_y/2, L_y/2) has
coefficients

    f_hat(k, eta) = (1 / 2 pi) * integral exp(-i z k - i y eta) f dz dy,

so that the inverse is f = (1 / 2 pi) sum_k integral f_hat exp(...) d eta,
Parseval reads  integral |f|^2 = sum_k integral |f_hat|^2 d eta  and the
transform of a product is (1 / 2 pi) times the convolution.  The eta
integral is a Delta-eta weighted sum with Delta eta = 2 pi / L_y.

Coefficients are stored in a ``(2 k_max + 1, n_y)`` complex array with
rows k = -k_max .. k_max and columns eta_j = j * Delta eta for
j = -n_y/2 .. n_y/2 - 1 (ascending).  The physical z grid has
n_z = 2 k_max + 1 points, so every stored k is resolved exactly and
no z Nyquist mode exists.  The eta Nyquist column (j = -n_y/2) is
always zero.

The time stepper works on a faster "half" layout: the raw ``rfftn`` of
the physical samples, shape ``(k_max + 1, n_y)`` with eta in FFT order.
``to_half`` and ``from_half`` convert between the two.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import ConfigError

__all__ = [
    "Grid",
    "SpectralField",
    "to_spectral",
    "from_spectral",
    "derivative",
    "dealias",
    "sobolev_norm",
    "l2_norm",
    "inner",
    "product",
    "to_half",
    "from_half",
    "workers",
]


def workers() -> int:
    """Thread count for FFTs, capped by ``ORRLAB_THREADS`` (default 1)."""
    raw = os.environ.get("ORRLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"ORRLAB_THREADS must be an integer, got {raw!r}")
    return max(1, n)


@dataclass(frozen=True)
class Grid:
    """Truncated (k, eta) grid with a periodic y window.

    Parameters
    ----------
    k_max : int
        Largest z wavenumber kept; modes k in [-k_max, k_max].
    n_y : int
        Number of y collocation points (power of two).
    L_y : float
        Length of the periodic y window.
    """

    k_max: int
    n_y: int
    L_y: float = 8 * np.pi

    def __post_init__(self):
        if int(self.k_max) != self.k_max or self.k_max < 1:
            raise ConfigError(f"grid.k_max must be an integer >= 1, got {self.k_max}")
        n = int(self.n_y)
        if n != self.n_y or n < 2 or (n & (n - 1)) != 0:
            raise ConfigError(f"grid.n_y must be a power of two >= 2, got {self.n_y}")
        if not (self.L_y > 0 and np.isfinite(self.L_y)):
            raise ConfigError(f"grid.L_y must be positive, got {self.L_y}")

    @property
    def n_z(self) -> int:
        return 2 * self.k_max + 1

    @property
    def shape(self) -> tuple[int, int]:
        return (2 * self.k_max + 1, self.n_y)

    @property
    def half_shape(self) -> tuple[int, int]:
        return (self.k_max + 1, self.n_y)

    @property
    def d_eta(self) -> float:
        return 2 * np.pi / self.L_y

    @property
    def eta_max(self) -> float:
        return (self.n_y // 2) * self.d_eta

    @cached_property
    def k(self) -> np.ndarray:
        return np.arange(-self.k_max, self.k_max + 1)

    @cached_property
    def j(self) -> np.ndarray:
        return np.arange(-(self.n_y // 2), self.n_y // 2)

    @cached_property
    def eta(self) -> np.ndarray:
        return self.j * self.d_eta

    @cached_property
    def K(self) -> np.ndarray:
        return np.broadcast_to(self.k[:, None].astype(float), self.shape)

    @cached_property
    def ETA(self) -> np.ndarray:
        return np.broadcast_to(self.eta[None, :], self.shape)

    @cached_property
    def z(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_z) / self.n_z

    @cached_property
    def y(self) -> np.ndarray:
        return -self.L_y / 2 + self.L_y * np.arange(self.n_y) / self.n_y

    @property
    def dz(self) -> float:
        return 2 * np.pi / self.n_z

    @property
    def dy(self) -> float:
        return self.L_y / self.n_y

    @cached_property
    def k_cut(self) -> int:
        return int(np.floor(2 * self.k_max / 3))

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep_k = np.abs(self.k) <= 2 * self.k_max / 3
        keep_eta = np.abs(self.j) <= self.n_y / 3
        keep_eta[0] = False  # Nyquist column
        return keep_k[:, None] & keep_eta[None, :]

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        m = np.ones(self.shape, dtype=bool)
        m[:, 0] = False
        return m

    # half layout helpers
    @cached_property
    def k_half(self) -> np.ndarray:
        return np.arange(self.k_max + 1, dtype=float)

    @cached_property
    def eta_fft(self) -> np.ndarray:
        return sfft.fftfreq(self.n_y, d=1.0 / self.n_y) * self.d_eta

    @cached_property
    def half_dealias_mask(self) -> np.ndarray:
        jf = sfft.fftfreq(self.n_y, d=1.0 / self.n_y)
        keep_eta = np.abs(jf) <= self.n_y / 3
        keep_eta[self.n_y // 2] = False
        keep_k = self.k_half <= 2 * self.k_max / 3
        return keep_k[:, None] & keep_eta[None, :]

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(-i eta_j y0) with y0 = -L_y/2 equals (-1)^j
        return np.where(self.j % 2 == 0, 1.0, -1.0)

    @property
    def _scale(self) -> float:
        return self.L_y / (self.n_z * self.n_y)

    def index(self, k: int, j: int) -> tuple[int, int]:
        """Array position of the mode (k, eta = j * Delta eta)."""
        if abs(k) > self.k_max or not (-(self.n_y // 2) <= j < self.n_y // 2):
            raise ConfigError(f"mode (k={k}, j={j}) is outside the grid")
        return (k + self.k_max, j + self.n_y // 2)

    def eta_index(self, eta: float) -> int:
        """Integer j with eta = j * Delta eta, or ConfigError if off-grid."""
        jr = eta / self.d_eta
        j = int(round(jr))
        if abs(jr - j) > 1e-9 * max(1.0, abs(jr)):
            raise ConfigError(f"eta={eta} is not on the grid (spacing {self.d_eta})")
        if not (-(self.n_y // 2) < j < self.n_y // 2):
            raise ConfigError(f"eta={eta} lies outside the grid")
        return j

    def zeros(self, frame_time: float = 0.0) -> "SpectralField":
        return SpectralField(self, np.zeros(self.shape, dtype=complex), frame_time)


@dataclass
class SpectralField:
    """Fourier coefficients of a real field on a :class:`Grid`."""

    grid: Grid
    coeffs: np.ndarray
    frame_time: float = 0.0
    meta: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != self.grid.shape:
            raise ConfigError(
                f"coefficient shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs.copy(), self.frame_time)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs, self.frame_time)

    def __getitem__(self, mode: tuple[int, int]) -> complex:
        return self.coeffs[self.grid.index(*mode)]

    def hermitian_defect(self) -> float:
        """Largest |c(-k,-eta) - conj c(k,eta)| over the non-Nyquist block."""
        c = self.coeffs[:, 1:]
        return float(np.max(np.abs(c[::-1, ::-1] - np.conj(c)), initial=0.0))

    def symmetrize(self) -> "SpectralField":
        """Project onto Hermitian-symmetric coefficients with zero Nyquist."""
        c = self.coeffs.copy()
        c[:, 0] = 0.0
        b = c[:, 1:]
        c[:, 1:] = 0.5 * (b + np.conj(b[::-1, ::-1]))
        return self.with_coeffs(c)

    def __add__(self, other):
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__


def to_spectral(values: np.ndarray, grid: Grid, frame_time: float = 0.0) -> SpectralField:
    """Coefficients of real samples ``values[i_z, i_y]`` on the grid."""
    values = np.asarray(values)
    if values.shape != (grid.n_z, grid.n_y):
        raise ConfigError(
            f"sample array shape {values.shape} does not match grid ({grid.n_z}, {grid.n_y})"
        )
    if np.iscomplexobj(values):
        raise ConfigError("physical samples must be real")
    c = sfft.fftshift(sfft.fft2(values, workers=workers()), axes=(0, 1))
    c *= grid._scale * grid._phase[None, :]
    c[:, 0] = 0.0
    return SpectralField(grid, c, frame_time)


def from_spectral(field: SpectralField) -> np.ndarray:
    """Real samples on the (z, y) grid."""
    g = field.grid
    c = field.coeffs * (g._phase[None, :] / g._scale)
    c[:, 0] = 0.0
    u = sfft.ifft2(sfft.ifftshift(c, axes=(0, 1)), workers=workers())
    return u.real.copy()


def to_half(field: SpectralField) -> np.ndarray:
    """Raw ``rfftn`` layout used by the time stepper."""
    g = field.grid
    c = field.coeffs[g.k_max:, :] * (g._phase[None, :] / g._scale)
    return sfft.ifftshift(c, axes=1)


def from_half(half: np.ndarray, grid: Grid, frame_time: float = 0.0) -> SpectralField:
    """Inverse of :func:`to_half`, filling k < 0 by Hermitian symmetry."""
    pos = sfft.fftshift(half, axes=1) * (grid._scale * grid._phase[None, :])
    c = np.empty(grid.shape, dtype=complex)
    km = grid.k_max
    c[km:, :] = pos
    # c(-k, eta_j) = conj c(k, eta_{-j}); column 0 is the Nyquist column
    neg = np.conj(pos[1:, :])
    neg_flip = np.zeros_like(neg)
    neg_flip[:, 1:] = neg[:, :0:-1]
    c[:km, :] = neg_flip[::-1, :]
    c[:, 0] = 0.0
    # keep k = 0 exactly Hermitian as well
    row = c[km, 1:]
    c[km, 1:] = 0.5 * (row + np.conj(row[::-1]))
    return SpectralField(grid, c, frame_time)


def derivative(field: SpectralField, axis: str, t: float | None = None) -> SpectralField:
    """Spectral derivative along ``z``, ``y`` or the moving-frame ``y_moving``.

    ``y_moving`` is the physical d/dy at fixed x written in sheared
    coordinates, with multiplier i (eta - k t).
    """
    g = field.grid
    if axis == "z":
        m = 1j * g.K
    elif axis == "y":
        m = 1j * g.ETA
    elif axis == "y_moving":
        tt = field.frame_time if t is None else t
        m = 1j * (g.ETA - g.K * tt)
    else:
        raise ConfigError(f"unknown derivative axis {axis!r}")
    return field.with_coeffs(field.coeffs * m)


def dealias(field: SpectralField) -> SpectralField:
    """Zero every mode outside the 2/3 box."""
    return field.with_coeffs(np.where(field.grid.dealias_mask, field.coeffs, 0.0))


def _bracket(grid: Grid, k, eta) -> np.ndarray:
    return np.sqrt(1.0 + (np.abs(k) + np.abs(eta)) ** 2)


def sobolev_norm(field: SpectralField, N: float, physical: bool = False) -> float:
    """(sum_k integral <k,eta>^{2N} |f_hat|^2 d eta)^{1/2}.

    With ``physical=True`` the frequency is read as eta - k t with
    t = ``field.frame_time``, which gives the norm of the field in the
    original (x, y) coordinates.
    """
    g = field.grid
    eta = g.ETA - g.K * field.frame_time if physical else g.ETA
    w = _bracket(g, g.K, eta) ** (2.0 * N)
    return float(np.sqrt(np.sum(w * np.abs(field.coeffs) ** 2) * g.d_eta))


def l2_norm(field: SpectralField) -> float:
    """L2 norm by Parseval."""
    return float(np.sqrt(np.sum(np.abs(field.coeffs) ** 2) * field.grid.d_eta))


def inner(f: SpectralField, g: SpectralField) -> complex:
    """Complex L2 inner product  integral f conj(g)."""
    return complex(np.sum(f.coeffs * np.conj(g.coeffs)) * f.grid.d_eta)


def product(f: SpectralField, g: SpectralField, dealiased: bool = True) -> SpectralField:
    """Pseudospectral product f g, dealiased by default."""
    if dealiased:
        f, g = dealias(f), dealias(g)
    out = to_spectral(from_spectral(f) * from_spectral(g), f.grid, f.frame_time)
    return dealias(out) if dealiased else out
