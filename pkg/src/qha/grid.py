"""Uniform phase-space and configuration-space lattices.

Every transform here is a Riemann sum with weight ``h`` per axis and the
``exp(-2 pi i <.,.>)`` sign convention. Lattice points on each axis are
``-L + i*h`` for ``i = 0..N-1`` with ``h = 2L/N``.
"""

from __future__ import annotations

import itertools
import json
import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .errors import AccuracyError, ConfigurationError, GridMismatchError, SupportOverflowError

TWO_PI = 2.0 * np.pi

# relative L2 mass allowed in the outer shell before seminorms refuse to run
TAIL_TOLERANCE = 1e-6


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class _Lattice:
    d: int
    L: float
    N: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ConfigurationError(f"d must be a positive integer, got {self.d!r}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ConfigurationError(f"L must be a positive real, got {self.L!r}")
        if int(self.N) != self.N or not _is_power_of_two(int(self.N)):
            raise ConfigurationError(f"N must be a power of two, got {self.N!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "N", int(self.N))

    ndim_per_d = 1

    @property
    def ndim(self) -> int:
        return self.ndim_per_d * self.d

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def cell(self) -> float:
        return self.h ** self.ndim

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.ndim

    @property
    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)

    @property
    def freqs(self) -> np.ndarray:
        """FFT frequencies in the ``numpy.fft`` ordering."""
        return np.fft.fftfreq(self.N, self.h)

    @property
    def self_dual(self) -> bool:
        """True when the frequency lattice of the Riemann DFT is the lattice itself."""
        return abs(self.N * self.h * self.h - 1.0) < 1e-12

    def coords(self) -> tuple:
        return tuple(np.meshgrid(*([self.axis] * self.ndim), indexing="ij", sparse=True))

    def sample(self, fn: Callable) -> "GridFunction":
        """Evaluate ``fn(*coords)`` on the lattice."""
        values = np.broadcast_to(fn(*self.coords()), self.shape)
        return self.function_type(self, values)

    def zeros(self) -> "GridFunction":
        return self.function_type(self, np.zeros(self.shape, dtype=complex))

    def index_of(self, point: float) -> int:
        """Lattice index of an on-lattice coordinate; raises if off-lattice."""
        m = (point + self.L) / self.h
        k = int(round(m))
        if abs(m - k) > 1e-9 or not 0 <= k < self.N:
            raise ValueError(f"{point} is not a lattice point")
        return k

    def axis_names(self) -> list:
        raise NotImplementedError

    def header(self) -> dict:
        return {"kind": self.kind, "d": self.d, "L": self.L, "N": self.N, "axes": self.axis_names()}


@dataclass(frozen=True)
class PhaseGrid(_Lattice):
    """Lattice on ``[-L, L)^(2d)``; axes are ``x_1..x_d, xi_1..xi_d``."""

    ndim_per_d = 2
    kind = "phase"

    @property
    def function_type(self):
        return PhaseFunction

    def axis_names(self) -> list:
        return [f"x{i + 1}" for i in range(self.d)] + [f"xi{i + 1}" for i in range(self.d)]

    def sublattice(self, n_eval: int) -> "PhaseGrid":
        """Every ``N // n_eval``-th point of this lattice, as a grid of its own."""
        if self.N % n_eval:
            raise ConfigurationError(f"n_eval={n_eval} does not divide N={self.N}")
        return PhaseGrid(self.d, self.L, n_eval)


@dataclass(frozen=True)
class ConfigGrid(_Lattice):
    """Lattice on ``[-L_x, L_x)^d`` carrying wave functions."""

    kind = "config"

    @property
    def function_type(self):
        return WaveFunction

    def axis_names(self) -> list:
        return [f"t{i + 1}" for i in range(self.d)]


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: _Lattice
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            raise ConfigurationError(f"values shape {values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("samples must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def _like(self, values) -> "GridFunction":
        return type(self)(self.grid, values)

    def _check_same(self, other: "GridFunction"):
        if not isinstance(other, GridFunction) or other.grid != self.grid:
            raise GridMismatchError("operands live on different grids")

    def __add__(self, other):
        self._check_same(other)
        return self._like(self.values + other.values)

    def __sub__(self, other):
        self._check_same(other)
        return self._like(self.values - other.values)

    def __neg__(self):
        return self._like(-self.values)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check_same(other)
            return self._like(self.values * other.values)
        return self._like(self.values * other)

    __rmul__ = __mul__

    def conj(self):
        return self._like(np.conj(self.values))

    def real_part(self):
        return self._like(self.values.real)

    def norm(self, p=2.0) -> float:
        return lp_norm(self, p)

    def at_origin(self) -> complex:
        idx = tuple(self.grid.index_of(0.0) for _ in range(self.grid.ndim))
        return complex(self.values[idx])

    # serialisation: JSON header plus interleaved (re, im) doubles, row-major

    def to_json(self) -> str:
        payload = dict(self.grid.header())
        payload["values"] = np.column_stack([self.values.real.ravel(), self.values.imag.ravel()]).ravel().tolist()
        return json.dumps(payload)

    def to_bytes(self) -> bytes:
        header = json.dumps(self.grid.header()).encode()
        body = np.column_stack([self.values.real.ravel(), self.values.imag.ravel()]).astype("<f8").tobytes()
        return struct.pack("<I", len(header)) + header + body

    @staticmethod
    def _from_header(header: dict, flat) -> "GridFunction":
        grid_type = {"phase": PhaseGrid, "config": ConfigGrid}[header["kind"]]
        grid = grid_type(header["d"], header["L"], header["N"])
        if list(header.get("axes", grid.axis_names())) != grid.axis_names():
            raise ConfigurationError("axis names do not match the grid kind")
        flat = np.asarray(flat, dtype=float)
        values = (flat[0::2] + 1j * flat[1::2]).reshape(grid.shape)
        return grid.function_type(grid, values)

    @staticmethod
    def from_json(text: str) -> "GridFunction":
        payload = json.loads(text)
        return GridFunction._from_header(payload, payload["values"])

    @staticmethod
    def from_bytes(blob: bytes) -> "GridFunction":
        (n,) = struct.unpack("<I", blob[:4])
        header = json.loads(blob[4 : 4 + n].decode())
        return GridFunction._from_header(header, np.frombuffer(blob[4 + n :], dtype="<f8"))


class PhaseFunction(GridFunction):
    """Complex samples on a :class:`PhaseGrid`."""

    def __post_init__(self):
        if not isinstance(self.grid, PhaseGrid):
            raise GridMismatchError("PhaseFunction needs a PhaseGrid")
        super().__post_init__()


class WaveFunction(GridFunction):
    """Complex samples of a function on ``R^d``."""

    def __post_init__(self):
        if not isinstance(self.grid, ConfigGrid):
            raise GridMismatchError("WaveFunction needs a ConfigGrid")
        super().__post_init__()

    def inner(self, other: "WaveFunction") -> complex:
        """``(f, g) = sum f conj(g) h^d`` -- linear in the first slot."""
        self._check_same(other)
        return complex(np.vdot(other.values, self.values) * self.grid.cell)


def symplectic_form(z, zp):
    """``sigma((x, xi), (x', xi')) = x'.xi - x.xi'`` for points (or stacks) in ``R^(2d)``."""
    z = np.asarray(z, dtype=float)
    zp = np.asarray(zp, dtype=float)
    if z.shape[-1] != zp.shape[-1] or z.shape[-1] % 2:
        raise ValueError(f"need two points with the same even number of coordinates, got {z.shape} and {zp.shape}")
    d = z.shape[-1] // 2
    x, xi = z[..., :d], z[..., d:]
    xp, xip = zp[..., :d], zp[..., d:]
    return np.sum(xp * xi, axis=-1) - np.sum(x * xip, axis=-1)


# ---------------------------------------------------------------------------
# Riemann-sum Fourier transforms along single axes


def dft_matrix(points: np.ndarray, h: float, targets: np.ndarray, sign: int = -1) -> np.ndarray:
    """Matrix of ``h * exp(sign 2 pi i nu z)``; rows are target frequencies."""
    return h * np.exp(sign * 1j * TWO_PI * np.outer(targets, points))


def apply_along(values: np.ndarray, axis: int, matrix: np.ndarray) -> np.ndarray:
    moved = np.moveaxis(values, axis, -1)
    return np.moveaxis(moved @ matrix.T, -1, axis)


def _fft_axis(values, axis, grid, sign):
    # nu_k z_i = L^2 - L h (i + k) + h^2 i k, and h^2 = 1/N on a self-dual lattice
    L, h, N = grid.L, grid.h, grid.N
    idx = np.arange(N)
    shape = [1] * values.ndim
    shape[axis] = N
    ramp = np.exp(-sign * 1j * TWO_PI * L * h * idx).reshape(shape)
    if sign < 0:
        spec = np.fft.fft(values * ramp, axis=axis)
    else:
        spec = np.fft.ifft(values * ramp, axis=axis) * N
    return h * np.exp(sign * 1j * TWO_PI * L * L) * ramp * spec


def fourier_axis(values: np.ndarray, axis: int, grid: _Lattice, sign: int = -1, negate: bool = False) -> np.ndarray:
    """Riemann DFT along ``axis`` evaluated at the lattice frequencies (or their negatives).

    Uses the FFT with explicit offset phases when the lattice is self-dual and a
    dense DFT matrix otherwise; on non-self-dual lattices frequencies outside the
    resolved band are set to zero.
    """
    if grid.self_dual:
        out = _fft_axis(values, axis, grid, sign)
        if negate:
            out = np.take(out, (-np.arange(grid.N)) % grid.N, axis=axis)
        return out
    targets = -grid.axis if negate else grid.axis
    return apply_along(values, axis, dft_matrix(grid.axis, grid.h, targets, sign) * resolved_mask(targets, grid.h)[:, None])


def resolved_mask(targets: np.ndarray, h: float) -> np.ndarray:
    """1 where a frequency lies strictly inside the band ``|nu| < 1/(2h)``, else 0.

    The Riemann sum is ``1/h``-periodic in the frequency, so outside the band it
    only returns aliases; for decayed inputs the true transform is negligible there.
    """
    return (np.abs(targets) < 0.5 / h - 1e-12).astype(float)


def symplectic_fourier(F: PhaseFunction, direct: bool = False) -> PhaseFunction:
    """``F_sigma F(w) = int F(z) exp(-2 pi i sigma(w, z)) dz`` on the same lattice.

    With ``w = (x_w, xi_w)`` this is the Euclidean transform evaluated at
    ``(xi_w, -x_w)``; the x-axes therefore map to the output xi-axes and vice versa.
    ``direct=True`` forces the dense DFT matrices (used as an oracle).
    """
    grid = F.grid
    d = grid.d
    vals = F.values
    for ax in range(d):
        if direct:
            vals = apply_along(vals, ax, dft_matrix(grid.axis, grid.h, grid.axis))
        else:
            vals = fourier_axis(vals, ax, grid)
    for ax in range(d, 2 * d):
        if direct:
            vals = apply_along(vals, ax, dft_matrix(grid.axis, grid.h, -grid.axis))
        else:
            vals = fourier_axis(vals, ax, grid, negate=True)
    vals = np.transpose(vals, list(range(d, 2 * d)) + list(range(d)))
    return PhaseFunction(grid, vals)


def partial_fourier_xi(F: PhaseFunction, inverse: bool = False) -> PhaseFunction:
    """Euclidean transform over the momentum axes only; output axes are ``(x, tau)``."""
    grid = F.grid
    sign = 1 if inverse else -1
    vals = F.values
    for ax in range(grid.d, 2 * grid.d):
        vals = fourier_axis(vals, ax, grid, sign=sign)
    return PhaseFunction(grid, vals)


def euclid_convolve(f: GridFunction, g: GridFunction) -> GridFunction:
    """Linear convolution ``(f*g)(z) = int f(z') g(z - z') dz'`` by zero-padded FFT."""
    f._check_same(g)
    grid = f.grid
    full = fftconvolve(f.values, g.values, mode="full")
    start = grid.N // 2
    sl = tuple(slice(start, start + grid.N) for _ in range(grid.ndim))
    return f._like(full[sl] * grid.cell)


# ---------------------------------------------------------------------------
# translation


def _shift_integer(values, axis, m):
    out = np.zeros_like(values)
    n = values.shape[axis]
    src = [slice(None)] * values.ndim
    dst = [slice(None)] * values.ndim
    if m >= 0:
        src[axis], dst[axis] = slice(0, n - m), slice(m, n)
    else:
        src[axis], dst[axis] = slice(-m, n), slice(0, n + m)
    out[tuple(dst)] = values[tuple(src)]
    return out


def _shift_fourier(values, axis, shift, h):
    # zero-pad to 2N so that nothing shifted out of the box wraps back in
    n = values.shape[axis]
    pad = [(0, 0)] * values.ndim
    pad[axis] = (0, n)
    padded = np.pad(values, pad)
    nu = np.fft.fftfreq(2 * n, h)
    mult = np.exp(-1j * TWO_PI * nu * shift)
    mult[n] = np.cos(TWO_PI * nu[n] * shift)  # Nyquist bin: keep real inputs real
    shape = [1] * values.ndim
    shape[axis] = 2 * n
    out = np.fft.ifft(np.fft.fft(padded, axis=axis) * mult.reshape(shape), axis=axis)
    return np.take(out, np.arange(n), axis=axis)


def shift_axis(values: np.ndarray, axis: int, shift: float, h: float) -> np.ndarray:
    """Band-limited shift ``f(. - shift)`` of samples along one axis; exact on lattice steps."""
    m = shift / h
    k = int(round(m))
    if abs(m - k) < 1e-12:
        return _shift_integer(values, axis, k) if k else values.copy()
    return _shift_fourier(values, axis, shift, h)


def translate(f: GridFunction, w) -> GridFunction:
    """``(lambda_w f)(z) = f(z - w)`` by band-limited interpolation."""
    grid = f.grid
    w = np.broadcast_to(np.asarray(w, dtype=float), (grid.ndim,))
    if np.max(np.abs(w)) > grid.L:
        raise SupportOverflowError(f"|w|_inf = {np.max(np.abs(w))} exceeds the half-width L = {grid.L}")
    vals = f.values
    for ax, s in enumerate(w):
        if s != 0.0:
            vals = shift_axis(vals, ax, s, grid.h)
    return f._like(vals)


def reflect(f: GridFunction, axes: Sequence[int] | None = None) -> GridFunction:
    """Samples of ``f(-z)`` (on the chosen axes); the lattice is symmetric up to the ``-L`` endpoint."""
    grid = f.grid
    axes = range(grid.ndim) if axes is None else axes
    vals = f.values
    for ax in axes:
        vals = np.take(vals, (-np.arange(grid.N)) % grid.N, axis=ax)
    return f._like(vals)


# ---------------------------------------------------------------------------
# norms and seminorms


def lp_norm(f: GridFunction, p=2.0) -> float:
    """Riemann-sum ``L^p`` norm; ``p = inf`` is the sample maximum."""
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(f.values)
    if math.isinf(p):
        return float(a.max())
    if p == 1.0:
        return float(a.sum() * f.grid.cell)
    if p == 2.0:
        return float(np.sqrt(np.vdot(a, a).real * f.grid.cell))
    top = a.max()
    if top == 0.0:
        return 0.0
    return float(top * (np.sum((a / top) ** p) * f.grid.cell) ** (1.0 / p))


def tail_fraction(f: GridFunction, width: int | None = None) -> float:
    """Relative L2 mass in the outer shell of ``width`` samples on every axis."""
    grid = f.grid
    width = max(1, grid.N // 32) if width is None else width
    total = np.sum(np.abs(f.values) ** 2)
    if total == 0.0:
        return 0.0
    inner = np.abs(f.values[tuple(slice(width, grid.N - width) for _ in range(grid.ndim))]) ** 2
    return float(np.sqrt(max(total - inner.sum(), 0.0) / total))


def _check_tail(f):
    tail = tail_fraction(f)
    if tail > TAIL_TOLERANCE:
        raise AccuracyError(f"boundary tail {tail:.3e} exceeds {TAIL_TOLERANCE:g}", measured=tail)


def multi_indices(ndim: int, order: int):
    """All ``gamma`` in ``N^ndim`` with ``|gamma| <= order``, in lexicographic order."""
    return [g for g in itertools.product(range(order + 1), repeat=ndim) if sum(g) <= order]


def _wavenumbers(grid, ndim):
    k = TWO_PI * 1j * grid.freqs
    if grid.N % 2 == 0:
        k[grid.N // 2] = 0.0  # odd derivatives of the Nyquist mode are ill-defined
    return [k.reshape([-1 if i == ax else 1 for i in range(ndim)]) for ax in range(ndim)]


def spectral_derivative(values: np.ndarray, grid: _Lattice, gamma: Sequence[int], spectrum: np.ndarray | None = None):
    """``d^gamma`` of lattice samples via multiplication by ``(2 pi i nu)^gamma``."""
    spec = np.fft.fftn(values) if spectrum is None else spectrum
    ks = _wavenumbers(grid, values.ndim)
    for ax, g in enumerate(gamma):
        if g:
            spec = spec * ks[ax] ** g
    return np.fft.ifftn(spec)


def schwartz_seminorm(f: GridFunction, order: int, check: bool = True) -> float:
    """``sum_{|alpha|+|beta| <= order} || d^alpha (z^beta f) ||_2``."""
    if check:
        _check_tail(f)
    grid = f.grid
    ndim = grid.ndim
    coords = grid.coords()
    total = 0.0
    spectra = {}
    for gamma in multi_indices(2 * ndim, order):
        alpha, beta = gamma[:ndim], gamma[ndim:]
        if beta not in spectra:
            weighted = f.values
            for ax, b in enumerate(beta):
                if b:
                    weighted = weighted * coords[ax] ** b
            spectra[beta] = np.fft.fftn(weighted)
        deriv = spectral_derivative(f.values, grid, alpha, spectrum=spectra[beta])
        total += math.sqrt(np.vdot(deriv, deriv).real * grid.cell)
    return total


def _spectral_upsample(spec: np.ndarray, factor: int) -> np.ndarray:
    """Zero-pad a full spectrum by ``factor`` per axis (Nyquist bin split symmetrically)."""
    out = spec
    for ax in range(spec.ndim):
        n = out.shape[ax]
        half = n // 2
        lo = np.take(out, np.arange(half), axis=ax)
        nyq = np.take(out, [half], axis=ax) / 2.0
        hi = np.take(out, np.arange(half + 1, n), axis=ax)
        zshape = list(out.shape)
        zshape[ax] = factor * n - n - 1
        out = np.concatenate([lo, nyq, np.zeros(zshape, dtype=complex), nyq, hi], axis=ax)
    return out * factor ** spec.ndim


def c_seminorm(f: GridFunction, order: int, refine: int = 4, check: bool = True) -> float:
    """``sum_{|gamma| <= order} || d^gamma f ||_inf``.

    Sup-norms are taken over a band-limited refinement with ``refine`` points per
    original cell (``refine=1`` uses the samples only).
    """
    if check:
        _check_tail(f)
    grid = f.grid
    spec = np.fft.fftn(f.values)
    ks = _wavenumbers(grid, grid.ndim)
    total = 0.0
    for gamma in multi_indices(grid.ndim, order):
        s = spec
        for ax, g in enumerate(gamma):
            if g:
                s = s * ks[ax] ** g
        if refine > 1:
            vals = np.abs(np.fft.ifftn(_spectral_upsample(s, refine)))
            total += _polished_max(vals)
        else:
            total += float(np.abs(np.fft.ifftn(s)).max())
    return total


def _polished_max(vals: np.ndarray) -> float:
    """Sample maximum improved by a parabolic fit through its neighbours on every axis."""
    idx = np.unravel_index(np.argmax(vals), vals.shape)
    top = float(vals[idx])
    gain = 0.0
    for ax, n in enumerate(vals.shape):
        lo, hi = list(idx), list(idx)
        lo[ax], hi[ax] = (idx[ax] - 1) % n, (idx[ax] + 1) % n
        ym, yp = float(vals[tuple(lo)]), float(vals[tuple(hi)])
        curv = ym - 2.0 * top + yp
        if curv < 0.0:
            gain += -((yp - ym) ** 2) / (8.0 * curv)
    return top + gain


def shift_many(values: np.ndarray, shifts: np.ndarray, h: float) -> np.ndarray:
    """Rows ``f(. - s)`` for every ``s`` in ``shifts`` of a 1-D sample vector (zero-padded, no wrap)."""
    n = values.shape[-1]
    spec = np.fft.fft(np.concatenate([values, np.zeros(n, dtype=complex)]))
    nu = np.fft.fftfreq(2 * n, h)
    mult = np.exp(-1j * TWO_PI * np.outer(shifts, nu))
    mult[:, n] = np.cos(TWO_PI * nu[n] * np.asarray(shifts))
    return np.fft.ifft(spec[None, :] * mult, axis=-1)[:, :n]


def dirichlet_matrix(targets: np.ndarray, grid: _Lattice) -> np.ndarray:
    """Band-limited interpolation weights from the lattice to arbitrary ``targets``.

    Uses the periodic Dirichlet kernel of the lattice; targets outside ``[-L, L)``
    get zero rows, so callers must supply functions that have decayed at the edge.
    """
    targets = np.asarray(targets, dtype=float)
    s = targets[:, None] - grid.axis[None, :]
    period = 2.0 * grid.L
    arg = np.pi * s / period
    num = np.sin(grid.N * arg)
    den = grid.N * np.tan(arg)
    on = np.abs(np.sin(arg)) < 1e-13
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(on, 1.0, num / np.where(on, 1.0, den))
    # snap exact lattice hits so that on-lattice resampling is a pure selection
    m = (targets + grid.L) / grid.h
    hit = np.abs(m - np.round(m)) < 1e-9
    if np.any(hit):
        w[hit] = 0.0
        w[hit, np.round(m[hit]).astype(int) % grid.N] = 1.0
    inside = (targets >= -grid.L - 1e-12) & (targets < grid.L - 1e-12)
    w[~inside] = 0.0
    return w
