"""Phase-space shifts, integral kernels and Weyl quantisation in a Hermite basis.

Conventions::

    [rho(x, xi) g](t) = exp(-pi i x xi + 2 pi i t xi) g(t - x)
    rho(z + z') = exp(-pi i sigma(z, z')) rho(z) rho(z')
    k_F(t, x) = (F^xi F)(t - x, -(t + x) / 2)
    K_a(t, x) = (F^xi a)((x + t) / 2, x - t)
    A(f, g)(x, xi) = int f(t + x/2) conj(g(t - x/2)) exp(-2 pi i xi t) dt

Operators are dense matrices in a truncated Hermite basis with entry
``(j, k) = (T h_k, h_j)``. The kernel and ambiguity routes are implemented for
``d = 1``; point shifts ``rho(z)`` work in any dimension.
"""

from __future__ import annotations

import json
import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConfigurationError, GridMismatchError, LeakageError, SupportOverflowError
from .grid import (
    TWO_PI,
    ConfigGrid,
    PhaseFunction,
    PhaseGrid,
    WaveFunction,
    dft_matrix,
    dirichlet_matrix,
    resolved_mask,
    shift_many,
    symplectic_form,
    translate,
)
from .hermite import HermiteBasis, hermite_functions


def _require_1d(grid, what):
    if grid.d != 1:
        raise ConfigurationError(f"{what} is implemented for d = 1 only (got d = {grid.d})")


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True, eq=False)
class KernelFunction:
    """Samples ``K(t_i, x_m)`` of an integral kernel on the product lattice."""

    grid: ConfigGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        n = self.grid.N**self.grid.d
        if values.shape != (n, n):
            raise ConfigurationError(f"kernel shape {values.shape} != {(n, n)}")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("kernel samples must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __add__(self, other):
        if other.grid != self.grid:
            raise GridMismatchError("kernels live on different grids")
        return KernelFunction(self.grid, self.values + other.values)

    def norm(self) -> float:
        """``L^2`` norm over the product lattice."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2)) * self.grid.cell)

    @classmethod
    def tensor(cls, f: WaveFunction, g: WaveFunction) -> "KernelFunction":
        """``(f (x) g)(t, x) = f(t) g(x)``."""
        return cls(f.grid, np.outer(f.values.ravel(), g.values.ravel()))


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Matrix of an operator in a Hermite basis, entry ``(j, k) = (T h_k, h_j)``."""

    basis: HermiteBasis
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        n = self.basis.dim
        if entries.shape != (n, n):
            raise ConfigurationError(f"matrix shape {entries.shape} != {(n, n)}")
        if not np.all(np.isfinite(entries)):
            raise ConfigurationError("operator entries must be finite")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @classmethod
    def identity(cls, basis: HermiteBasis) -> "OperatorMatrix":
        return cls(basis, np.eye(basis.dim))

    @classmethod
    def rank_one(cls, basis: HermiteBasis, f: np.ndarray, g: np.ndarray) -> "OperatorMatrix":
        """``T_{f (x) conj(g)} h = (h, g) f`` from coefficient vectors of ``f`` and ``g``."""
        return cls(basis, np.outer(np.ravel(f), np.conj(np.ravel(g))))

    def _other(self, other):
        if not isinstance(other, OperatorMatrix):
            return NotImplemented
        self.basis.check_same(other.basis)
        return other.entries

    def __matmul__(self, other):
        return OperatorMatrix(self.basis, self.entries @ self._other(other))

    def __add__(self, other):
        return OperatorMatrix(self.basis, self.entries + self._other(other))

    def __sub__(self, other):
        return OperatorMatrix(self.basis, self.entries - self._other(other))

    def __mul__(self, scalar):
        return OperatorMatrix(self.basis, self.entries * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return OperatorMatrix(self.basis, -self.entries)

    @property
    def H(self) -> "OperatorMatrix":
        return OperatorMatrix(self.basis, self.entries.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.entries))

    def to_json(self) -> str:
        flat = np.column_stack([self.entries.real.ravel(), self.entries.imag.ravel()]).ravel().tolist()
        return json.dumps({"d": self.basis.d, "M": self.basis.M, "order": "lex", "entries": flat})

    @classmethod
    def from_json(cls, text: str, basis: HermiteBasis) -> "OperatorMatrix":
        payload = json.loads(text)
        if payload.get("order") != "lex" or payload["d"] != basis.d or payload["M"] != basis.M:
            raise ConfigurationError("serialised operator does not match the basis")
        flat = np.asarray(payload["entries"], dtype=float)
        return cls(basis, (flat[0::2] + 1j * flat[1::2]).reshape(basis.dim, basis.dim))


# ---------------------------------------------------------------------------
# point shifts


def rho_point_apply(z, g: WaveFunction) -> WaveFunction:
    """``rho(z) g`` by band-limited translation and modulation."""
    grid = g.grid
    z = np.asarray(z, dtype=float)
    if z.shape != (2 * grid.d,):
        raise ValueError(f"z must have {2 * grid.d} coordinates")
    x, xi = z[: grid.d], z[grid.d :]
    if np.max(np.abs(x), initial=0.0) > grid.L:
        raise SupportOverflowError(f"shift {x} leaves the configuration box")
    shifted = translate(g, x)
    phase = np.exp(-1j * np.pi * float(x @ xi))
    coords = grid.coords()
    for ax in range(grid.d):
        phase = phase * np.exp(1j * TWO_PI * coords[ax] * xi[ax])
    return WaveFunction(grid, shifted.values * phase)


def _check_shift(basis: HermiteBasis, x: float, xi: float):
    grid = basis.grid
    if abs(x) > grid.L or abs(xi) > 0.5 / grid.h:
        raise LeakageError(f"shift ({x}, {xi}) is outside the range resolved by the basis lattice")


def shifted_samples(basis: HermiteBasis, x: float) -> np.ndarray:
    """Rows ``h_k(t - x)`` evaluated exactly on the basis lattice."""
    return hermite_functions(basis.M, basis.grid.axis - x, basis.scale)


def _rho_axis(basis: HermiteBasis, x: float, xi: float) -> np.ndarray:
    _check_shift(basis, x, xi)
    grid = basis.grid
    t = grid.axis
    mod = np.exp(1j * TWO_PI * t * xi) * grid.h
    return np.exp(-1j * np.pi * x * xi) * (basis.samples * mod) @ shifted_samples(basis, x).T


class _RhoCache:
    """Thread-safe LRU memo of ``rho(z)`` matrices keyed by basis and the bits of ``z``."""

    def __init__(self, maxsize: int = 4096):
        self.maxsize = maxsize
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            val = self._data.get(key)
            if val is not None:
                self._data.move_to_end(key)
            return val

    def put(self, key, val):
        with self._lock:
            self._data[key] = val
            self._data.move_to_end(key)
            while len(self._data) > self.maxsize:
                self._data.popitem(last=False)

    def clear(self):
        with self._lock:
            self._data.clear()


RHO_CACHE = _RhoCache()


def rho_point_matrix(z, basis: HermiteBasis) -> OperatorMatrix:
    """Matrix of ``rho(z)`` by lattice quadrature of ``(rho(z) h_k, h_j)``.

    Raises
    ------
    LeakageError
        If the shift leaves the configuration box or the modulation exceeds the
        lattice Nyquist frequency.
    """
    z = np.ascontiguousarray(np.asarray(z, dtype=float))
    d = basis.d
    if z.shape != (2 * d,):
        raise ValueError(f"z must have {2 * d} coordinates, got shape {z.shape}")
    key = (basis.key, z.tobytes())
    hit = RHO_CACHE.get(key)
    if hit is not None:
        return hit
    mat = np.ones((1, 1), dtype=complex)
    for ax in range(d):
        mat = np.kron(mat, _rho_axis(basis, z[ax], z[d + ax]))
    out = OperatorMatrix(basis, mat)
    RHO_CACHE.put(key, out)
    return out


# ---------------------------------------------------------------------------
# kernels


def _xi_transform(values: np.ndarray, grid: PhaseGrid, taus: np.ndarray) -> np.ndarray:
    """``(F^xi F)(y, tau)`` for every lattice ``y`` and arbitrary ``tau`` (exact Riemann sum)."""
    mat = dft_matrix(grid.axis, grid.h, taus) * resolved_mask(taus, grid.h)[:, None]
    return values @ mat.T


def _pair_indices(n):
    i = np.arange(n)
    return i[:, None], i[None, :]


def kernel_from_phase_function(F: PhaseFunction, config: ConfigGrid) -> KernelFunction:
    """``k_F(t, x) = (F^xi F)(t - x, -(t + x)/2)`` on ``config x config``.

    ``F^xi F`` is taken once at every needed ``tau`` and resampled in ``t - x``
    by band-limited interpolation (a pure selection when ``t - x`` is on the lattice).
    Samples with ``t - x`` outside the phase box are zero.
    """
    grid = F.grid
    _require_1d(grid, "kernel_from_phase_function")
    n, hx, Lx = config.N, config.h, config.L
    s = np.arange(2 * n - 1)
    taus = -(-2.0 * Lx + s * hx) / 2.0
    diffs = (np.arange(-(n - 1), n)) * hx
    rows = dirichlet_matrix(diffs, grid) @ F.values
    B = _xi_transform(rows, grid, taus)  # (difference, sum)
    i, j = _pair_indices(n)
    return KernelFunction(config, B[i - j + n - 1, i + j])


def weyl_kernel(a: PhaseFunction, config: ConfigGrid) -> KernelFunction:
    """``K_a(t, x) = (F^xi a)((x + t)/2, x - t)`` on ``config x config``."""
    grid = a.grid
    _require_1d(grid, "weyl_kernel")
    n, hx, Lx = config.N, config.h, config.L
    s = np.arange(2 * n - 1)
    mids = -Lx + s * hx / 2.0
    taus = (np.arange(-(n - 1), n)) * hx
    rows = dirichlet_matrix(mids, grid) @ a.values
    C = _xi_transform(rows, grid, taus)  # (midpoint, difference x - t)
    i, j = _pair_indices(n)
    return KernelFunction(config, C[i + j, j - i + n - 1])


def operator_from_kernel(K: KernelFunction, basis: HermiteBasis) -> OperatorMatrix:
    """Entries ``sum K(t, x) h_k(x) h_j(t) h_x^2`` as two dense products."""
    if K.grid != basis.grid:
        raise GridMismatchError("kernel and basis live on different grids")
    _require_1d(K.grid, "operator_from_kernel")
    H = basis.samples
    return OperatorMatrix(basis, (H @ K.values @ H.T) * basis.grid.h**2)


def quantize(a: PhaseFunction, basis: HermiteBasis) -> OperatorMatrix:
    """Weyl quantisation ``L_a = rho(F_sigma a)`` as a Hermite matrix."""
    return operator_from_kernel(weyl_kernel(a, basis.grid), basis)


def integrated_rep(F: PhaseFunction, basis: HermiteBasis) -> OperatorMatrix:
    """``rho(F) = int F(z) rho(z) dz`` as a Hermite matrix."""
    return operator_from_kernel(kernel_from_phase_function(F, basis.grid), basis)


# ---------------------------------------------------------------------------
# twisted convolution


def _twisted_direct(F: PhaseFunction, G: PhaseFunction) -> np.ndarray:
    grid = F.grid
    pts = np.stack(np.meshgrid(*([grid.axis] * grid.ndim), indexing="ij"), axis=-1).reshape(-1, grid.ndim)
    Fv = F.values.ravel()
    out = np.zeros(len(pts), dtype=complex)
    for a, z in enumerate(pts):
        diff = z[None, :] - pts
        idx = np.round((diff + grid.L) / grid.h).astype(int)
        ok = np.all((idx >= 0) & (idx < grid.N), axis=1)
        flat = np.ravel_multi_index(tuple(idx[ok].T), grid.shape)
        phase = np.exp(1j * np.pi * symplectic_form(pts[ok], z[None, :]))
        out[a] = np.sum(Fv[ok] * G.values.ravel()[flat] * phase)
    return out.reshape(grid.shape) * grid.cell


def twisted_convolve(F: PhaseFunction, G: PhaseFunction, method: str = "fast") -> PhaseFunction:
    """``(F x G)(z) = int F(z') G(z - z') exp(pi i sigma(z', z)) dz'`` by lattice quadrature.

    ``method="fast"`` (d = 1) groups the double sum into one batched linear
    convolution along ``xi`` per output ``x``; ``method="direct"`` is the plain
    ``N^{4d}`` sum for small grids. Contributions with ``z - z'`` outside the
    box are dropped, so both inputs must fit with room to spare.
    """
    F._check_same(G)
    grid = F.grid
    if method == "direct":
        return PhaseFunction(grid, _twisted_direct(F, G))
    _require_1d(grid, "twisted_convolve(method='fast')")
    n, h, ax = grid.N, grid.h, grid.axis
    half = n // 2
    out = np.zeros((n, n), dtype=complex)
    m = np.arange(n)
    for i, x in enumerate(ax):
        src = i - m + half  # index of x - x' on the lattice
        ok = (src >= 0) & (src < n)
        if not np.any(ok):
            continue
        U = F.values[ok] * np.exp(1j * np.pi * x * ax)[None, :]
        V = G.values[src[ok]]
        conv = fftconvolve(U, V, mode="full", axes=1)[:, half : half + n]
        phase = np.exp(-1j * np.pi * np.outer(ax[ok], ax))
        out[i] = np.sum(conv * phase, axis=0)
    return PhaseFunction(grid, out * h * h)


def twist_right_atom(F: PhaseFunction, w) -> PhaseFunction:
    """``F x delta_w (z) = F(z - w) exp(pi i sigma(z, w))``."""
    w = np.asarray(w, dtype=float)
    Z = np.stack(np.broadcast_arrays(*F.grid.coords()), axis=-1)
    return PhaseFunction(F.grid, translate(F, w).values * np.exp(1j * np.pi * symplectic_form(Z, w)))


def twist_left_atom(w, F: PhaseFunction) -> PhaseFunction:
    """``delta_w x F (z) = F(z - w) exp(pi i sigma(w, z))``."""
    w = np.asarray(w, dtype=float)
    Z = np.stack(np.broadcast_arrays(*F.grid.coords()), axis=-1)
    return PhaseFunction(F.grid, translate(F, w).values * np.exp(1j * np.pi * symplectic_form(w, Z)))


def twist_conjugate_atom(F: PhaseFunction, w) -> PhaseFunction:
    """``delta_{-w} x F x delta_w (z) = F(z) exp(2 pi i sigma(z, w))``."""
    w = np.asarray(w, dtype=float)
    Z = np.stack(np.broadcast_arrays(*F.grid.coords()), axis=-1)
    return PhaseFunction(F.grid, F.values * np.exp(2j * np.pi * symplectic_form(Z, w)))


def trace_of_rep(F: PhaseFunction, config: ConfigGrid | None = None) -> complex:
    """``tr rho(F) = int k_F(x, x) dx`` by quadrature of the kernel diagonal.

    On the diagonal ``k_F(x, x) = (F^xi F)(0, -x)``, so only the ``x = 0`` row of
    ``F`` enters. ``config`` defaults to the phase-grid axis.
    """
    grid = F.grid
    _require_1d(grid, "trace_of_rep")
    config = ConfigGrid(1, grid.L, grid.N) if config is None else config
    row = F.values[grid.index_of(0.0)]
    diag = _xi_transform(row[None, :], grid, -config.axis)[0]
    return complex(np.sum(diag) * config.h)


# ---------------------------------------------------------------------------
# ambiguity and Fourier-Wigner transforms


def cross_ambiguity(f: WaveFunction, g: WaveFunction, phase_grid: PhaseGrid | None = None) -> PhaseFunction:
    """``A(f, g)(x, xi) = int f(t + x/2) conj(g(t - x/2)) exp(-2 pi i xi t) dt``.

    For every ``x`` both factors are shifted by band-limited interpolation and
    the product is transformed in ``t``. ``phase_grid`` defaults to the lattice
    of ``f`` doubled into phase space.
    """
    f._check_same(g)
    cg = f.grid
    _require_1d(cg, "cross_ambiguity")
    pg = PhaseGrid(1, cg.L, cg.N) if phase_grid is None else phase_grid
    xs = pg.axis
    if np.max(np.abs(xs)) / 2.0 > cg.L:
        raise SupportOverflowError("half-shifts leave the configuration box")
    fs = shift_many(f.values, -xs / 2.0, cg.h)
    gs = shift_many(g.values, xs / 2.0, cg.h)
    prod = fs * np.conj(gs)
    mat = dft_matrix(cg.axis, cg.h, pg.axis) * resolved_mask(pg.axis, cg.h)[:, None]
    return PhaseFunction(pg, prod @ mat.T)


def _as_points(eval_points, d):
    pts = np.asarray(eval_points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[-1] != 2 * d:
        raise ValueError(f"evaluation points need {2 * d} coordinates")
    return pts


def _fw_rows(T: OperatorMatrix, xs: np.ndarray) -> np.ndarray:
    # Q_x(t) = sum_jk T_jk h_j(t) h_k(t - x)
    basis = T.basis
    H = basis.samples
    rows = np.empty((len(xs), basis.grid.N), dtype=complex)
    for a, x in enumerate(xs):
        rows[a] = np.einsum("jt,jt->t", H, T.entries @ shifted_samples(basis, x))
    return rows


def fourier_wigner(T: OperatorMatrix, eval_points, method: str = "fast"):
    """``F_W T(z) = tr(rho(z)^* T)`` on a :class:`PhaseGrid` or at a list of points.

    The fast route (d = 1) uses ``conj(rho(z)_jk) = exp(pi i x xi) sum_t h_j(t)
    h_k(t - x) exp(-2 pi i t xi) h_x`` and sums over ``j, k`` before transforming
    in ``t``. ``method="direct"`` contracts cached ``rho(z)`` matrices entrywise.
    """
    basis = T.basis
    grid = basis.grid
    if isinstance(eval_points, PhaseGrid):
        pg = eval_points
        if method == "direct":
            pts = np.stack(np.meshgrid(*([pg.axis] * pg.ndim), indexing="ij"), axis=-1).reshape(-1, pg.ndim)
            return PhaseFunction(pg, fourier_wigner(T, pts, method="direct").reshape(pg.shape))
        _require_1d(grid, "fourier_wigner(method='fast')")
        for v in (pg.axis.min(), pg.axis.max()):
            _check_shift(basis, v, v)
        rows = _fw_rows(T, pg.axis)
        mat = dft_matrix(grid.axis, grid.h, pg.axis)
        vals = (rows @ mat.T) * np.exp(1j * np.pi * np.outer(pg.axis, pg.axis))
        return PhaseFunction(pg, vals)
    pts = _as_points(eval_points, basis.d)
    if method == "direct" or basis.d != 1:
        return np.array([np.vdot(rho_point_matrix(z, basis).entries, T.entries) for z in pts])
    for x, xi in pts:
        _check_shift(basis, x, xi)
    rows = _fw_rows(T, pts[:, 0])
    phase = np.exp(-1j * TWO_PI * np.outer(pts[:, 1], grid.axis)) * grid.h
    return np.sum(rows * phase, axis=1) * np.exp(1j * np.pi * pts[:, 0] * pts[:, 1])


__all__ = [
    "KernelFunction",
    "OperatorMatrix",
    "RHO_CACHE",
    "rho_point_apply",
    "rho_point_matrix",
    "shifted_samples",
    "kernel_from_phase_function",
    "weyl_kernel",
    "operator_from_kernel",
    "quantize",
    "integrated_rep",
    "twisted_convolve",
    "twist_right_atom",
    "twist_left_atom",
    "twist_conjugate_atom",
    "trace_of_rep",
    "cross_ambiguity",
    "fourier_wigner",
]
