"""Truncated Hermite systems on a configuration lattice.

A basis carries an optional dilation ``s``: its functions are
``h_k^s(x) = sqrt(s) h_k(s x)``, eigenfunctions of ``-d^2/dx^2 / s^2 + s^2 x^2``
with eigenvalue ``2k + 1``. ``s = 1`` is the classical normalisation; the
isotropic choice ``s = sqrt(2 pi)`` balances position and momentum spread under
the ``exp(-2 pi i x xi)`` Fourier convention and fits more functions on a given box.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, GridMismatchError, LeakageError
from .grid import ConfigGrid, WaveFunction, apply_along, spectral_derivative

ISOTROPIC_SCALE = math.sqrt(2.0 * math.pi)
GRAM_TOLERANCE = 1e-8
EDGE_TOLERANCE = 1e-10


def hermite_functions(M: int, x: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Rows ``h_0..h_{M-1}`` at the points ``x`` via the normalised three-term recurrence."""
    if M < 1:
        raise ValueError(f"M must be positive, got {M}")
    y = scale * np.asarray(x, dtype=float)
    out = np.empty((M, y.size))
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * y * y)
    if M > 1:
        out[1] = math.sqrt(2.0) * y * out[0]
    for k in range(1, M - 1):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * y * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out * math.sqrt(scale)


def _edge_value(row: np.ndarray) -> float:
    return float(max(abs(row[0]), abs(row[-1])))


def hermite_samples(k: int, grid: ConfigGrid, scale: float = 1.0) -> np.ndarray:
    """Samples of ``h_k`` on one axis of ``grid``.

    Raises
    ------
    LeakageError
        If ``h_k`` is not negligible at the edge of the lattice.
    """
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    row = hermite_functions(k + 1, grid.axis, scale)[k]
    edge = _edge_value(row)
    if edge > EDGE_TOLERANCE:
        raise LeakageError(f"h_{k} is {edge:.2e} at the edge of [-{grid.L}, {grid.L})", measured=edge)
    return row


@dataclass(frozen=True, eq=False)
class HermiteBasis:
    """The first ``M`` Hermite functions per axis, sampled on ``grid``.

    Construction validates orthonormality on the lattice and the size of
    ``h_{M-1}`` at the boundary, raising :class:`LeakageError` on failure.
    """

    grid: ConfigGrid
    M: int
    scale: float = 1.0
    samples: np.ndarray = field(init=False, repr=False)
    gram_deviation: float = field(init=False)

    def __post_init__(self):
        if not isinstance(self.grid, ConfigGrid):
            raise ConfigurationError("HermiteBasis needs a ConfigGrid")
        if int(self.M) != self.M or self.M < 1:
            raise ConfigurationError(f"M must be a positive integer, got {self.M!r}")
        if not self.scale > 0:
            raise ConfigurationError(f"scale must be positive, got {self.scale!r}")
        samples = hermite_functions(int(self.M), self.grid.axis, float(self.scale))
        edge = _edge_value(samples[-1])
        if edge > EDGE_TOLERANCE:
            raise LeakageError(
                f"h_{self.M - 1} is {edge:.2e} at the lattice edge; enlarge L_x or lower M", measured=edge
            )
        gram = samples @ samples.T * self.grid.h
        dev = float(np.max(np.abs(gram - np.eye(self.M))))
        if dev > GRAM_TOLERANCE:
            raise LeakageError(
                f"Gram deviation {dev:.2e} > {GRAM_TOLERANCE:g}; the lattice does not resolve h_{self.M - 1}",
                measured=dev,
            )
        samples.flags.writeable = False
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "gram_deviation", dev)

    @classmethod
    def isotropic(cls, grid: ConfigGrid, M: int) -> "HermiteBasis":
        return cls(grid, M, ISOTROPIC_SCALE)

    @property
    def key(self) -> tuple:
        return (self.grid, self.M, self.scale)

    def __eq__(self, other):
        return isinstance(other, HermiteBasis) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def dim(self) -> int:
        return self.M ** self.d

    @property
    def multi_indices(self) -> np.ndarray:
        """Rows ``k`` in lexicographic order; row ``i`` is the ``i``-th basis vector."""
        return np.array(list(np.ndindex(*(self.M,) * self.d)), dtype=int)

    @property
    def degrees(self) -> np.ndarray:
        return self.multi_indices.sum(axis=1)

    @property
    def parity(self) -> np.ndarray:
        """Diagonal of the parity operator: ``(-1)^{|k|}``."""
        return np.where(self.degrees % 2 == 0, 1.0, -1.0)

    @property
    def eigenvalues(self) -> np.ndarray:
        """``n + 2|k|`` for the tensor Hermite operator."""
        return self.d + 2.0 * self.degrees

    def check_same(self, other: "HermiteBasis"):
        if self != other:
            raise GridMismatchError("operands use different Hermite bases")


@dataclass(frozen=True, eq=False)
class CoefficientArray:
    """Hermite coefficients ``(f, h_k)`` indexed by lexicographic multi-indices."""

    basis: HermiteBasis
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.basis.M,) * self.basis.d:
            raise ConfigurationError(f"coefficient shape {values.shape} does not match the basis")
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("coefficients must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def unit(cls, basis: HermiteBasis, k) -> "CoefficientArray":
        c = np.zeros((basis.M,) * basis.d, dtype=complex)
        c[tuple(np.atleast_1d(k))] = 1.0
        return cls(basis, c)

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def to_json(self) -> str:
        flat = np.column_stack([self.flat.real, self.flat.imag]).ravel().tolist()
        return json.dumps({"d": self.basis.d, "M": self.basis.M, "order": "lex", "values": flat})

    @classmethod
    def from_json(cls, text: str, basis: HermiteBasis) -> "CoefficientArray":
        payload = json.loads(text)
        if payload.get("order") != "lex" or payload["d"] != basis.d or payload["M"] != basis.M:
            raise ConfigurationError("serialised coefficients do not match the basis")
        flat = np.asarray(payload["values"], dtype=float)
        return cls(basis, (flat[0::2] + 1j * flat[1::2]).reshape((basis.M,) * basis.d))


def analyze(f: WaveFunction, basis: HermiteBasis) -> CoefficientArray:
    """Coefficients ``(f, h_k) = sum f h_k h^d`` by axis-wise contraction."""
    if f.grid != basis.grid:
        raise GridMismatchError("function and basis live on different grids")
    vals = f.values
    for ax in range(basis.d):
        vals = apply_along(vals, ax, basis.samples * basis.grid.h)
    return CoefficientArray(basis, vals)


def synthesize(c: CoefficientArray) -> WaveFunction:
    """``sum_k c(k) h_k`` sampled on the basis grid."""
    basis = c.basis
    vals = c.values
    for ax in range(basis.d):
        vals = apply_along(vals, ax, basis.samples.T)
    return WaveFunction(basis.grid, vals)


def hermite_operator(f: WaveFunction, scale: float = 1.0) -> WaveFunction:
    """``(-Laplacian / s^2 + s^2 |x|^2) f`` with spectral second derivatives."""
    grid = f.grid
    out = np.zeros(grid.shape, dtype=complex)
    spec = np.fft.fftn(f.values)
    coords = grid.coords()
    for ax in range(grid.d):
        gamma = [0] * grid.d
        gamma[ax] = 2
        out -= spectral_derivative(f.values, grid, gamma, spectrum=spec) / scale**2
        out += scale**2 * coords[ax] ** 2 * f.values
    return WaveFunction(grid, out)


def hermite_power_norm(f: WaveFunction, order: int, scale: float = 1.0) -> float:
    """``||H^N f||_2`` by repeated spectral application of the Hermite operator."""
    g = f
    for _ in range(order):
        g = hermite_operator(g, scale)
    return g.norm(2)


@dataclass(frozen=True)
class DecayReport:
    """Empirical constants ``sup_k |c(k)| (n + 2|k|)^N / ||H^N phi||_2`` per order ``N``."""

    orders: tuple
    constants: tuple
    slopes: tuple
    violations: tuple

    @property
    def holds(self) -> bool:
        return not any(self.violations)


def _decay_slope(mags, weights):
    keep = mags > 1e-13 * mags.max() if mags.max() > 0 else np.zeros_like(mags, dtype=bool)
    if keep.sum() < 3:
        return float("nan")
    return float(np.polyfit(np.log(weights[keep]), np.log(mags[keep]), 1)[0])


def verify_decay(c: CoefficientArray, seminorms: dict, tolerance: float = 1e-9) -> DecayReport:
    """Check ``|c(k)| <= (n + 2|k|)^{-N} ||H^N phi||_2`` for every order in ``seminorms``.

    Parameters
    ----------
    c : CoefficientArray
        Hermite coefficients of ``phi``.
    seminorms : dict
        Maps ``N`` to ``||H^N phi||_2`` (see :func:`hermite_power_norm`).
    tolerance : float
        Relative slack allowed before an order is flagged as violated.
    """
    if not seminorms:
        raise ValueError("at least one seminorm order is required")
    basis = c.basis
    weights = basis.eigenvalues
    mags = np.abs(c.flat)
    orders, consts, slopes, bad = [], [], [], []
    for order in sorted(seminorms):
        norm = seminorms[order]
        if norm is None:
            raise KeyError(f"missing seminorm for N={order}")
        scaled = float(np.max(mags * weights**order))
        const = scaled / norm if norm > 0 else (0.0 if scaled == 0 else math.inf)
        orders.append(int(order))
        consts.append(const)
        slopes.append(_decay_slope(mags, weights))
        bad.append(const > 1.0 + tolerance)
    return DecayReport(tuple(orders), tuple(consts), tuple(slopes), tuple(bad))


def basis_from_config(L_x: float, N_x: int, M: int, d: int = 1, kind: str = "isotropic") -> HermiteBasis:
    grid = ConfigGrid(d, L_x, N_x)
    if kind == "isotropic":
        return HermiteBasis.isotropic(grid, M)
    if kind == "standard":
        return HermiteBasis(grid, M, 1.0)
    raise ConfigurationError(f"unknown basis kind {kind!r}")


__all__ = [
    "HermiteBasis",
    "CoefficientArray",
    "DecayReport",
    "ISOTROPIC_SCALE",
    "hermite_functions",
    "hermite_samples",
    "analyze",
    "synthesize",
    "hermite_operator",
    "hermite_power_norm",
    "verify_decay",
    "basis_from_config",
]
