"""Singular spectra, Schatten norms and Werner's operator convolution."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .grid import PhaseFunction, PhaseGrid, dft_matrix, lp_norm
from .weyl import OperatorMatrix, _as_points, _check_shift, _require_1d, rho_point_matrix, shifted_samples

PSD_THRESHOLD = 1e-10


@dataclass(frozen=True)
class SingularSpectrum:
    """Singular values sorted non-increasing."""

    values: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0) or np.any(np.diff(v) > 0):
            raise ValueError("a singular spectrum must be non-negative and non-increasing")
        object.__setattr__(self, "values", tuple(float(s) for s in v))

    def __len__(self):
        return len(self.values)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values)

    @property
    def s0(self) -> float:
        return self.values[0] if self.values else 0.0

    def norm(self, p) -> float:
        return _lp_of_spectrum(self.array, p)

    def to_json(self) -> str:
        return json.dumps({"values": list(self.values)})


def _lp_of_spectrum(s: np.ndarray, p) -> float:
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    if math.isinf(p):
        return float(s[0])
    return float(s[0] * np.sum((s / s[0]) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class SchattenReport:
    p: float
    norm: float
    spectrum: SingularSpectrum

    def consistent(self) -> bool:
        """Whether ``norm`` is reproduced bit-for-bit from the stored spectrum."""
        return self.spectrum.norm(self.p) == self.norm

    def to_dict(self) -> dict:
        return {"p": _fmt_p(self.p), "norm": self.norm, "spectrum": list(self.spectrum.values)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def csv_row(self) -> list:
        return [_fmt_p(self.p), repr(self.norm)] + [repr(s) for s in self.spectrum.values]


def _fmt_p(p):
    return "inf" if math.isinf(p) else p


def reports_to_csv(reports) -> str:
    """CSV with columns ``p, norm, s0, s1, ...``."""
    reports = list(reports)
    width = max((len(r.spectrum) for r in reports), default=0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "norm"] + [f"s{i}" for i in range(width)])
    for r in reports:
        w.writerow(r.csv_row())
    return buf.getvalue()


def _entries(T) -> np.ndarray:
    a = T.entries if isinstance(T, OperatorMatrix) else np.asarray(T, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def singular_values(T) -> SingularSpectrum:
    """Singular values by LAPACK's divide-and-conquer SVD."""
    s = np.linalg.svd(_entries(T), compute_uv=False)
    return SingularSpectrum(tuple(np.sort(s)[::-1]))


def schatten_norm(T, p) -> SchattenReport:
    """``||T||_{S^p}``: the ``l^p`` norm of the singular spectrum."""
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    spec = singular_values(T)
    return SchattenReport(p, spec.norm(p), spec)


def parity_conjugate(T: OperatorMatrix) -> OperatorMatrix:
    """``P T P`` with ``P = diag((-1)^{|k|})`` in the Hermite basis."""
    par = T.basis.parity
    return OperatorMatrix(T.basis, T.entries * np.outer(par, par))


def conjugate_by_rho(T: OperatorMatrix, w) -> OperatorMatrix:
    """``rho(-w) T rho(w)``."""
    w = np.asarray(w, dtype=float)
    return rho_point_matrix(-w, T.basis) @ T @ rho_point_matrix(w, T.basis)


def default_eval_grid(T: OperatorMatrix, full: bool = False, n_eval: int = 64) -> PhaseGrid:
    """Phase lattice on the box resolved by the basis lattice, ``[-L, L)`` with
    ``L = min(L_x, 1/(2 h_x))``; its ``n_eval``-point sub-lattice unless ``full``."""
    g = T.basis.grid
    half = min(g.L, 0.5 / g.h)
    grid = PhaseGrid(g.d, half, g.N)
    return grid if full or n_eval >= g.N else grid.sublattice(n_eval)


def _werner_grid(T1: OperatorMatrix, S: np.ndarray, pg: PhaseGrid) -> np.ndarray:
    # tr[rho(w)^* T1 rho(w) S] = sum_{t,s} K1(s,t) exp(2 pi i (t-s) xi) KS(t-x, s-x) h^2,
    # summed along the diagonals u = t - s and then transformed in u
    basis = T1.basis
    cg = basis.grid
    n, h = cg.N, cg.h
    H = basis.samples
    K1t = (H.T @ T1.entries @ H).T
    i = np.arange(n)
    diag = (i[:, None] - i[None, :] + n - 1).ravel()
    us = np.arange(-(n - 1), n) * h
    E = dft_matrix(us, h * h, pg.axis, sign=1)
    out = np.empty((pg.N, pg.N), dtype=complex)
    for a, x in enumerate(pg.axis):
        Hx = shifted_samples(basis, x)
        prod = (K1t * (Hx.T @ S @ Hx)).ravel()
        binned = np.bincount(diag, prod.real, 2 * n - 1) + 1j * np.bincount(diag, prod.imag, 2 * n - 1)
        out[a] = E @ binned
    return out


def werner_convolve(T1: OperatorMatrix, T2: OperatorMatrix, eval_points=None, full: bool = False, method: str = "fast"):
    """``(T1 * T2)(w) = tr[rho(-w) T1 rho(w) P T2 P]``.

    Parameters
    ----------
    eval_points : PhaseGrid, array of points, or None
        ``None`` selects the 64-point sub-lattice of the basis box (or the whole
        lattice with ``full=True``). An array of points returns an array.
    method : {"fast", "direct"}
        ``"direct"`` takes the trace of cached ``rho(+-w)`` matrix products per point.

    Returns
    -------
    PhaseFunction or ndarray
        Complex values; any imaginary residue is kept, never discarded.
    """
    T1.basis.check_same(T2.basis)
    S = parity_conjugate(T2)
    if eval_points is None:
        eval_points = default_eval_grid(T1, full=full)
    if isinstance(eval_points, PhaseGrid):
        pg = eval_points
        if method == "direct":
            pts = np.stack(np.meshgrid(*([pg.axis] * pg.ndim), indexing="ij"), axis=-1).reshape(-1, pg.ndim)
            return PhaseFunction(pg, werner_convolve(T1, T2, pts, method="direct").reshape(pg.shape))
        _require_1d(pg, "werner_convolve(method='fast')")
        for v in (pg.axis.min(), pg.axis.max()):
            _check_shift(T1.basis, v, v)
        return PhaseFunction(pg, _werner_grid(T1, S.entries, pg))
    pts = _as_points(eval_points, T1.basis.d)
    out = np.empty(len(pts), dtype=complex)
    for a, w in enumerate(pts):
        conj = conjugate_by_rho(T1, w)
        out[a] = np.sum(conj.entries * S.entries.T)
    return out


@dataclass(frozen=True)
class InequalityReport:
    lhs: float
    rhs: float
    satisfied: bool

    @property
    def slack(self) -> float:
        """``(rhs - lhs) / rhs``; negative values mean the inequality failed."""
        if self.rhs == 0.0:
            return 0.0 if self.lhs == 0.0 else -math.inf
        return (self.rhs - self.lhs) / self.rhs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["slack"] = self.slack
        return d


def young_check(T1: OperatorMatrix, T2: OperatorMatrix, p, q, r, eval_points=None, full: bool = False) -> InequalityReport:
    """``||T1 * T2||_{L^r} <= ||T1||_{S^p} ||T2||_{S^q}`` with ``1/p + 1/q = 1 + 1/r``."""
    p, q, r = float(p), float(q), float(r)
    if abs(1.0 / p + 1.0 / q - 1.0 - 1.0 / r) > 1e-12:
        raise ValueError(f"exponents violate 1/p + 1/q = 1 + 1/r: ({p}, {q}, {r})")
    if eval_points is None and not full:
        # the 64-point default is too coarse for L^r quadrature of oscillating outputs
        eval_points = default_eval_grid(T1, n_eval=T1.basis.grid.N // 2)
    conv = werner_convolve(T1, T2, eval_points, full=full)
    lhs = lp_norm(conv, r)
    rhs = schatten_norm(T1, p).norm * schatten_norm(T2, q).norm
    return InequalityReport(lhs, rhs, lhs <= rhs * (1.0 + 1e-6))


def ideal_bound_check(A: OperatorMatrix, T: OperatorMatrix, B: OperatorMatrix, p) -> InequalityReport:
    """``||A T B||_{S^p} <= ||A|| ||T||_{S^p} ||B||``."""
    lhs = schatten_norm(A @ T @ B, p).norm
    rhs = schatten_norm(A, math.inf).norm * schatten_norm(T, p).norm * schatten_norm(B, math.inf).norm
    return InequalityReport(lhs, rhs, lhs <= rhs * (1.0 + 1e-8))


def is_psd(T: OperatorMatrix, threshold: float = PSD_THRESHOLD) -> bool:
    """Hermitian up to round-off with eigenvalues ``>= -threshold * s0``."""
    a = T.entries
    s0 = singular_values(T).s0
    if s0 == 0.0:
        return True
    if np.max(np.abs(a - a.conj().T)) > 1e-8 * s0:
        return False
    return bool(np.linalg.eigvalsh((a + a.conj().T) / 2).min() >= -threshold * s0)


__all__ = [
    "SingularSpectrum",
    "SchattenReport",
    "InequalityReport",
    "singular_values",
    "schatten_norm",
    "reports_to_csv",
    "parity_conjugate",
    "conjugate_by_rho",
    "default_eval_grid",
    "werner_convolve",
    "young_check",
    "ideal_bound_check",
    "is_psd",
]
