"""The identity suite behind ``qha verify`` plus seeded test-symbol generators."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import grid as G
from . import hermite as Hm
from . import restriction as Rs
from . import schatten as Sc
from . import weyl as W
from .grid import ConfigGrid, PhaseGrid, PhaseFunction, WaveFunction


# ---------------------------------------------------------------------------
# seeded samples


def gaussian_bump(grid: PhaseGrid, center, width, zeta=(0.0, 0.0), coef=1.0) -> np.ndarray:
    """``coef exp(2 pi i sigma(zeta, z)) exp(-pi |z - center|^2 / width^2)`` on ``grid``."""
    Z = np.stack(np.broadcast_arrays(*grid.coords()), axis=-1)
    bump = np.exp(-np.pi * np.sum((Z - np.asarray(center)) ** 2, axis=-1) / width**2)
    return coef * np.exp(2j * np.pi * G.symplectic_form(np.asarray(zeta, dtype=float), Z)) * bump


def random_symbol(
    grid: PhaseGrid, rng: np.random.Generator, box: float = 2.0, n_bumps: int = 3, s_min: float = 0.35
) -> PhaseFunction:
    """Sum of modulated Gaussian bumps that fall below ``1e-12`` outside ``[-box, box]^2``.

    Widths are drawn from ``[s_min, (box - |c|_inf) / 3]``; centres shrink towards
    the origin when needed so that every bump keeps width ``>= s_min``.
    """
    vals = np.zeros(grid.shape, dtype=complex)
    reach = max(0.0, min(0.4 * box, box - 3.0 * s_min))
    for _ in range(n_bumps):
        c = rng.uniform(-reach, reach, 2)
        s_hi = (box - np.max(np.abs(c))) / 3.0
        s = rng.uniform(min(s_min, s_hi), s_hi)
        zeta = rng.uniform(-0.5, 0.5, 2)
        coef = rng.normal() + 1j * rng.normal()
        vals += gaussian_bump(grid, c, s, zeta, coef)
    return PhaseFunction(grid, vals)


def random_gaussian(grid: PhaseGrid, rng: np.random.Generator) -> PhaseFunction:
    """A single modulated Gaussian of moderate width near the origin."""
    c = rng.uniform(-0.5, 0.5, 2)
    s = rng.uniform(0.8, 1.2)
    zeta = rng.uniform(-0.4, 0.4, 2)
    return PhaseFunction(grid, gaussian_bump(grid, c, s, zeta, np.exp(1j * rng.uniform(0, 2 * np.pi))))


def random_psd(basis: Hm.HermiteBasis, rng: np.random.Generator, rank: int = 6, span: int = 16) -> W.OperatorMatrix:
    """Random positive semidefinite operator supported on the first ``span`` basis vectors."""
    A = np.zeros((basis.dim, rank), dtype=complex)
    A[:span] = rng.normal(size=(span, rank)) + 1j * rng.normal(size=(span, rank))
    return W.OperatorMatrix(basis, A @ A.conj().T / span)


def random_operator(basis: Hm.HermiteBasis, rng: np.random.Generator, span: int = 16) -> W.OperatorMatrix:
    A = np.zeros((basis.dim, basis.dim), dtype=complex)
    A[:span, :span] = rng.normal(size=(span, span)) + 1j * rng.normal(size=(span, span))
    return W.OperatorMatrix(basis, A / span)


def ground_state(basis: Hm.HermiteBasis) -> WaveFunction:
    return WaveFunction(basis.grid, basis.samples[0])


def ground_ambiguity(grid: PhaseGrid, scale: float) -> np.ndarray:
    """``A(h_0, h_0)(x, xi) = exp(-s^2 x^2 / 4 - pi^2 xi^2 / s^2)`` for the dilated ground state."""
    X, XI = grid.coords()
    return np.exp(-(scale**2) * X**2 / 4.0 - np.pi**2 * XI**2 / scale**2)


def projector(basis: Hm.HermiteBasis, k: int = 0) -> W.OperatorMatrix:
    P = np.zeros((basis.dim, basis.dim))
    P[k, k] = 1.0
    return W.OperatorMatrix(basis, P)


def enlarged_basis(basis: Hm.HermiteBasis) -> Hm.HermiteBasis:
    """A larger basis whose leading block reproduces ``basis`` without truncation at moderate shifts."""
    g = basis.grid
    return Hm.HermiteBasis(ConfigGrid(g.d, 1.5 * g.L, 2 * g.N), int(2.5 * basis.M), basis.scale)


def subsample(F: PhaseFunction, target: PhaseGrid) -> np.ndarray:
    """Values of ``F`` at the points of a coarser lattice with the same box."""
    stride = F.grid.N // target.N
    return F.values[::stride, ::stride]


# ---------------------------------------------------------------------------
# suite


@dataclass(frozen=True)
class IdentityResult:
    name: str
    anchor: str
    tolerance: float
    measured: float
    passed: bool
    seconds: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Context:
    phase: PhaseGrid
    basis: Hm.HermiteBasis
    rng: np.random.Generator

    @property
    def config(self) -> ConfigGrid:
        return self.basis.grid


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def _sup(a, b) -> float:
    return float(np.max(np.abs(a - b)))


def id_plancherel(c: Context):
    F = random_symbol(c.phase, c.rng)
    return abs(G.symplectic_fourier(F).norm(2) - F.norm(2)) / F.norm(2)


def id_involution(c: Context):
    F = random_symbol(c.phase, c.rng)
    return _sup(G.symplectic_fourier(G.symplectic_fourier(F)).values, F.values) / np.abs(F.values).max()


def id_convolution_theorem(c: Context):
    f, g = random_symbol(c.phase, c.rng, box=1.5), random_symbol(c.phase, c.rng, box=1.5)
    lhs = G.symplectic_fourier(G.euclid_convolve(f, g)).values
    return _sup(lhs, G.symplectic_fourier(f).values * G.symplectic_fourier(g).values)


def id_translate_roundtrip(c: Context):
    F = random_symbol(c.phase, c.rng)
    w = c.rng.uniform(-1, 1, 2)
    return _sup(G.translate(G.translate(F, w), -w).values, F.values)


def id_gram(c: Context):
    return c.basis.gram_deviation


def id_eigen(c: Context):
    worst = 0.0
    for k in range(min(21, c.basis.M)):
        f = WaveFunction(c.config, c.basis.samples[k])
        res = Hm.hermite_operator(f, c.basis.scale) - (2 * k + 1) * f
        worst = max(worst, res.norm(2) / f.norm(2))
    return worst


def id_parity(c: Context):
    S = c.basis.samples
    flip = S[:, (-np.arange(c.config.N)) % c.config.N]
    sign = np.where(np.arange(c.basis.M) % 2 == 0, 1.0, -1.0)[:, None]
    return _sup(flip[:, 1:], sign * S[:, 1:])


def id_decay(c: Context):
    worst = 0.0
    s = c.basis.scale
    t = c.config.axis
    for shift in np.linspace(-1.0, 1.0, 5):
        phi = WaveFunction(c.config, np.exp(-0.5 * (s * (t - shift)) ** 2) * (s * t) ** 2)
        coeffs = Hm.analyze(phi, c.basis)
        norms = {n: Hm.hermite_power_norm(phi, n, s) for n in (1, 2, 3)}
        worst = max(worst, max(Hm.verify_decay(coeffs, norms).constants))
    return worst


def id_projective(c: Context):
    big = enlarged_basis(c.basis)
    m = c.basis.M
    worst = 0.0
    for _ in range(3):
        z, zp = c.rng.uniform(-1.4, 1.4, 2), c.rng.uniform(-1.4, 1.4, 2)
        lhs = W.rho_point_matrix(z + zp, big).entries[:m, :m]
        prod = (W.rho_point_matrix(z, big) @ W.rho_point_matrix(zp, big)).entries[:m, :m]
        worst = max(worst, _rel(lhs, np.exp(-1j * np.pi * G.symplectic_form(z, zp)) * prod))
    return worst


def id_homomorphism(c: Context):
    F, Gf = random_gaussian(c.phase, c.rng), random_gaussian(c.phase, c.rng)
    lhs = W.integrated_rep(W.twisted_convolve(F, Gf), c.basis).entries
    rhs = (W.integrated_rep(F, c.basis) @ W.integrated_rep(Gf, c.basis)).entries
    return _rel(lhs, rhs)


def id_quantize_consistency(c: Context):
    a = random_symbol(c.phase, c.rng)
    return _sup(W.quantize(a, c.basis).entries, W.integrated_rep(G.symplectic_fourier(a), c.basis).entries)


def id_pairing(c: Context):
    u, F = random_symbol(c.phase, c.rng), random_symbol(c.phase, c.rng)
    ku, kF = W.kernel_from_phase_function(u, c.config), W.kernel_from_phase_function(F, c.config)
    lhs = np.sum(ku.values * kF.values) * c.config.h**2
    rhs = np.sum(u.values * G.reflect(F, axes=[1]).values) * c.phase.cell
    return abs(lhs - rhs) / max(abs(rhs), 1e-300)


def id_trace(c: Context):
    F = random_gaussian(c.phase, c.rng)
    return abs(W.trace_of_rep(F) - F.at_origin())


def id_self_adjoint(c: Context):
    a = random_symbol(c.phase, c.rng)
    T = W.quantize(PhaseFunction(c.phase, a.values.real), c.basis).entries
    return _sup(T, T.conj().T)


def id_weyl_plancherel(c: Context):
    a = random_symbol(c.phase, c.rng)
    return abs(W.quantize(a, c.basis).frobenius() / a.norm(2) - 1.0)


def id_ambiguity_closed_form(c: Context):
    cg = ConfigGrid(1, c.phase.L, c.phase.N)
    h0 = WaveFunction(cg, Hm.hermite_samples(0, cg))
    return _sup(W.cross_ambiguity(h0, h0).values, ground_ambiguity(c.phase, 1.0))


def _random_wave(cg: ConfigGrid, rng) -> WaveFunction:
    t = cg.axis
    a, b, w = rng.uniform(-1, 1), rng.uniform(0.6, 1.4), rng.uniform(-1, 1)
    return WaveFunction(cg, np.exp(-np.pi * ((t - a) / b) ** 2 + 2j * np.pi * w * t) * (1 + 0.3 * t))


def id_moyal(c: Context):
    cg = ConfigGrid(1, c.phase.L, c.phase.N)
    f, g = _random_wave(cg, c.rng), _random_wave(cg, c.rng)
    return abs(W.cross_ambiguity(f, g).norm(2) - f.norm(2) * g.norm(2)) / (f.norm(2) * g.norm(2))


def id_ambiguity_parity(c: Context):
    # as stated the relation needs real windows; complex ones pick up conjugates (next identity)
    cg = ConfigGrid(1, c.phase.L, c.phase.N)
    g1, g2 = _random_wave(cg, c.rng).real_part(), _random_wave(cg, c.rng).real_part()
    lhs = W.cross_ambiguity(G.reflect(g2), G.reflect(g1)).values
    rhs = G.reflect(W.cross_ambiguity(g1, g2), axes=[1]).values
    return _sup(lhs, rhs)


def id_ambiguity_parity_complex(c: Context):
    cg = ConfigGrid(1, c.phase.L, c.phase.N)
    g1, g2 = _random_wave(cg, c.rng), _random_wave(cg, c.rng)
    lhs = W.cross_ambiguity(G.reflect(g2), G.reflect(g1)).values
    rhs = G.reflect(W.cross_ambiguity(g1.conj(), g2.conj()), axes=[1]).values
    return _sup(lhs, rhs)


def id_fourier_wigner(c: Context):
    ev = Sc.default_eval_grid(projector(c.basis))
    FW = W.fourier_wigner(projector(c.basis), ev)
    return _sup(FW.values, ground_ambiguity(ev, c.basis.scale))


def id_star(c: Context):
    F1, F2 = random_gaussian(c.phase, c.rng), random_gaussian(c.phase, c.rng)
    conv = Sc.werner_convolve(W.integrated_rep(F1, c.basis), W.integrated_rep(F2, c.basis))
    return _sup(conv.values, subsample(G.symplectic_fourier(F1 * F2), conv.grid))


def id_star_general(c: Context):
    u = random_symbol(c.phase, c.rng, s_min=0.5)
    phi = PhaseFunction(c.phase, gaussian_bump(c.phase, (0.0, 0.0), 1.0))
    conv = Sc.werner_convolve(W.integrated_rep(u, c.basis), W.integrated_rep(phi, c.basis))
    rhs = G.euclid_convolve(G.symplectic_fourier(u), G.symplectic_fourier(phi))
    return _sup(conv.values, subsample(rhs, conv.grid))


def id_inverse_estimate(c: Context):
    u = random_symbol(c.phase, c.rng)
    F = PhaseFunction(c.phase, gaussian_bump(c.phase, (0.0, 0.0), 1.2))
    lhs_fn = G.symplectic_fourier(F * u)
    rF = Sc.schatten_norm(W.integrated_rep(F, c.basis), 1).norm
    T = W.integrated_rep(u, c.basis)
    return max(lhs_fn.norm(p) / (rF * Sc.schatten_norm(T, p).norm) for p in (1.0, 2.0, math.inf))


def id_translation_invariance(c: Context):
    a = random_symbol(c.phase, c.rng, s_min=0.5)
    base = Sc.singular_values(W.quantize(a, c.basis))
    worst = 0.0
    for w in ((2.0, 0.0), (-1.25, 1.5), (0.0, -2.0)):
        moved = Sc.singular_values(W.quantize(G.translate(a, w), c.basis))
        for p in (1.0, 2.0, math.inf):
            worst = max(worst, abs(moved.norm(p) - base.norm(p)) / base.norm(p))
    return worst


def id_werner_commutative(c: Context):
    T1, T2 = random_psd(c.basis, c.rng), random_psd(c.basis, c.rng)
    a, b = Sc.werner_convolve(T1, T2), Sc.werner_convolve(T2, T1)
    return _sup(a.values, b.values) / np.abs(a.values).max()


def id_werner_positive(c: Context):
    T1, T2 = random_psd(c.basis, c.rng), random_psd(c.basis, c.rng)
    v = Sc.werner_convolve(T1, T2).values
    return max(float(np.abs(v.imag).max()), float(max(0.0, -v.real.min())))


def id_young_equality(c: Context):
    P = projector(c.basis)
    return abs(Sc.young_check(P, P, 1, 1, 1).lhs - 1.0)


def id_rank_one(c: Context):
    f = c.rng.normal(size=c.basis.dim) + 1j * c.rng.normal(size=c.basis.dim)
    g = c.rng.normal(size=c.basis.dim) + 1j * c.rng.normal(size=c.basis.dim)
    T = W.OperatorMatrix.rank_one(c.basis, f, g)
    ref = np.linalg.norm(f) * np.linalg.norm(g)
    return max(abs(Sc.schatten_norm(T, p).norm - ref) / ref for p in (1.0, 1.5, 2.0, 4.0, math.inf))


def _circle():
    return Rs.make_measure("circle", radius=1.0, n_atoms=256)


def id_classical_duality(c: Context):
    mu = _circle()
    g = random_symbol(c.phase, c.rng)
    f = c.rng.normal(size=256) + 1j * c.rng.normal(size=256)
    lhs, rhs = Rs.classical_duality(g, f, mu)
    return abs(lhs - rhs) / max(1.0, abs(rhs))


def id_quantum_duality(c: Context):
    mu = _circle()
    T = random_operator(c.basis, c.rng)
    f = c.rng.normal(size=256) + 1j * c.rng.normal(size=256)
    lhs, rhs = Rs.quantum_duality(T, f, mu)
    return abs(lhs - rhs) / max(1.0, abs(rhs))


def id_circle_bessel(c: Context):
    from scipy.special import j0

    mu = _circle()
    ang = c.rng.uniform(0, 2 * np.pi, 64)
    rad = c.rng.uniform(0, 4, 64)
    w = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    return _sup(Rs.extension_classical(1.0, mu, w), 2 * np.pi * j0(2 * np.pi * rad))


def id_equivalence_p2(c: Context):
    worst = 0.0
    for R in (1.0, 2.0, 4.0):
        rep = Rs.equivalence_experiment(Rs.bump_symbol(c.phase, R, c.rng), (2.0,), c.basis, check=False)
        worst = max(worst, abs(rep.ratio(2.0) - 1.0))
    return worst


# name, anchor, tolerance, function
SUITE: list[tuple[str, str, float, Callable]] = [
    ("symplectic_plancherel", "||F_sigma F||_2 = ||F||_2", 1e-8, id_plancherel),
    ("symplectic_involution", "F_sigma F_sigma = Id", 1e-8, id_involution),
    ("convolution_theorem", "F_sigma(f*g) = F_sigma f . F_sigma g", 1e-7, id_convolution_theorem),
    ("translate_roundtrip", "lambda_{-w} lambda_w = Id", 1e-10, id_translate_roundtrip),
    ("hermite_gram", "(h_j, h_k) = delta_jk", 1e-8, id_gram),
    ("hermite_eigenrelation", "(-d^2 + x^2) h_k = (2k+1) h_k", 1e-6, id_eigen),
    ("hermite_parity", "h_k(-x) = (-1)^k h_k(x)", 1e-14, id_parity),
    ("hermite_decay_bound", "|phi_k| (n+2|k|)^N / ||H^N phi||_2 <= 1", 1.0 + 1e-9, id_decay),
    ("projective_law", "rho(z+z') = exp(-i pi sigma(z,z')) rho(z) rho(z')", 1e-4, id_projective),
    ("homomorphism", "rho(F x G) = rho(F) rho(G)", 1e-5, id_homomorphism),
    ("quantize_kernel_consistency", "L_a = rho(F_sigma a)", 1e-8, id_quantize_consistency),
    ("pairing_identity", "<k_u, k_F> = <u, P_xi F>", 1e-6, id_pairing),
    ("trace_formula", "tr rho(F) = F(0)", 1e-6, id_trace),
    ("self_adjointness", "a real => L_a = L_a^*", 1e-8, id_self_adjoint),
    ("weyl_plancherel", "||L_a||_{S^2} = ||a||_2", 1e-3, id_weyl_plancherel),
    ("ambiguity_closed_form", "A(h0,h0) = exp(-x^2/4 - pi^2 xi^2)", 1e-7, id_ambiguity_closed_form),
    ("moyal", "||A(f,g)||_2 = ||f||_2 ||g||_2", 1e-6, id_moyal),
    ("ambiguity_parity", "A(Pg2, Pg1) = P_xi A(g1, g2), g real", 1e-8, id_ambiguity_parity),
    ("ambiguity_parity_complex", "A(Pg2, Pg1) = P_xi A(conj g1, conj g2)", 1e-8, id_ambiguity_parity_complex),
    ("fourier_wigner_projector", "F_W(h0 (x) h0) = A(h0,h0)", 1e-8, id_fourier_wigner),
    ("star_identity", "rho(F1) * rho(F2) = F_sigma(F1 F2)", 1e-4, id_star),
    ("star_identity_general", "rho(u) * rho(phi) = F_sigma u * F_sigma phi", 1e-4, id_star_general),
    ("inverse_estimate", "||F_sigma(F u)||_p / (||rho(F)||_{S^1} ||rho(u)||_{S^p}) <= 1", 1.0 + 1e-6, id_inverse_estimate),
    ("translation_invariance", "||L_{lambda_w a}||_{S^p} = ||L_a||_{S^p}", 1e-3, id_translation_invariance),
    ("werner_commutative", "T1 * T2 = T2 * T1", 1e-6, id_werner_commutative),
    ("werner_positive", "T1, T2 >= 0 => T1 * T2 >= 0", 1e-8, id_werner_positive),
    ("young_equality", "||P * P||_1 = ||P||_{S^1}^2 = 1", 1e-6, id_young_equality),
    ("rank_one_schatten", "||f (x) g||_{S^p} = ||f||_2 ||g||_2", 1e-8, id_rank_one),
    ("classical_duality", "int conj(F_sigma g) f dmu = int conj(g) E_sigma f", 1e-5, id_classical_duality),
    ("quantum_duality", "int conj(F_W T) f dmu = tr(E_W(f) T^*)", 1e-5, id_quantum_duality),
    ("circle_bessel_profile", "E_sigma 1 = 2 pi J0(2 pi |w|)", 1e-3, id_circle_bessel),
    ("equivalence_p2", "||L_{F_sigma u}||_{S^2} = ||F_sigma u||_2", 1e-3, id_equivalence_p2),
]


def run_suite(phase: PhaseGrid, basis: Hm.HermiteBasis, seed: int = 0, names=None) -> list[IdentityResult]:
    """Run every identity (or the selected ``names``) with a seeded generator per identity."""
    results = []
    for k, (name, anchor, tol, fn) in enumerate(SUITE):
        if names is not None and name not in names:
            continue
        ctx = Context(phase, basis, np.random.default_rng([int(seed), k]))
        start = time.perf_counter()
        measured = float(fn(ctx))
        results.append(IdentityResult(name, anchor, tol, measured, bool(measured <= tol), time.perf_counter() - start))
    return results
