"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Defaults are d = 1, L = 8, N = 256 for the phase lattice and the isotropic
Hermite basis with L_x = 8, N_x = 256, M = 64. The refinement criterion reruns
criteria 1, 4 and 10 on the N = 128 phase lattice with the same basis.
"""

import math
import time
from functools import lru_cache

import numpy as np

from qha.grid import ConfigGrid, PhaseFunction, PhaseGrid, WaveFunction, reflect, symplectic_form, symplectic_fourier, translate
from qha.hermite import analyze, basis_from_config, hermite_operator, hermite_power_norm, hermite_samples, verify_decay
from qha.identities import (
    enlarged_basis,
    gaussian_bump,
    ground_ambiguity,
    projector,
    random_gaussian,
    random_operator,
    random_psd,
    random_symbol,
    subsample,
)
from qha.restriction import bump_symbol, classical_duality, make_measure, quantum_duality, radius_growth_study
from qha.schatten import singular_values, werner_convolve, young_check
from qha.weyl import OperatorMatrix, cross_ambiguity, integrated_rep, quantize, rho_point_matrix, trace_of_rep, twisted_convolve

SUMMARY = []
SEED = 20240611


def report(number, ok, detail, seconds):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail} ({seconds:.1f} s)"
    SUMMARY.append(line)
    print(line)


@lru_cache(maxsize=None)
def basis():
    return basis_from_config(8.0, 256, 64)


def phase(N=256):
    return PhaseGrid(1, 8.0, N)


def rng(k):
    return np.random.default_rng([SEED, k])


# ---------------------------------------------------------------------------
# criterion computations, cached so the refinement check can reuse them


@lru_cache(maxsize=None)
def weyl_plancherel_ratios(N):
    start = time.perf_counter()
    g, r = phase(N), rng(1)
    ratios = []
    for _ in range(20):
        a = random_symbol(g, r, box=2.0)
        ratios.append(quantize(a, basis()).frobenius() / a.norm(2))
    return np.array(ratios), time.perf_counter() - start


@lru_cache(maxsize=None)
def star_results(N):
    """Errors and output norms for Gaussian pairs and (density, cutoff) pairs."""
    start = time.perf_counter()
    g, r = phase(N), rng(4)
    errors, norms = [], []
    for _ in range(5):
        F1, F2 = random_gaussian(g, r), random_gaussian(g, r)
        conv = werner_convolve(integrated_rep(F1, basis()), integrated_rep(F2, basis()))
        errors.append(np.max(np.abs(conv.values - subsample(symplectic_fourier(F1 * F2), conv.grid))))
        norms.append(np.abs(conv.values).max())
    phi = PhaseFunction(g, gaussian_bump(g, (0.0, 0.0), 1.0))
    rho_phi = integrated_rep(phi, basis())
    # bumps of width >= 0.5: narrower ones spread F_sigma(phi u) past the radius
    # where the 64-function basis resolves conjugation by rho(w)
    for R in (2.0, 3.0, 4.0):
        u = bump_symbol(g, R, r, s_min=0.5).function
        conv = werner_convolve(integrated_rep(u, basis()), rho_phi)
        errors.append(np.max(np.abs(conv.values - subsample(symplectic_fourier(phi * u), conv.grid))))
        norms.append(np.abs(conv.values).max())
    return np.array(errors), np.array(norms), time.perf_counter() - start


@lru_cache(maxsize=None)
def growth_table(N):
    start = time.perf_counter()
    table = radius_growth_study(phase(N), basis(), (1.0, 2.0, 4.0), (1.0, 2.0, math.inf), family_size=32, seed=SEED)
    return table, time.perf_counter() - start


# ---------------------------------------------------------------------------


def test_criterion_01_weyl_plancherel():
    ratios, secs = weyl_plancherel_ratios(256)
    worst = float(np.max(np.abs(ratios - 1.0)))
    ok = worst <= 1e-3 and secs <= 10.0
    report(1, ok, f"max |S2/L2 - 1| = {worst:.2e} over 20 symbols (tol 1e-3)", secs)
    assert ok


def test_criterion_02_trace_formula():
    start = time.perf_counter()
    g, r = phase(), rng(2)
    X, XI = g.coords()
    samples = [PhaseFunction(g, np.exp(-np.pi * (X**2 + XI**2)))]
    for _ in range(10):
        c, s = r.uniform(-0.5, 0.5, 2), r.uniform(0.8, 1.3)
        poly = 1 + r.normal() * (X - c[0]) + r.normal() * (XI - c[1]) ** 2
        samples.append(PhaseFunction(g, poly * gaussian_bump(g, c, s, r.uniform(-0.4, 0.4, 2), r.normal() + 1j * r.normal())))
    worst = max(abs(trace_of_rep(F) - F.at_origin()) for F in samples)
    secs = time.perf_counter() - start
    ok = worst <= 1e-6 and secs <= 2.0
    report(2, ok, f"max |tr rho(F) - F(0)| = {worst:.2e} over 11 functions (tol 1e-6)", secs)
    assert ok


def test_criterion_03_projective_law_and_homomorphism():
    start = time.perf_counter()
    r = rng(3)
    big, m = enlarged_basis(basis()), basis().M
    proj = []
    for _ in range(10):
        # |z|, |z'| <= 2 keeps rho(z) rho(z') h_k, k < M, inside the enlarged window
        z, zp = (v * 2.0 * math.sqrt(r.uniform()) for v in (_unit(r), _unit(r)))
        lhs = rho_point_matrix(z + zp, big).entries[:m, :m]
        prod = (rho_point_matrix(z, big) @ rho_point_matrix(zp, big)).entries[:m, :m]
        proj.append(np.linalg.norm(lhs - np.exp(-1j * np.pi * symplectic_form(z, zp)) * prod) / np.linalg.norm(lhs))
    hom = []
    for _ in range(5):
        F, G = random_gaussian(phase(), r), random_gaussian(phase(), r)
        rhs = (integrated_rep(F, basis()) @ integrated_rep(G, basis())).entries
        lhs = integrated_rep(twisted_convolve(F, G), basis()).entries
        hom.append(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
    secs = time.perf_counter() - start
    ok = max(proj) <= 1e-4 and max(hom) <= 1e-4 and secs <= 30.0
    report(3, ok, f"projective {max(proj):.2e}, homomorphism {max(hom):.2e} relative (tol 1e-4)", secs)
    assert ok


def _unit(r):
    a = r.uniform(0, 2 * math.pi)
    return np.array([math.cos(a), math.sin(a)])


def test_criterion_04_star_identities():
    errors, _, secs = star_results(256)
    ok = errors.max() <= 1e-4 and secs <= 30.0
    report(4, ok, f"Gaussian pairs {errors[:5].max():.2e}, density/cutoff {errors[5:].max():.2e} sup error (tol 1e-4)", secs)
    assert ok


def test_criterion_05_young_inequality():
    start = time.perf_counter()
    r = rng(5)
    exps = [(1, 1, 1), (1, 2, 2), (2, 2, math.inf), (4 / 3, 4 / 3, 2), (1, math.inf, math.inf), (3 / 2, 3 / 2, 3), (1, 4, 4)]
    P = projector(basis())
    eq = young_check(P, P, 1, 1, 1)
    slacks = []
    for k in range(49):
        T1 = random_psd(basis(), r) if k % 2 else random_operator(basis(), r)
        T2 = random_psd(basis(), r) if k % 3 else random_operator(basis(), r)
        slacks.append(young_check(T1, T2, *exps[k % len(exps)]).slack)
    slacks.append(eq.slack)
    secs = time.perf_counter() - start
    ok = min(slacks) >= -1e-6 and abs(eq.lhs - 1.0) <= 1e-6 and secs <= 30.0
    report(5, ok, f"min slack {min(slacks):.2e} over 50 triples (tol -1e-6); ||P*P||_1 = {eq.lhs:.10f}", secs)
    assert ok


def test_criterion_06_rank_one_law():
    start = time.perf_counter()
    r = rng(6)
    worst = 0.0
    for _ in range(10):
        f = r.normal(size=64) + 1j * r.normal(size=64)
        g = r.normal(size=64) + 1j * r.normal(size=64)
        spec = singular_values(OperatorMatrix.rank_one(basis(), f, g))
        ref = np.linalg.norm(f) * np.linalg.norm(g)
        worst = max(worst, max(abs(spec.norm(p) - ref) / ref for p in (1, 1.5, 2, 4, math.inf)))
    secs = time.perf_counter() - start
    ok = worst <= 1e-8 and secs <= 2.0
    report(6, ok, f"max relative deviation {worst:.2e} (tol 1e-8)", secs)
    assert ok


def test_criterion_07_translation_invariance():
    start = time.perf_counter()
    g, r = phase(), rng(7)
    shifts = [(2.0, 0.0), (0.0, -2.0), (-2.0, 0.0), (1.25, 1.5), (-1.375, 1.375), (1.375, -1.375), (0.5, -1.0)]
    worst = 0.0
    for _ in range(4):
        a = random_symbol(g, r, box=2.0, s_min=0.5)
        base = singular_values(quantize(a, basis()))
        for w in shifts:
            moved = singular_values(quantize(translate(a, w), basis()))
            for p in (1, 2, math.inf):
                worst = max(worst, abs(moved.norm(p) - base.norm(p)) / base.norm(p))
    secs = time.perf_counter() - start
    ok = worst <= 1e-3 and secs <= 10.0
    report(7, ok, f"max relative S^p deviation {worst:.2e} for |w| <= 2 (tol 1e-3)", secs)
    assert ok


def test_criterion_08_hermite_suite():
    start = time.perf_counter()
    b = basis()
    eig = 0.0
    for k in range(21):
        f = WaveFunction(b.grid, b.samples[k])
        eig = max(eig, (hermite_operator(f, b.scale) - (2 * k + 1) * f).norm(2) / f.norm(2))
    r = rng(8)
    t = b.grid.axis
    held = 0
    for _ in range(10):
        c, w, n = r.uniform(-1, 1), r.uniform(0.7, 1.4), int(r.integers(0, 4))
        phi = WaveFunction(b.grid, (t - c) ** n * np.exp(-np.pi * ((t - c) / w) ** 2) * np.exp(2j * np.pi * r.uniform(-0.5, 0.5) * t))
        norms = {N: hermite_power_norm(phi, N, b.scale) for N in (1, 2, 3)}
        held += verify_decay(analyze(phi, b), norms).holds
    secs = time.perf_counter() - start
    ok = b.gram_deviation <= 1e-8 and eig <= 1e-6 and held == 10 and secs <= 5.0
    report(8, ok, f"Gram {b.gram_deviation:.2e} (tol 1e-8), eigen residual {eig:.2e} (tol 1e-6), decay bound {held}/10", secs)
    assert ok


def test_criterion_09_cross_ambiguity():
    start = time.perf_counter()
    cg = ConfigGrid(1, 8.0, 256)
    h0 = WaveFunction(cg, hermite_samples(0, cg))
    A = cross_ambiguity(h0, h0)
    closed = float(np.max(np.abs(A.values - ground_ambiguity(A.grid, 1.0))))
    r = rng(9)
    t = cg.axis
    waves = []
    for _ in range(6):
        c, w, k = r.uniform(-1, 1), r.uniform(0.6, 1.4), r.uniform(-1, 1)
        waves.append(WaveFunction(cg, np.exp(-np.pi * ((t - c) / w) ** 2 + 2j * np.pi * k * t) * (1 + 0.3 * t)))
    moyal = max(abs(cross_ambiguity(f, g).norm(2) - f.norm(2) * g.norm(2)) / (f.norm(2) * g.norm(2)) for f, g in zip(waves[::2], waves[1::2]))
    # the relation as written holds for real windows; complex ones need conjugates
    parity = 0.0
    general = 0.0
    for g1, g2 in zip(waves[::2], waves[1::2]):
        lhs = cross_ambiguity(reflect(g2.real_part()), reflect(g1.real_part())).values
        parity = max(parity, np.max(np.abs(lhs - reflect(cross_ambiguity(g1.real_part(), g2.real_part()), axes=[1]).values)))
        lhs = cross_ambiguity(reflect(g2), reflect(g1)).values
        general = max(general, np.max(np.abs(lhs - reflect(cross_ambiguity(g1.conj(), g2.conj()), axes=[1]).values)))
    secs = time.perf_counter() - start
    ok = closed <= 1e-7 and moyal <= 1e-6 and parity <= 1e-8 and general <= 1e-8 and secs <= 5.0
    report(9, ok, f"closed form {closed:.2e} (tol 1e-7), Moyal {moyal:.2e} (tol 1e-6), parity {parity:.2e} real / {general:.2e} conjugated (tol 1e-8)", secs)
    assert ok


def _growth_checks(table):
    finite = all(math.isfinite(r.ratio_min) and math.isfinite(r.ratio_max) for r in table.rows)
    p2 = max(abs(v - 1.0) for r in table.rows if r.p == 2.0 and r.direction == "forward" for v in (r.ratio_min, r.ratio_max))
    slopes = [f.slope for f in table.fits if f.p in (1.0, math.inf)]
    gaussian = [f for f in table.fits if f.gaussian_fits_better]
    return finite, p2, max(slopes), gaussian


def test_criterion_10_equivalence_growth():
    table, secs = growth_table(256)
    finite, p2, slope, gaussian = _growth_checks(table)
    ok = finite and p2 <= 1e-3 and slope <= 7.5 and not gaussian and secs <= 600.0
    fits = ", ".join(f"p={'inf' if math.isinf(f.p) else f'{f.p:g}'} {f.direction} {f.slope:+.3f}" for f in table.fits if f.p != 2.0)
    report(10, ok, f"p=2 deviation {p2:.2e} (tol 1e-3), max slope {slope:.3f} (ceiling 7.5) [{fits}], Gaussian rate better in {len(gaussian)} fits", secs)
    assert ok


def test_criterion_11_restriction_duality():
    start = time.perf_counter()
    mu = make_measure("circle", radius=1.0, n_atoms=256)
    r = rng(11)
    worst_c = worst_q = 0.0
    for _ in range(10):
        f = r.normal(size=256) + 1j * r.normal(size=256)
        lhs, rhs = classical_duality(random_symbol(phase(), r), f, mu)
        worst_c = max(worst_c, abs(lhs - rhs) / max(1.0, abs(rhs)))
        lhs, rhs = quantum_duality(random_operator(basis(), r), f, mu)
        worst_q = max(worst_q, abs(lhs - rhs) / max(1.0, abs(rhs)))
    secs = time.perf_counter() - start
    ok = worst_c <= 1e-5 and worst_q <= 1e-5 and secs <= 60.0
    report(11, ok, f"classical {worst_c:.2e}, quantum {worst_q:.2e} (tol 1e-5)", secs)
    assert ok


def _agree(a, b, floor=0.0):
    return abs(a - b) <= 0.1 * max(abs(a), abs(b), floor)


def test_criterion_12_refinement_stability():
    start = time.perf_counter()
    problems = []

    r256, _ = weyl_plancherel_ratios(256)
    r128, _ = weyl_plancherel_ratios(128)
    problems += [f"c1 ratio {k}" for k in range(20) if not _agree(r128[k], r256[k])]
    if np.max(np.abs(r128 - 1.0)) > 1e-3:
        problems.append("c1 tolerance at N=128")

    e256, n256, _ = star_results(256)
    e128, n128, _ = star_results(128)
    problems += [f"c4 output norm {k}" for k in range(len(n256)) if not _agree(n128[k], n256[k])]
    if e128.max() > 1e-4:
        problems.append(f"c4 tolerance at N=128 ({e128.max():.2e})")

    t256, _ = growth_table(256)
    t128, _ = growth_table(128)
    for a, b in zip(t256.rows, t128.rows):
        for name in ("ratio_min", "ratio_max"):
            if not _agree(getattr(a, name), getattr(b, name)):
                problems.append(f"c10 {name} R={a.R} p={a.p} {a.direction}")
    # slopes are log-log degrees; a unit floor keeps near-zero slopes from
    # turning round-off into a relative disagreement
    for a, b in zip(t256.fits, t128.fits):
        for name in ("slope", "ci_lo", "ci_hi"):
            if not _agree(getattr(a, name), getattr(b, name), floor=1.0):
                problems.append(f"c10 {name} p={a.p} {a.direction}")
        if a.gaussian_fits_better != b.gaussian_fits_better:
            problems.append(f"c10 model comparison p={a.p} {a.direction}")
    finite, p2, slope, gaussian = _growth_checks(t128)
    if not (finite and p2 <= 1e-3 and slope <= 7.5 and not gaussian):
        problems.append("c10 checks at N=128")

    secs = time.perf_counter() - start
    ok = not problems and secs <= 900.0
    worst_ratio = max(abs(a.ratio_max - b.ratio_max) / a.ratio_max for a, b in zip(t256.rows, t128.rows))
    report(12, ok, f"N=128 vs N=256: {len(problems)} disagreements; max ratio drift {worst_ratio:.2e}, c4 error at N=128 {e128.max():.2e}", secs)
    assert ok, problems
