import math

import numpy as np
import pytest
from scipy.special import j0

from qha.errors import AccuracyError, ConfigurationError, SupportOverflowError
from qha.grid import PhaseFunction, PhaseGrid
from qha.identities import gaussian_bump, random_operator, random_symbol
from qha.restriction import (
    CompactMeasure,
    DensitySymbol,
    atom_cloud,
    atomic_equivalence,
    bump_symbol,
    classical_duality,
    compactness_diagnostic,
    equivalence_experiment,
    extension_classical,
    extension_quantum,
    make_measure,
    quantum_duality,
    radius_growth_study,
    restriction_classical,
    restriction_quantum,
    smoothed_symbol_bound,
)


@pytest.fixture(scope="module")
def circle():
    return make_measure("circle", radius=1.0, n_atoms=256)


def test_circle_measure(circle):
    assert abs(circle.mass - 2 * np.pi) < 1e-12
    assert circle.radius == 1.0
    back = CompactMeasure.from_json(circle.to_json())
    assert np.array_equal(back.points, circle.points) and np.array_equal(back.weights, circle.weights)


def test_measure_validation():
    with pytest.raises(ValueError):
        CompactMeasure(np.array([[0.0, 0.0]]), np.array([-1.0]), np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        CompactMeasure(np.array([[3.0, 0.0]]), np.array([1.0]), np.zeros(2), 1.0)
    with pytest.raises(ValueError):
        make_measure("blob")
    # small supports are clamped to radius 1
    assert make_measure("atoms", points=[[0.1, 0.0]], weights=[1.0]).radius == 1.0


def test_density_symbol_support_is_checked(phase):
    wide = PhaseFunction(phase, gaussian_bump(phase, (0.0, 0.0), 2.0))
    with pytest.raises(ValueError):
        DensitySymbol(wide, np.zeros(2), 1.0)


def test_circle_extension_is_bessel(circle):
    r = np.linspace(0, 4, 41)
    pts = np.column_stack([r, np.zeros_like(r)])
    assert np.max(np.abs(extension_classical(1.0, circle, pts) - 2 * np.pi * j0(2 * np.pi * r))) < 1e-3


def test_extension_grid_matches_points(circle):
    pg = PhaseGrid(1, 2.0, 16)
    on_grid = extension_classical(lambda z: z[:, 0] + 1j, circle, pg).values
    X, XI = pg.coords()
    pts = np.stack(np.broadcast_arrays(X, XI), axis=-1).reshape(-1, 2)
    direct = extension_classical(lambda z: z[:, 0] + 1j, circle, pts).reshape(pg.shape)
    assert np.max(np.abs(on_grid - direct)) < 1e-12


def test_dualities(circle, phase, basis, rng):
    for _ in range(3):
        f = rng.normal(size=256) + 1j * rng.normal(size=256)
        lhs, rhs = classical_duality(random_symbol(phase, rng), f, circle)
        assert abs(lhs - rhs) <= 1e-5 * max(1.0, abs(rhs))
        lhs, rhs = quantum_duality(random_operator(basis, rng), f, circle)
        assert abs(lhs - rhs) <= 1e-5 * max(1.0, abs(rhs))


def test_restriction_norms(circle, phase, basis, rng):
    g = random_symbol(phase, rng)
    r2 = restriction_classical(g, circle, 2.0)
    rinf = restriction_classical(g, circle, math.inf)
    assert rinf.norm == np.abs(r2.values).max()
    assert r2.norm <= rinf.norm * math.sqrt(circle.mass) * (1 + 1e-12)
    assert restriction_quantum(random_operator(basis, rng), circle, 1.0).norm > 0
    with pytest.raises(ValueError):
        restriction_classical(g, circle, 0.5)


def test_bump_symbols_are_supported(phase, rng):
    for R in (1.0, 2.0, 4.0):
        u = bump_symbol(phase, R, rng)
        assert u.radius == R


def test_equivalence_p2_is_plancherel(phase, basis, rng):
    for R in (1.0, 2.0, 4.0):
        rep = equivalence_experiment(bump_symbol(phase, R, rng), (1.0, 2.0, math.inf), basis)
        assert abs(rep.ratio(2.0) - 1.0) <= 1e-3
        assert all(math.isfinite(r) and r > 0 for r in rep.ratios + rep.inverse_ratios)
        assert rep.ratio(1.0) * rep.inverse_ratio(1.0) == pytest.approx(1.0)


def test_equivalence_refuses_undersampled_transform(basis):
    # a narrow bump has a wide F_sigma that reaches the edge of a small box
    pg = PhaseGrid(1, 2.0, 64)
    from qha.hermite import basis_from_config

    u = DensitySymbol(PhaseFunction(pg, gaussian_bump(pg, (0.0, 0.0), 0.1)), np.zeros(2), 1.0)
    with pytest.raises(AccuracyError):
        equivalence_experiment(u, (2.0,), basis_from_config(2.0, 64, 4))


def test_atomic_equivalence_is_flagged_truncated(phase, basis, rng):
    rep = atomic_equivalence(atom_cloud(1.5, rng), 1.0, (1.0, 2.0), basis, phase)
    assert rep.box_truncated and rep.family == "atoms"


def test_smoothed_bound(phase, basis, rng):
    a = random_symbol(phase, rng)
    phi = PhaseFunction(phase, gaussian_bump(phase, (0.0, 0.0), 0.5))
    rep = smoothed_symbol_bound(a, phi, 2.0, basis)
    assert 0 < rep.constant < math.inf
    wide = PhaseFunction(phase, gaussian_bump(phase, (0.0, 0.0), 3.0))
    with pytest.raises(SupportOverflowError):
        smoothed_symbol_bound(wide, wide, 2.0, basis)


def test_growth_study_small(phase, basis):
    table = radius_growth_study(phase, basis, (1.0, 2.0), (1.0, 2.0), family_size=3, seed=4, n_boot=20)
    assert len(table.rows) == 2 * 2 * 2
    assert table.to_csv().splitlines()[0].startswith("R,p,direction")
    fit = table.fit(2.0)
    assert abs(fit.slope) < 1e-2
    with pytest.raises(ConfigurationError):
        radius_growth_study(phase, basis, (0.5,), (2.0,), family_size=1)


def test_growth_study_is_thread_count_independent(phase, basis):
    a = radius_growth_study(phase, basis, (1.0, 2.0), (1.0,), family_size=4, seed=9, n_boot=10)
    b = radius_growth_study(phase, basis, (1.0, 2.0), (1.0,), family_size=4, seed=9, n_boot=10, workers=3)
    assert a.to_csv() == b.to_csv()


def test_compactness_diagnostic(phase, basis, rng, circle):
    rep = compactness_diagnostic(bump_symbol(phase, 1.0, rng), basis)
    assert rep.singular_flag in ("decaying", "non-vanishing", "zero")
    assert list(rep.tail_fractions) == sorted(rep.tail_fractions, reverse=True)
    rep = compactness_diagnostic(circle, basis, PhaseGrid(1, 4.0, 64))
    assert len(rep.annulus_sups) == len(rep.annulus_radii)
    with pytest.raises(ValueError):
        compactness_diagnostic(circle, basis)
