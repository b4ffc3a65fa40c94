import numpy as np
import pytest

from quadspec import (
    compute_density,
    compute_edges,
    fit_edge_exponent,
    quantiles,
    solve_m,
    validate_spec,
    write_density_csv,
)
from quadspec.density import InsufficientPointsError, MassDeficitError

# integral of sqrt((4-E)/E)/(2 pi) from gamma to 4 equals 1/2000 (quadrature oracle)
SQUARED_WIGNER_TOP_QUANTILE = 3.955481225986735


@pytest.fixture(scope="module")
def squared_curve(wigner_square_spec):
    return compute_density(wigner_square_spec, compute_edges(wigner_square_spec), 512)


@pytest.fixture(scope="module")
def anti_curve(anticommutator_spec):
    return compute_density(anticommutator_spec, compute_edges(anticommutator_spec), 512)


def test_density_closed_form_squared_wigner(squared_curve, wigner_square_spec):
    # rho(E) = sqrt((4-E)/E)/(2 pi) on (0, 4)
    inside = (squared_curve.energies > 0.05) & (squared_curve.energies < 3.95)
    E = squared_curve.energies[inside]
    exact = np.sqrt((4.0 - E) / E) / (2.0 * np.pi)
    assert np.max(np.abs(squared_curve.rho[inside] - exact)) <= 1e-5
    m1 = solve_m(2.0 + 1e-6j, wigner_square_spec).m
    m2 = solve_m(2.0 + 5e-7j, wigner_square_spec).m
    rho_2 = (2 * m2.imag - m1.imag) / np.pi
    assert rho_2 == pytest.approx(0.15915494, abs=1e-5)


def test_density_outside_support(squared_curve, wigner_square_spec):
    outside = squared_curve.energies > 4.0 + squared_curve.grid_step
    assert np.all(squared_curve.rho[outside] <= 1e-6)
    m1 = solve_m(5.0 + 1e-6j, wigner_square_spec).m
    m2 = solve_m(5.0 + 5e-7j, wigner_square_spec).m
    assert max(0.0, 2 * m2.imag - m1.imag) / np.pi <= 1e-6


def test_density_nonnegative_and_mass(squared_curve, anti_curve):
    for curve in (squared_curve, anti_curve):
        assert np.all(curve.rho >= 0.0)
        assert abs(curve.mass - 1.0) <= 1e-3
        assert np.all(np.diff(curve.cdf) >= -1e-15)


def test_density_mass_all_singular_cases(
    shifted_square_spec, threshold_square_spec, complex_half_spec, complex_threshold_spec
):
    for spec in (shifted_square_spec, threshold_square_spec, complex_half_spec, complex_threshold_spec):
        curve = compute_density(spec, compute_edges(spec), 512)
        assert abs(curve.mass - 1.0) <= 1e-3


def test_density_singular_right_edge():
    # -(X-1)^2: the hard edge sits on the right at 0; mass and cdf still work
    spec = validate_spec(1, [[-1.0]], [2.0], -1.0)
    curve = compute_density(spec, compute_edges(spec), 512)
    assert abs(curve.mass - 1.0) <= 1e-3
    assert np.all(np.diff(curve.cdf) >= -1e-15)
    assert fit_edge_exponent(curve, "right") == pytest.approx(-0.5, abs=0.05)
    gamma = quantiles(curve, 100)
    # mirror of (X-1)^2 quantiles
    mirror = compute_density(
        validate_spec(1, [[1.0]], [-2.0], 1.0),
        compute_edges(validate_spec(1, [[1.0]], [-2.0], 1.0)),
        512,
    )
    gamma_mirror = quantiles(mirror, 100)
    assert np.max(np.abs(gamma + gamma_mirror[::-1])) <= 1e-3


def test_density_pushforward_oracle(shifted_square_spec, threshold_square_spec):
    # q = (X - xi)^2 pushes the semicircle forward:
    # rho_q(mu) = [rho_sc(xi - sqrt mu) + rho_sc(xi + sqrt mu)] / (2 sqrt mu)
    def rho_sc(x):
        return np.sqrt(np.maximum(4.0 - x**2, 0.0)) / (2.0 * np.pi)

    for xi, spec in ((1.0, shifted_square_spec), (2.0, threshold_square_spec)):
        curve = compute_density(spec, compute_edges(spec), 512)
        for target in (0.25, 1.0, 2.5):
            idx = int(np.argmin(np.abs(curve.energies - target)))
            mu = curve.energies[idx]
            oracle = (rho_sc(xi - np.sqrt(mu)) + rho_sc(xi + np.sqrt(mu))) / (2.0 * np.sqrt(mu))
            assert curve.rho[idx] == pytest.approx(oracle, abs=1e-5)


def test_density_symmetry_anticommutator(anti_curve):
    assert np.max(np.abs(anti_curve.rho - anti_curve.rho[::-1])) <= 1e-6


def test_quantiles_single_point(squared_curve):
    med = quantiles(squared_curve, 1)
    assert len(med) == 1
    assert squared_curve.cdf_at(med[0]) / squared_curve.mass == pytest.approx(0.5, abs=1e-6)


def test_quantiles_squared_wigner_top(squared_curve):
    gamma = quantiles(squared_curve, 1000)
    assert gamma[-1] == pytest.approx(SQUARED_WIGNER_TOP_QUANTILE, abs=2e-3)
    assert abs(gamma[-1] - 4.0) <= 0.05
    assert gamma[-1] <= 4.0 + squared_curve.grid_step
    assert gamma[0] >= squared_curve.edge_meta.tau_minus - squared_curve.grid_step


def test_quantiles_symmetry(anti_curve):
    gamma = quantiles(anti_curve, 100)
    assert np.max(np.abs(gamma + gamma[::-1])) <= 1e-4


def test_quantiles_mass_deficit(squared_curve):
    from dataclasses import replace

    with pytest.raises(MassDeficitError):
        quantiles(replace(squared_curve, mass=5.0), 10)


def test_fit_exponents_squared_wigner(squared_curve):
    assert fit_edge_exponent(squared_curve, "right") == pytest.approx(0.5, abs=0.05)
    assert fit_edge_exponent(squared_curve, "left") == pytest.approx(-0.5, abs=0.05)


def test_fit_exponent_threshold_quarter(threshold_square_spec):
    curve = compute_density(threshold_square_spec, compute_edges(threshold_square_spec), 512)
    assert fit_edge_exponent(curve, "left") == pytest.approx(-0.25, abs=0.05)
    # the regular right edge of this wide-support curve has too few refined
    # points inside the fit window
    with pytest.raises(InsufficientPointsError):
        fit_edge_exponent(curve, "right")


def test_regular_edge_imaginary_part_scaling(wigner_square_spec, anticommutator_spec):
    # Im m ~ sqrt(kappa + eta) inside the support, ~ eta/sqrt(kappa + eta) outside
    for spec in (wigner_square_spec, anticommutator_spec):
        rep = compute_edges(spec)
        tau = rep.tau_plus
        inside, outside = [], []
        for d_e in (0.0, 1e-4, 1e-2):
            for eta in (1e-6, 1e-4, 1e-2):
                m_in = solve_m(tau - d_e + 1j * eta, spec).m
                inside.append(m_in.imag / np.sqrt(d_e + eta))
                if d_e > 0:
                    m_out = solve_m(tau + d_e + 1j * eta, spec).m
                    outside.append(m_out.imag * np.sqrt(d_e + eta) / eta)
        assert max(inside) / min(inside) <= 4.0
        assert max(outside) / min(outside) <= 4.0


def test_away_from_support_linear_imaginary_part(wigner_square_spec):
    # Im m(E + i eta) / eta is eta-independent (within factor 2) off the support
    for dist in (0.1, 1.0, 10.0):
        E = 4.0 + dist
        ratios = [solve_m(E + 1j * eta, wigner_square_spec).m.imag / eta for eta in (1e-4, 1e-6)]
        assert max(ratios) / min(ratios) <= 2.0


def test_tau_star_matches_support(squared_curve, anti_curve):
    for curve in (squared_curve, anti_curve):
        occupied = curve.energies[curve.rho > 1e-6]
        assert np.max(np.abs(occupied)) == pytest.approx(curve.edge_meta.tau_star, abs=2 * curve.grid_step)


def test_density_grid_validation(wigner_square_spec):
    with pytest.raises(ValueError):
        compute_density(wigner_square_spec, compute_edges(wigner_square_spec), 32)


def test_write_density_csv(tmp_path, squared_curve):
    path = tmp_path / "density.csv"
    write_density_csv(squared_curve, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "E,rho"
    assert len(lines) == len(squared_curve.energies) + 1
    first_e, first_rho = lines[1].split(",")
    assert float(first_e) == squared_curve.energies[0]
    assert float(first_rho) == squared_curve.rho[0]
