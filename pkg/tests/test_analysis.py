import numpy as np
import pytest

from switchback.core import DensityMatrix, density_from_bloch
from switchback.channels import (
    KrausChannel,
    eternal_channel,
    series_doubled_family,
    transfer_matrix,
)
from switchback.switchop import T_STAR, switched_family
from switchback.analysis import (
    BadState,
    CharacteristicTimeQuery,
    DegenerateInitialPair,
    NoSolution,
    PoleAtCharacteristicTime,
    axis_growth_flags,
    backflow_scan,
    central_derivative,
    characteristic_time,
    chi0_from_pair,
    closed_form_switched_rates,
    distance_series,
    divisibility_verdict,
    extract_generator,
    generator_samples,
    infinitesimal_determinant,
    infinitesimal_map_output,
    series_rate_check,
)

Z_UP = DensityMatrix(np.diag([1.0, 0.0]).astype(complex))
Z_DOWN = DensityMatrix(np.diag([0.0, 1.0]).astype(complex))


def constant_rate_family(g1, g2, g3):
    """Pauli-channel family with constant rates, via the exact contractions."""

    def factors(t):
        return (
            np.exp(-2.0 * (g2 + g3) * t),
            np.exp(-2.0 * (g1 + g3) * t),
            np.exp(-2.0 * (g1 + g2) * t),
        )

    def family(t):
        lx, ly, lz = factors(t)
        p0 = 0.25 * (1 + lx + ly + lz)
        p1 = 0.25 * (1 + lx - ly - lz)
        p2 = 0.25 * (1 - lx + ly - lz)
        p3 = 0.25 * (1 - lx - ly + lz)
        paulis = np.stack([
            np.eye(2, dtype=complex),
            np.array([[0, 1], [1, 0]], dtype=complex),
            np.array([[0, -1j], [1j, 0]], dtype=complex),
            np.array([[1, 0], [0, -1]], dtype=complex),
        ])
        weights = np.sqrt(np.clip([p0, p1, p2, p3], 0.0, None))
        return KrausChannel(weights[:, None, None] * paulis)

    return family


@pytest.mark.parametrize("t", [0.3, 1.0, 2.0])
def test_extract_generator_recovers_base_rates(t):
    s = extract_generator(eternal_channel, t)
    assert not s.pole
    assert s.gamma1 == pytest.approx(0.5, abs=1e-6)
    assert s.gamma2 == pytest.approx(0.5, abs=1e-6)
    assert s.gamma3 == pytest.approx(-np.tanh(t) / 2, abs=1e-6)


def test_extract_generator_preconditions():
    with pytest.raises(ValueError):
        extract_generator(eternal_channel, 0.0)
    with pytest.raises(ValueError):
        extract_generator(eternal_channel, 1.0, h=-1e-5)


def test_extract_generator_matches_switched_closed_form():
    for t in (0.3, 1.0, 2.5):
        numeric = extract_generator(switched_family, t)
        exact = closed_form_switched_rates(t)
        assert max(
            abs(a - b) for a, b in zip(numeric.rates(), exact.rates())
        ) < 1e-6


def test_extract_generator_pole_at_crossing():
    s = extract_generator(switched_family, T_STAR)
    assert s.pole
    assert np.isnan(s.gamma1)


def test_central_difference_matches_analytic_transfer_derivative():
    h = 1e-5
    for t in (0.4, 1.3, 3.0):
        fp = transfer_matrix(eternal_channel(t + h)).F
        fm = transfer_matrix(eternal_channel(t - h)).F
        numeric = (fp - fm) / (2 * h)
        xy = np.exp(-(t - np.log(np.cosh(t))))
        analytic = np.diag([
            0.0,
            -(1 - np.tanh(t)) * xy,
            -(1 - np.tanh(t)) * xy,
            -2.0 * np.exp(-2.0 * t),
        ])
        rel = np.abs(numeric - analytic).max() / np.abs(analytic).max()
        assert rel < 1e-8


def test_closed_form_rates_pole_guard():
    with pytest.raises(PoleAtCharacteristicTime):
        closed_form_switched_rates(T_STAR + 5e-10)


def test_closed_form_rates_signs():
    before = closed_form_switched_rates(0.3)
    assert before.gamma1 == before.gamma2 > 0.0
    after = closed_form_switched_rates(1.0)
    assert after.gamma1 == after.gamma2 < 0.0


def test_closed_form_rates_regular_at_zero():
    at_zero = closed_form_switched_rates(0.0)
    assert np.isfinite(at_zero.rates()).all()
    near_zero = extract_generator(switched_family, 1e-5, h=1e-5)
    assert max(
        abs(a - b) for a, b in zip(at_zero.rates(), near_zero.rates())
    ) < 1e-3


def test_generator_samples_rate_cap_marks_pole_window():
    grid = np.arange(0.6, 0.76, 0.01)
    samples = generator_samples(switched_family, grid, rate_cap=5.0)
    for s in samples:
        if abs(s.t - T_STAR) < 0.04:
            assert s.pole
    assert any(not s.pole for s in samples)


def test_divisibility_eternal():
    grid = np.arange(0.05, 5.01, 0.05)
    v = divisibility_verdict(generator_samples(eternal_channel, grid))
    assert v.cp_divisible_intervals == []
    assert v.p_divisible_intervals == [(pytest.approx(0.05), pytest.approx(grid[-1]))]
    assert v.violated_pairs == []


def test_divisibility_switched_breaks_after_crossing():
    grid = np.arange(0.05, 5.01, 0.05)
    samples = generator_samples(switched_family, grid)
    v = divisibility_verdict(samples)
    assert v.cp_divisible_intervals == []
    assert len(v.p_divisible_intervals) == 1
    lo, hi = v.p_divisible_intervals[0]
    assert lo == pytest.approx(0.05)
    assert hi < T_STAR
    assert all(t > T_STAR for t, _ in v.violated_pairs)
    # z-growth pair is the violated one
    assert all(pairs == ((1, 2),) for _, pairs in v.violated_pairs)


def test_divisibility_constant_rates_everywhere():
    family = constant_rate_family(1.0, 1.0, 1.0)
    grid = np.arange(0.05, 2.01, 0.05)
    v = divisibility_verdict(generator_samples(family, grid))
    assert v.cp_divisible_intervals == [(pytest.approx(0.05), pytest.approx(grid[-1]))]
    assert v.p_divisible_intervals == v.cp_divisible_intervals


def test_cp_implies_p_on_all_families():
    grid = np.arange(0.1, 4.01, 0.1)
    for family in (eternal_channel, switched_family, series_doubled_family):
        for s in generator_samples(family, grid):
            if s.pole:
                continue
            cp_ok = min(s.rates()) >= -1e-9
            p_ok = (
                min(
                    s.gamma1 + s.gamma2,
                    s.gamma1 + s.gamma3,
                    s.gamma2 + s.gamma3,
                )
                >= -1e-9
            )
            assert p_ok or not cp_ok


@pytest.mark.parametrize("t,expected_g3", [(0.5, -np.tanh(0.5)), (3.0, -np.tanh(3.0))])
def test_series_rate_doubling(t, expected_g3):
    check = series_rate_check(t)
    assert check.max_error < 1e-6
    assert check.rates[0] == pytest.approx(1.0, abs=1e-6)
    assert check.rates[2] == pytest.approx(expected_g3, abs=1e-6)
    assert check.min_pair_sum >= -1e-9


def test_series_rates_approach_simple_limit():
    check = series_rate_check(0.01)
    assert check.rates == pytest.approx((1.0, 1.0, -0.01), abs=1e-2)
    late = series_rate_check(3.0)
    assert late.min_pair_sum == pytest.approx(1.0 - np.tanh(3.0), abs=1e-6)
    assert late.min_pair_sum > 0.0


def test_infinitesimal_zero_step_is_projector():
    phi = (0.6, 0.8j)
    out = infinitesimal_map_output((0.5, 0.5, -0.2), 0.0, phi)
    expected = np.outer([0.6, 0.8j], np.conj([0.6, 0.8j]))
    np.testing.assert_allclose(out.matrix, expected, atol=1e-15)
    assert out.determinant == pytest.approx(0.0, abs=1e-15)


def test_infinitesimal_positive_when_pair_sums_positive():
    rng = np.random.default_rng(6)
    g = (0.5, 0.5, -0.5 * np.tanh(1.0))
    for _ in range(10_000):
        raw = rng.normal(size=4)
        phi = (raw[0] + 1j * raw[1], raw[2] + 1j * raw[3])
        norm = np.sqrt(abs(phi[0]) ** 2 + abs(phi[1]) ** 2)
        phi = (phi[0] / norm, phi[1] / norm)
        out = infinitesimal_map_output(g, 1e-4, phi)
        assert out.determinant >= -1e-15


def test_infinitesimal_negative_on_z_violation():
    out = infinitesimal_map_output((-0.6, -0.6, 0.1), 1e-3, (1.0, 0.0))
    assert out.determinant < 0.0


def test_infinitesimal_guards():
    with pytest.raises(BadState):
        infinitesimal_map_output((0.5, 0.5, 0.0), 1e-4, (1.0, 1.0))
    with pytest.raises(ValueError):
        infinitesimal_map_output((10.0, 0.5, 0.0), 1e-2, (1.0, 0.0))


def test_determinant_formula_exact_for_symmetric_rates():
    rng = np.random.default_rng(31)
    for _ in range(1000):
        g12 = rng.uniform(-1, 1)
        g3 = rng.uniform(-1, 1)
        eps = rng.uniform(0, 0.009) / max(abs(g12), abs(g3), 1e-9)
        raw = rng.normal(size=4)
        phi = raw[:2] @ [1, 1j], raw[2:] @ [1, 1j]
        norm = np.sqrt(abs(phi[0]) ** 2 + abs(phi[1]) ** 2)
        phi = (phi[0] / norm, phi[1] / norm)
        out = infinitesimal_map_output((g12, g12, g3), eps, phi)
        exact = np.linalg.det(out.matrix).real
        assert out.determinant == pytest.approx(exact, abs=1e-14)


def test_determinant_formula_near_exact_for_asymmetric_rates():
    # residual is O(eps^2 (g1 - g2) g3); check it stays within that bound
    rng = np.random.default_rng(32)
    for _ in range(500):
        g = rng.uniform(-1, 1, 3)
        eps = rng.uniform(0, 0.009) / np.abs(g).max()
        raw = rng.normal(size=4)
        phi = raw[:2] @ [1, 1j], raw[2:] @ [1, 1j]
        norm = np.sqrt(abs(phi[0]) ** 2 + abs(phi[1]) ** 2)
        phi = (phi[0] / norm, phi[1] / norm)
        out = infinitesimal_map_output(tuple(g), eps, phi)
        exact = np.linalg.det(out.matrix).real
        bound = 4.0 * eps ** 2 * abs(g[0] - g[1]) * abs(g[2]) * 0.5 + 1e-14
        assert abs(out.determinant - exact) <= bound


def test_axis_growth_flags():
    switched_late = closed_form_switched_rates(1.0)
    assert axis_growth_flags(switched_late.rates()) == (False, False, True)
    assert axis_growth_flags((0.5, 0.5, -0.5 * np.tanh(2.0))) == (
        False,
        False,
        False,
    )
    assert axis_growth_flags((0.0, 0.0, 0.0)) == (False, False, False)


def test_backflow_scan_monotone_family():
    grid = np.arange(0.0, 5.0001, 0.01)
    report = backflow_scan(eternal_channel, Z_UP, Z_DOWN, grid)
    assert report.measure < 1e-9
    assert report.revival_intervals == []
    assert report.characteristic_time is None
    np.testing.assert_allclose(report.distance, np.exp(-2.0 * grid), atol=1e-12)


def test_backflow_scan_switched_revival():
    grid = np.arange(0.0, 5.0001, 0.001)
    report = backflow_scan(switched_family, Z_UP, Z_DOWN, grid)
    assert report.characteristic_time == pytest.approx(T_STAR, abs=1e-3)
    assert report.measure > 1e-3
    assert len(report.revival_intervals) == 1
    # revival carries the distance from ~0 up to the 1/7 plateau
    assert report.distance[-1] == pytest.approx(1.0 / 7.0, abs=1e-4)


def test_backflow_scan_grid_validation():
    with pytest.raises(ValueError):
        backflow_scan(eternal_channel, Z_UP, Z_DOWN, np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        backflow_scan(eternal_channel, Z_UP, Z_DOWN, np.array([0.0, 1.0, 0.5]))


def test_revival_onset_matches_first_pair_sum_violation():
    grid = np.arange(0.0, 2.0001, 0.01)
    report = backflow_scan(switched_family, Z_UP, Z_DOWN, grid)
    rate_grid = grid[1:]
    violations = [
        t
        for t in rate_grid
        if abs(t - T_STAR) > 1e-9
        and min(
            closed_form_switched_rates(float(t)).gamma1
            + closed_form_switched_rates(float(t)).gamma2,
            closed_form_switched_rates(float(t)).gamma2
            + closed_form_switched_rates(float(t)).gamma3,
        )
        < -1e-9
    ]
    assert abs(report.characteristic_time - violations[0]) <= 2 * 0.01


def test_monotone_oracle_random_pairs():
    rng = np.random.default_rng(12)
    vecs = rng.uniform(-1, 1, size=(400, 3))
    vecs = vecs[(vecs ** 2).sum(axis=1) <= 1.0][:100]
    states = np.stack([density_from_bloch(tuple(v)).matrix for v in vecs])
    pairs_a, pairs_b = states[:50], states[50:]
    grid = np.arange(0.0, 3.0001, 0.01)
    for family in (eternal_channel, series_doubled_family):
        series = distance_series(family, pairs_a, pairs_b, grid)
        deriv = central_derivative(grid, series)
        assert deriv.max() <= 1e-9


def test_chi0_from_pair():
    assert chi0_from_pair(Z_UP, Z_DOWN) == 0.0
    tilted_a = density_from_bloch((0.6, 0.0, 0.4))
    tilted_b = density_from_bloch((0.0, 0.0, -0.4))
    assert chi0_from_pair(tilted_a, tilted_b) == pytest.approx(0.75, abs=1e-14)
    with pytest.raises(DegenerateInitialPair):
        chi0_from_pair(
            density_from_bloch((0.5, 0.0, 0.0)), density_from_bloch((-0.5, 0.0, 0.0))
        )


def test_characteristic_time_z_pair():
    t_star = characteristic_time(0.0)
    assert t_star == pytest.approx(T_STAR, abs=1e-12)
    assert t_star == pytest.approx(0.5 * np.log(1.0 + 2.0 * np.sqrt(2.0)), abs=1e-12)


def test_characteristic_time_query_object():
    t_star = characteristic_time(CharacteristicTimeQuery(0.0))
    assert t_star == pytest.approx(T_STAR, abs=1e-12)
    with pytest.raises(ValueError):
        CharacteristicTimeQuery(-1.0)


def test_characteristic_time_general_chi0():
    from switchback.switchop import switch_coefficients

    for chi0 in (0.2, 0.5, 0.9):
        root = characteristic_time(chi0)
        cf = switch_coefficients(root)
        residual = np.exp(root) * (cf.A - cf.B) / cf.A - chi0
        assert abs(residual) < 1e-12
        assert root < T_STAR  # the +chi0 crossing comes first


def test_characteristic_time_no_solution():
    with pytest.raises(NoSolution):
        characteristic_time(1e12)
