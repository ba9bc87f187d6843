import numpy as np
import pytest

from switchback.core import DensityMatrix, density_from_bloch, trace_distance
from switchback.channels import (
    BadWeights,
    ComplexResidue,
    DimensionMismatch,
    IncompleteKraus,
    KrausChannel,
    NegativeTime,
    UnsupportedDimension,
    apply,
    apply_many,
    apply_raw,
    choi_from_transfer,
    choi_matrix,
    completeness_defect,
    compose_parallel,
    compose_series,
    eternal_channel,
    eternal_contractions,
    identity_channel,
    is_cp_choi,
    is_cptp,
    min_choi_eigenvalue,
    mix,
    series_doubled_family,
    transfer_matrix,
    xi2,
)
from switchback.core import eigenvalues_hermitian


def random_states(rng, n, dim=2):
    a = rng.normal(size=(n, dim, dim)) + 1j * rng.normal(size=(n, dim, dim))
    m = a @ a.conj().transpose(0, 2, 1)
    return m / np.einsum("nii->n", m).real[:, None, None]


Z_UP = DensityMatrix(np.diag([1.0, 0.0]).astype(complex))
Z_DOWN = DensityMatrix(np.diag([0.0, 1.0]).astype(complex))


def test_xi2_matches_quadrature():
    # independent oracle: midpoint quadrature of 1 - tanh(s)
    for t in (0.1, 0.7, 1.0, 2.5, 5.0):
        s = np.linspace(0.0, t, 200001)
        mid = 0.5 * (s[1:] + s[:-1])
        quad = float(np.sum(1.0 - np.tanh(mid)) * (s[1] - s[0]))
        assert xi2(t) == pytest.approx(quad, abs=1e-10)


def test_eternal_channel_at_zero_is_identity():
    ch = eternal_channel(0.0)
    np.testing.assert_allclose(ch.kraus[2], np.eye(2), atol=1e-15)
    for idx in (0, 1, 3):
        np.testing.assert_allclose(ch.kraus[idx], 0.0, atol=1e-15)
    rho = density_from_bloch((0.3, -0.2, 0.4))
    np.testing.assert_allclose(apply(ch, rho).matrix, rho.matrix, atol=1e-14)


def test_eternal_channel_completeness_random_times():
    rng = np.random.default_rng(42)
    worst = max(
        completeness_defect(eternal_channel(t))
        for t in rng.uniform(0.0, 10.0, 100)
    )
    assert worst < 1e-13


def test_eternal_channel_negative_time():
    with pytest.raises(NegativeTime):
        eternal_channel(-0.1)


def test_eternal_population_value():
    out = apply(eternal_channel(0.5), Z_UP)
    assert out.matrix[0, 0].real == pytest.approx((1 + np.exp(-1.0)) / 2, abs=1e-14)


def test_eternal_long_time_limit():
    out = apply(eternal_channel(50.0), Z_UP)
    np.testing.assert_allclose(out.matrix, 0.5 * np.eye(2), atol=1e-12)


def test_eternal_coherence_decay():
    plus = density_from_bloch((1.0, 0.0, 0.0))
    out = apply(eternal_channel(1.0), plus)
    expected = 0.5 * np.exp(-1.0) * np.cosh(1.0)  # 0.28383382...
    assert out.matrix[0, 1].real == pytest.approx(expected, abs=1e-14)
    assert out.matrix[0, 1].real == pytest.approx(0.2838338, abs=1e-7)


def test_eternal_z_distance_contracts_monotonically():
    grid = np.linspace(0.0, 5.0, 101)
    dist = [
        trace_distance(apply(eternal_channel(t), Z_UP), apply(eternal_channel(t), Z_DOWN))
        for t in grid
    ]
    np.testing.assert_allclose(dist, np.exp(-2.0 * grid), atol=1e-12)
    assert all(b < a for a, b in zip(dist, dist[1:]))


def test_apply_dimension_mismatch():
    four_dim = compose_parallel(identity_channel(), identity_channel())
    with pytest.raises(DimensionMismatch):
        apply(four_dim, Z_UP)


def test_apply_raw_trace_scale():
    ch = eternal_channel(0.8)
    scaled = KrausChannel(ch.kraus * np.sqrt(0.5), trace_scale=0.5)
    raw = apply_raw(scaled, Z_UP.matrix)
    assert raw.trace().real == pytest.approx(0.5, abs=1e-12)
    np.testing.assert_allclose(
        apply(scaled, Z_UP).matrix, apply(ch, Z_UP).matrix, atol=1e-12
    )


def test_compose_series_identity_neutral():
    ch = eternal_channel(0.9)
    composed = compose_series(identity_channel(), ch)
    rho = density_from_bloch((0.1, 0.5, -0.3))
    np.testing.assert_allclose(
        apply(composed, rho).matrix, apply(ch, rho).matrix, atol=1e-14
    )


def test_compose_series_population_squares_z_factor():
    for t in (0.2, 1.0, 2.0):
        doubled = series_doubled_family(t)
        out = apply(doubled, Z_UP)
        assert out.matrix[0, 0].real == pytest.approx(
            (1 + np.exp(-4.0 * t)) / 2, abs=1e-13
        )


def test_compose_series_associative():
    rng = np.random.default_rng(1)
    a, b, c = eternal_channel(0.3), eternal_channel(0.7), eternal_channel(1.4)
    left = compose_series(compose_series(a, b), c)
    right = compose_series(a, compose_series(b, c))
    for rho in random_states(rng, 20):
        np.testing.assert_allclose(
            apply_raw(left, rho), apply_raw(right, rho), atol=1e-12
        )


def test_transfer_of_composition_is_product():
    a, b = eternal_channel(0.4), eternal_channel(1.1)
    fa = transfer_matrix(a).F
    fb = transfer_matrix(b).F
    fab = transfer_matrix(compose_series(a, b)).F
    np.testing.assert_allclose(fab, fb @ fa, atol=1e-12)


def test_compose_parallel_identity():
    channel = compose_parallel(identity_channel(), identity_channel())
    assert channel.dim == 4
    rng = np.random.default_rng(2)
    for rho in random_states(rng, 5, dim=4):
        np.testing.assert_allclose(apply_raw(channel, rho), rho, atol=1e-14)


def test_compose_parallel_factorizes_on_products():
    rng = np.random.default_rng(3)
    a, b = eternal_channel(0.6), eternal_channel(1.3)
    par = compose_parallel(a, b)
    for r1, r2 in zip(random_states(rng, 10), random_states(rng, 10)):
        joint = np.kron(r1, r2)
        expected = np.kron(apply_raw(a, r1), apply_raw(b, r2))
        np.testing.assert_allclose(apply_raw(par, joint), expected, atol=1e-12)


def test_compose_parallel_dimension_cap():
    four_dim = compose_parallel(identity_channel(), identity_channel())
    with pytest.raises(UnsupportedDimension):
        compose_parallel(four_dim, identity_channel())


def test_parallel_z_pair_distance_monotone():
    pair_a = np.kron(Z_UP.matrix, Z_UP.matrix)[np.newaxis]
    pair_b = np.kron(Z_DOWN.matrix, Z_DOWN.matrix)[np.newaxis]
    from switchback.core import trace_distance_many

    last = np.inf
    for t in np.linspace(0.0, 4.0, 41):
        ch = compose_parallel(eternal_channel(t), eternal_channel(t))
        d = trace_distance_many(apply_many(ch, pair_a), apply_many(ch, pair_b))[0]
        assert d <= last + 1e-12
        last = d


def test_mix_single_channel():
    ch = eternal_channel(0.5)
    mixed = mix([(1.0, ch)])
    rho = density_from_bloch((0.2, 0.1, 0.6))
    np.testing.assert_allclose(apply(mixed, rho).matrix, apply(ch, rho).matrix,
                               atol=1e-14)


def test_mix_idempotent_halves():
    doubled = series_doubled_family(0.8)
    mixed = mix([(0.5, doubled), (0.5, doubled)])
    rho = density_from_bloch((0.0, 0.4, -0.5))
    np.testing.assert_allclose(
        apply(mixed, rho).matrix, apply(doubled, rho).matrix, atol=1e-13
    )


@pytest.mark.parametrize("p", [0.0, 0.3, 0.7, 1.0])
def test_mix_of_orderings_equals_composition(p):
    rng = np.random.default_rng(17)
    ch = eternal_channel(0.9)
    forward = compose_series(ch, ch)
    backward = compose_series(ch, ch)
    mixed = mix([(p, forward), (1.0 - p, backward)])
    for rho in random_states(rng, 50):
        np.testing.assert_allclose(
            apply_raw(mixed, rho), apply_raw(forward, rho), atol=1e-12
        )


def test_mix_bad_weights():
    ch = eternal_channel(0.5)
    with pytest.raises(BadWeights):
        mix([])
    with pytest.raises(BadWeights):
        mix([(0.7, ch), (0.2, ch)])
    with pytest.raises(BadWeights):
        mix([(-0.1, ch), (1.1, ch)])


def test_incomplete_kraus_rejected():
    with pytest.raises(IncompleteKraus):
        KrausChannel(np.stack([0.5 * np.eye(2, dtype=complex)]))


def test_transfer_matrix_identity():
    np.testing.assert_allclose(transfer_matrix(identity_channel()).F, np.eye(4),
                               atol=1e-14)


def test_transfer_matrix_eternal_diagonal():
    for t in (0.0, 0.3, 1.0, 2.7):
        f = transfer_matrix(eternal_channel(t)).F
        lx, ly, lz = eternal_contractions(t)
        np.testing.assert_allclose(f, np.diag([1.0, lx, ly, lz]), atol=1e-13)
        np.testing.assert_allclose(f[0], [1.0, 0.0, 0.0, 0.0], atol=1e-14)


def test_transfer_matrix_rejects_two_qubit_channels():
    with pytest.raises(UnsupportedDimension):
        transfer_matrix(compose_parallel(identity_channel(), identity_channel()))


def test_choi_identity_is_entangled_projector():
    choi = choi_matrix(identity_channel())
    eigs = eigenvalues_hermitian(choi)
    np.testing.assert_allclose(eigs, [1.0, 0.0, 0.0, 0.0], atol=1e-13)
    assert choi.trace().real == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("t", [0.1, 1.0, 3.0])
def test_eternal_channel_is_cptp(t):
    assert is_cptp(eternal_channel(t))


def test_choi_trace_equals_trace_scale():
    ch = eternal_channel(0.7)
    scaled = KrausChannel(ch.kraus * np.sqrt(0.25), trace_scale=0.25)
    assert choi_matrix(scaled).trace().real == pytest.approx(0.25, abs=1e-13)


def test_expanding_bloch_map_is_not_cp():
    choi = choi_from_transfer(np.diag([1.0, 1.2, 1.0, 1.0]))
    assert not is_cp_choi(choi)
    assert min_choi_eigenvalue(choi) == pytest.approx(-0.05, abs=1e-12)


def test_choi_from_transfer_matches_kraus_choi():
    for t in (0.2, 0.9, 2.2):
        ch = eternal_channel(t)
        np.testing.assert_allclose(
            choi_from_transfer(transfer_matrix(ch).F), choi_matrix(ch), atol=1e-12
        )
