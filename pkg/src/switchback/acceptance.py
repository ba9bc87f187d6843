"""Self-test suite: every headline quantitative claim, each at a pinned
tolerance. ``run_all`` prints one pass/fail line per criterion and is exposed
as ``switchback selftest``; the pytest acceptance module drives the same
functions.

Random draws use a seeded generator (default 42) with Bloch vectors sampled
uniformly in the ball by rejection.
"""

from math import sqrt
from typing import Callable, NamedTuple

import numpy as np

from .core import DensityMatrix, density_from_bloch, trace_distance_many
from .channels import (
    apply_many,
    completeness_defect,
    compose_parallel,
    compose_series,
    eternal_channel,
    transfer_matrix,
)
from .switchop import (
    PLUS_VEC,
    T_STAR,
    switch_coefficients,
    switch_kraus,
    switched_family,
)
from .analysis import (
    RATE_CAP,
    central_derivative,
    characteristic_time,
    closed_form_switched_rates,
    distance_series,
    divisibility_verdict,
    generator_samples,
    revival_intervals_and_measure,
    series_rate_check,
)


class CriterionResult(NamedTuple):
    cid: int
    name: str
    passed: bool
    detail: str


def random_bloch_ball(rng: np.random.Generator, n: int) -> np.ndarray:
    """n points uniform in the closed unit ball, by rejection from the cube."""
    out = np.empty((n, 3))
    have = 0
    while have < n:
        draw = rng.uniform(-1.0, 1.0, size=(2 * (n - have) + 8, 3))
        keep = draw[(draw ** 2).sum(axis=1) <= 1.0]
        take = min(keep.shape[0], n - have)
        out[have : have + take] = keep[:take]
        have += take
    return out


def states_from_bloch(vectors: np.ndarray) -> np.ndarray:
    """Stacked density matrices (n, 2, 2) from Bloch vectors (n, 3)."""
    x, y, z = vectors[:, 0], vectors[:, 1], vectors[:, 2]
    m = np.empty((vectors.shape[0], 2, 2), dtype=complex)
    m[:, 0, 0] = 0.5 * (1.0 + z)
    m[:, 1, 1] = 0.5 * (1.0 - z)
    m[:, 0, 1] = 0.5 * (x - 1j * y)
    m[:, 1, 0] = 0.5 * (x + 1j * y)
    return m


def random_states(rng: np.random.Generator, n: int) -> np.ndarray:
    return states_from_bloch(random_bloch_ball(rng, n))


Z_PAIR = (
    density_from_bloch((0.0, 0.0, 1.0)),
    density_from_bloch((0.0, 0.0, -1.0)),
)


def criterion_1(seed: int) -> tuple[bool, str]:
    """Kraus completeness of the dephasing family at 100 random times."""
    rng = np.random.default_rng(seed)
    worst = max(
        completeness_defect(eternal_channel(t))
        for t in rng.uniform(0.0, 10.0, size=100)
    )
    return worst < 1e-12, f"max completeness defect {worst:.3e} (tol 1e-12)"


def criterion_2(seed: int) -> tuple[bool, str]:
    """Brute-force '+' branch equals the closed form: coefficients, branch
    probability, and full state action at 200 times x 50 random states."""
    rng = np.random.default_rng(seed)
    states = random_states(rng, 50)
    omega = states_from_bloch(np.array([[1.0, 0.0, 0.0]]))[0]
    worst = 0.0
    for t in np.linspace(0.0, 5.0, 200):
        cf = switch_coefficients(float(t))
        branch = switched_family(float(t))
        f = transfer_matrix(branch).F
        worst = max(
            worst,
            abs(f[1, 1] - cf.A),
            abs((f[1, 1] - f[3, 3]) - cf.B),
            abs(branch.trace_scale - cf.n),
        )
        # independent route: joint evolution then coherent projection
        ch = eternal_channel(float(t))
        w = switch_kraus(ch, ch).kraus
        joint_in = np.einsum("nab,cd->nacbd", states, omega).reshape(-1, 4, 4)
        joint = np.einsum("kab,nbc,kdc->nad", w, joint_in, w.conj(), optimize=True)
        block = np.einsum(
            "k,nikjl,l->nij", PLUS_VEC.conj(), joint.reshape(-1, 2, 2, 2, 2), PLUS_VEC
        )
        probs = np.einsum("nii->n", block).real
        worst = max(worst, np.abs(probs - cf.n).max())
        expected = np.empty_like(states)
        expected[:, 0, 0] = cf.A * states[:, 0, 0] + cf.B * states[:, 1, 1]
        expected[:, 1, 1] = cf.B * states[:, 0, 0] + cf.A * states[:, 1, 1]
        expected[:, 0, 1] = cf.A * states[:, 0, 1]
        expected[:, 1, 0] = cf.A * states[:, 1, 0]
        worst = max(worst, np.abs(block / probs[:, None, None] - expected).max())
    return worst < 1e-12, f"max brute-force vs closed-form error {worst:.3e} (tol 1e-12)"


def criterion_3(seed: int) -> tuple[bool, str]:
    """A(t) + B(t) = 1 on the full default grid."""
    grid = np.arange(0.0, 5.0 + 5e-4, 1e-3)
    worst = max(abs(switch_coefficients(float(t)).A
                    + switch_coefficients(float(t)).B - 1.0) for t in grid)
    return worst < 1e-12, f"max |A + B - 1| = {worst:.3e} (tol 1e-12)"


def _pair_measures(family, states_a, states_b, grid) -> np.ndarray:
    series = distance_series(family, states_a, states_b, grid)
    deriv = central_derivative(grid, series)
    return np.array(
        [revival_intervals_and_measure(grid, d)[1] for d in deriv]
    )


def criterion_4(seed: int) -> tuple[bool, str]:
    """No revival for the dephasing family; z-pair distance is e^{-2t}."""
    rng = np.random.default_rng(seed)
    grid = np.arange(0.0, 5.0 + 5e-4, 1e-3)
    a, b = Z_PAIR
    series = distance_series(
        eternal_channel, a.matrix[None], b.matrix[None], grid
    )[0]
    z_err = np.abs(series - np.exp(-2.0 * grid)).max()
    deriv = central_derivative(grid, series)
    _, z_measure = revival_intervals_and_measure(grid, deriv)
    pairs_a = random_states(rng, 1000)
    pairs_b = random_states(rng, 1000)
    measures = _pair_measures(eternal_channel, pairs_a, pairs_b, grid)
    ok = z_measure < 1e-9 and measures.max() < 1e-9 and z_err < 1e-12
    return ok, (
        f"z-pair measure {z_measure:.2e}, max random-pair measure "
        f"{measures.max():.2e} (tol 1e-9), |D - e^(-2t)| {z_err:.3e} (tol 1e-12)"
    )


def criterion_5(seed: int) -> tuple[bool, str]:
    """Switched family: revival onset at (1/2) ln(1 + 2 sqrt 2), distance dip
    to zero there, asymptote 1/7."""
    from .analysis import backflow_scan

    grid = np.arange(0.0, 5.0 + 5e-4, 1e-3)
    a, b = Z_PAIR
    report = backflow_scan(switched_family, a, b, grid)
    t_scan = report.characteristic_time
    t_bis = characteristic_time(0.0)
    scan_ok = t_scan is not None and abs(t_scan - T_STAR) < 1e-3
    bis_ok = abs(t_bis - T_STAR) < 1e-12
    d_star = distance_series(
        switched_family, a.matrix[None], b.matrix[None], np.array([t_bis])
    )[0, 0]
    d_end = report.distance[-1]
    dip_ok = d_star < 1e-9
    asym_ok = abs(d_end - 1.0 / 7.0) < 1e-4
    ok = scan_ok and bis_ok and dip_ok and asym_ok
    return ok, (
        f"scan onset {t_scan}, bisection {t_bis!r} vs {T_STAR!r}, "
        f"D(t*) = {d_star:.2e} (tol 1e-9), |D(5) - 1/7| = {abs(d_end - 1/7):.2e} "
        f"(tol 1e-4)"
    )


RATE_GRID = np.arange(0.05, 5.0 + 0.025, 0.05)


def criterion_6(seed: int) -> tuple[bool, str]:
    """Generator recovery: analytic rates for the dephasing family; exact
    coefficient-derivative rates for the switched family away from the pole,
    pole flags within 0.05 of it."""
    eternal_samples = generator_samples(eternal_channel, RATE_GRID)
    worst_eternal = max(
        max(
            abs(s.gamma1 - 0.5),
            abs(s.gamma2 - 0.5),
            abs(s.gamma3 + np.tanh(s.t) / 2.0),
        )
        for s in eternal_samples
    )
    switched_samples = generator_samples(switched_family, RATE_GRID)
    worst_switched = 0.0
    flags_ok = True
    for s in switched_samples:
        near_pole = abs(s.t - T_STAR) <= 0.05
        if near_pole:
            flags_ok = flags_ok and s.pole
            continue
        if s.pole:
            flags_ok = False
            continue
        ref = closed_form_switched_rates(s.t)
        worst_switched = max(
            worst_switched,
            max(abs(x - y) for x, y in zip(s.rates(), ref.rates())),
        )
    ok = worst_eternal < 1e-6 and worst_switched < 1e-6 and flags_ok
    return ok, (
        f"dephasing rate error {worst_eternal:.3e}, switched rate error "
        f"{worst_switched:.3e} (tol 1e-6), pole flags "
        f"{'consistent' if flags_ok else 'WRONG'}"
    )


def criterion_7(seed: int) -> tuple[bool, str]:
    """Divisibility verdicts for the three single-qubit scenarios."""
    from .channels import series_doubled_family

    dt = float(RATE_GRID[1] - RATE_GRID[0])
    t_end = float(RATE_GRID[-1])

    eternal_v = divisibility_verdict(generator_samples(eternal_channel, RATE_GRID))
    eternal_ok = (
        not eternal_v.cp_divisible_intervals
        and eternal_v.p_divisible_intervals
        == [(float(RATE_GRID[0]), t_end)]
    )

    switched_samples = generator_samples(switched_family, RATE_GRID)
    switched_v = divisibility_verdict(switched_samples)
    valid = [s for s in switched_samples if not s.pole]
    violated = [
        s.t for s in valid
        if min(s.gamma1 + s.gamma2, s.gamma1 + s.gamma3, s.gamma2 + s.gamma3) < -1e-9
    ]
    after = [s.t for s in valid if s.t > T_STAR]
    before_ok = all(t > T_STAR for t in violated)
    after_ok = sorted(violated) == sorted(after)
    first_ok = violated and abs(min(violated) - T_STAR) <= 2 * dt
    switched_ok = (
        not switched_v.cp_divisible_intervals
        and before_ok and after_ok and bool(first_ok)
    )

    # rate recovery for the composed family is cancellation-limited past t ~ 3
    series_checks = [series_rate_check(float(t)) for t in RATE_GRID if t <= 3.0]
    series_rate_ok = max(c.max_error for c in series_checks) < 1e-6
    series_v = divisibility_verdict(
        generator_samples(series_doubled_family, RATE_GRID)
    )
    series_ok = (
        series_rate_ok
        and not series_v.cp_divisible_intervals
        and series_v.p_divisible_intervals == [(float(RATE_GRID[0]), t_end)]
    )
    ok = eternal_ok and switched_ok and series_ok
    return ok, (
        f"dephasing CP/P {'ok' if eternal_ok else 'WRONG'}; switched breakdown "
        f"after t* {'ok' if switched_ok else 'WRONG'} (first violation at "
        f"{min(violated) if violated else None}); doubled-rate family "
        f"{'ok' if series_ok else 'WRONG'}"
    )


def criterion_8(seed: int) -> tuple[bool, str]:
    """Tracing out the control of the order-weighted joint map gives exactly
    the self-composed channel, for every mixing weight."""
    rng = np.random.default_rng(seed)
    states = random_states(rng, 1000)
    omega = states_from_bloch(np.array([[1.0, 0.0, 0.0]]))[0]
    worst = 0.0
    for t in (0.3, 1.0, 3.0):
        ch = eternal_channel(t)
        doubled = compose_series(ch, ch)
        reference = apply_many(doubled, states)
        joint_in = np.einsum("nab,cd->nacbd", states, omega).reshape(-1, 4, 4)
        for p in (0.0, 0.25, 0.5, 0.75, 1.0):
            w = switch_kraus(ch, ch, p=p).kraus
            joint = np.einsum("kab,nbc,kdc->nad", w, joint_in, w.conj(), optimize=True)
            marginal = np.einsum("nikjk->nij", joint.reshape(-1, 2, 2, 2, 2))
            worst = max(worst, np.abs(marginal - reference).max())
    return worst < 1e-12, f"max |traced mixture - composed| = {worst:.3e} (tol 1e-12)"


def criterion_9(seed: int) -> tuple[bool, str]:
    """Two-qubit parallel action stays monotone for random product pairs."""
    rng = np.random.default_rng(seed)
    a1 = random_states(rng, 500)
    a2 = random_states(rng, 500)
    b1 = random_states(rng, 500)
    b2 = random_states(rng, 500)
    pairs_a = np.einsum("nab,ncd->nacbd", a1, a2).reshape(-1, 4, 4)
    pairs_b = np.einsum("nab,ncd->nacbd", b1, b2).reshape(-1, 4, 4)
    grid = np.arange(0.0, 5.0 + 0.025, 0.05)
    family = lambda t: compose_parallel(eternal_channel(t), eternal_channel(t))
    series = distance_series(family, pairs_a, pairs_b, grid)
    deriv = central_derivative(grid, series)
    worst = float(deriv.max())
    return worst <= 1e-9, f"max dD/dt = {worst:.3e} (tol 1e-9)"


def criterion_10(seed: int) -> tuple[bool, str]:
    """Sign of the closed-form step determinant agrees with the minimum
    eigenvalue of the constructed step matrix on 10^4 symmetric-rate draws."""
    rng = np.random.default_rng(seed)
    n = 10_000
    g12 = rng.uniform(-1.0, 1.0, n)
    g3 = rng.uniform(-1.0, 1.0, n)
    gmax = np.maximum(np.abs(g12), np.abs(g3))
    eps = rng.uniform(0.0, 1.0, n) * 0.01 / np.maximum(gmax, 1e-12) * 0.999
    raw = rng.normal(size=(n, 4))
    phi = raw[:, 0::2] + 1j * raw[:, 1::2]
    phi /= np.linalg.norm(phi, axis=1)[:, None]
    u = np.abs(phi[:, 0]) ** 2
    v = np.abs(phi[:, 1]) ** 2
    s = 2.0 * g12
    # closed-form determinant (third term vanishes: equal first two rates)
    det = eps * s * (1.0 - eps * s) * (u - v) ** 2 + u * v * (
        1.0 - (1.0 - 2.0 * eps * (g12 + g3)) ** 2
    )
    # constructed step matrix, minimum eigenvalue in closed form
    m00 = (1.0 - eps * s) * u + eps * s * v
    m11 = (1.0 - eps * s) * v + eps * s * u
    m01 = (1.0 - eps * (s + 2.0 * g3)) * phi[:, 0] * phi[:, 1].conj()
    mean = 0.5 * (m00 + m11)
    radius = np.sqrt((0.5 * (m00 - m11)) ** 2 + np.abs(m01) ** 2)
    min_eig = mean - radius
    band = 1e-10
    decided = (np.abs(det) > band) & (np.abs(min_eig) > band)
    disagreements = int(np.sum(np.sign(det[decided]) != np.sign(min_eig[decided])))
    return disagreements == 0, (
        f"{disagreements} sign disagreements outside the {band:.0e} band "
        f"({int(decided.sum())} decided of {n})"
    )


CRITERIA: list[tuple[int, str, Callable[[int], tuple[bool, str]]]] = [
    (1, "Kraus completeness", criterion_1),
    (2, "SWITCH closed-form equivalence", criterion_2),
    (3, "A + B = 1", criterion_3),
    (4, "no revival for the base family", criterion_4),
    (5, "switched revival onset and asymptote", criterion_5),
    (6, "generator recovery", criterion_6),
    (7, "divisibility verdicts", criterion_7),
    (8, "order-mixture trace-out identity", criterion_8),
    (9, "parallel action stays monotone", criterion_9),
    (10, "step-determinant sign oracle", criterion_10),
]


def run_criterion(cid: int, seed: int = 42) -> CriterionResult:
    num, name, fn = CRITERIA[cid - 1]
    passed, detail = fn(seed)
    return CriterionResult(num, name, passed, detail)


def run_all(seed: int = 42) -> int:
    failures = 0
    for cid, _, _ in CRITERIA:
        result = run_criterion(cid, seed)
        status = "PASS" if result.passed else "FAIL"
        print(f"{status}  C{result.cid:02d} {result.name}: {result.detail}")
        if not result.passed:
            failures += 1
    print(f"{len(CRITERIA) - failures}/{len(CRITERIA)} criteria passed")
    return 0 if failures == 0 else 1
