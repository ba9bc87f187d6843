"""Canonical generator extraction and non-Markovianity diagnostics.

A channel family t -> KrausChannel is probed through its Pauli transfer matrix
F(t); the generator is L = dF/dt F^{-1} (central finite difference), and for
the x/y-symmetric qubit families handled here the canonical rates follow from
the diagonal of L:

    rate_1 = rate_2 = -L_zz / 4,      rate_3 = L_zz / 4 - L_xx / 2.

Positivity of all rates is the divisibility criterion for completely positive
intermediate maps; nonnegativity of all pairwise rate sums is the criterion
for merely positive intermediate maps, and its failure is what permits
trace-distance revivals.
"""

from dataclasses import dataclass
from math import exp, isfinite, nan, sqrt
from typing import NamedTuple, Sequence

import numpy as np

from .core import DensityMatrix, bloch_from_density
from .channels import ChannelFamily, transfer_matrix
from .switchop import T_STAR, switch_coefficients, switch_coefficient_derivatives

# |det F| below this marks the transfer matrix singular. Strongly contracting
# but well-conditioned families (e.g. the self-composed channel, where
# det F = e^{-4 xi2} e^{-4t}) must stay extractable out to t ~ 5, so the floor
# sits at the level where inversion itself loses all accuracy.
DET_FLOOR = 1e-12
COND_CEILING = 1e10       # condition number above this marks F singular too
RATE_CAP = 5.0            # sampling guard: rates beyond this magnitude sit on a pole
DERIV_TOL = 1e-9          # revival detection threshold on dD/dt
FD_STEP = 1e-5            # central-difference step for dF/dt


class PoleAtCharacteristicTime(ValueError):
    """Closed-form rates requested at the divergence time itself."""


class NoSolution(ValueError):
    """Crossing-time equation has no root in the search bracket."""


class DegenerateInitialPair(ValueError):
    """Initial pair has no z-component difference; chi(0) is undefined."""


class BadState(ValueError):
    """Pure-state amplitudes are not normalized."""


@dataclass(frozen=True)
class GeneratorSample:
    """Generator snapshot at one time; rates are NaN when ``pole`` is set."""

    t: float
    L: np.ndarray | None
    gamma1: float
    gamma2: float
    gamma3: float
    pole: bool = False

    def rates(self) -> tuple[float, float, float]:
        return self.gamma1, self.gamma2, self.gamma3


@dataclass(frozen=True)
class DivisibilityVerdict:
    """Divisibility intervals over the sampled (non-pole) times.

    ``violated_pairs`` records, for each time with at least one negative
    pairwise rate sum, which index pairs (1-based) were negative.
    """

    cp_divisible_intervals: list[tuple[float, float]]
    p_divisible_intervals: list[tuple[float, float]]
    violated_pairs: list[tuple[float, tuple[tuple[int, int], ...]]]


@dataclass(frozen=True)
class BackflowReport:
    times: np.ndarray
    distance: np.ndarray
    derivative: np.ndarray
    revival_intervals: list[tuple[float, float]]
    measure: float
    characteristic_time: float | None


@dataclass(frozen=True)
class CharacteristicTimeQuery:
    """Initial-pair parameter chi(0) >= 0 for the crossing-time equation."""

    chi0: float

    def __post_init__(self):
        if not (isfinite(self.chi0) and self.chi0 >= 0.0):
            raise ValueError(f"chi0 = {self.chi0} must be finite and nonnegative")


class InfinitesimalOutput(NamedTuple):
    matrix: np.ndarray
    determinant: float


def _rates_from_l(l: np.ndarray) -> tuple[float, float, float]:
    g12 = -l[3, 3] / 4.0
    return g12, g12, l[3, 3] / 4.0 - l[1, 1] / 2.0


def extract_generator(family: ChannelFamily, t: float, h: float = FD_STEP) -> GeneratorSample:
    """Numerical generator sample of a channel family at time t.

    dF/dt is the central difference over [t-h, t+h]; a singular F(t)
    (|det F| below DET_FLOOR or condition number above COND_CEILING) yields
    a pole sample instead of a crash.
    """
    if not t >= h > 0:
        raise ValueError(f"need t >= h > 0, got t={t}, h={h}")
    f = transfer_matrix(family(t)).F
    if abs(np.linalg.det(f)) < DET_FLOOR or np.linalg.cond(f) > COND_CEILING:
        return GeneratorSample(float(t), None, nan, nan, nan, pole=True)
    f_plus = transfer_matrix(family(t + h)).F
    f_minus = transfer_matrix(family(t - h)).F
    f_dot = (f_plus - f_minus) / (2.0 * h)
    l = f_dot @ np.linalg.inv(f)
    g1, g2, g3 = _rates_from_l(l)
    return GeneratorSample(float(t), l, g1, g2, g3)


def closed_form_switched_rates(t: float) -> GeneratorSample:
    """Exact rates of the switched family from the coefficient derivatives.

    L_zz = (dA - dB)/(A - B) is used directly, which stays valid on both
    sides of the sign change of A - B; the divergence point itself raises
    PoleAtCharacteristicTime.
    """
    if abs(t - T_STAR) < 1e-9:
        raise PoleAtCharacteristicTime(f"t = {t} is within 1e-9 of {T_STAR}")
    cf = switch_coefficients(t)
    da, db = switch_coefficient_derivatives(t)
    l_xx = da / cf.A
    l_zz = (da - db) / (cf.A - cf.B)
    l = np.diag([0.0, l_xx, l_xx, l_zz])
    g1, g2, g3 = _rates_from_l(l)
    return GeneratorSample(float(t), l, g1, g2, g3)


def generator_samples(
    family: ChannelFamily,
    grid: Sequence[float],
    h: float = FD_STEP,
    rate_cap: float | None = RATE_CAP,
) -> list[GeneratorSample]:
    """Generator samples over a time grid.

    ``rate_cap`` flags samples whose extracted rate magnitude exceeds the cap
    as poles: near a zero of det F the rates blow up like 1/(t - t_pole) well
    before F becomes numerically singular, and such samples carry no usable
    rate information.
    """
    out = []
    for t in grid:
        s = extract_generator(family, t, h)
        if (
            rate_cap is not None
            and not s.pole
            and max(abs(s.gamma1), abs(s.gamma2), abs(s.gamma3)) > rate_cap
        ):
            s = GeneratorSample(s.t, s.L, nan, nan, nan, pole=True)
        out.append(s)
    return out


def _intervals_where(times: list[float], flags: list[bool]) -> list[tuple[float, float]]:
    intervals = []
    start = None
    for t, ok in zip(times, flags):
        if ok and start is None:
            start = t
        elif not ok and start is not None:
            intervals.append((start, prev))
            start = None
        prev = t
    if start is not None:
        intervals.append((start, times[-1]))
    return intervals


def divisibility_verdict(
    samples: Sequence[GeneratorSample], tol: float = 1e-9
) -> DivisibilityVerdict:
    """CP/P-divisibility intervals from generator samples (poles excluded).

    CP-divisible where every rate >= -tol; P-divisible where every pairwise
    rate sum >= -tol.
    """
    valid = [s for s in samples if not s.pole]
    times = [s.t for s in valid]
    cp_flags = [min(s.rates()) >= -tol for s in valid]
    pair_index = ((1, 2), (1, 3), (2, 3))
    p_flags = []
    violated = []
    for s in valid:
        g = (s.gamma1, s.gamma2, s.gamma3)
        bad = tuple(
            (i, j) for (i, j) in pair_index if g[i - 1] + g[j - 1] < -tol
        )
        p_flags.append(not bad)
        if bad:
            violated.append((s.t, bad))
    return DivisibilityVerdict(
        cp_divisible_intervals=_intervals_where(times, cp_flags),
        p_divisible_intervals=_intervals_where(times, p_flags),
        violated_pairs=violated,
    )


def cp_divisibility(samples: Sequence[GeneratorSample], tol: float = 1e-9) -> DivisibilityVerdict:
    return divisibility_verdict(samples, tol)


def p_divisibility(samples: Sequence[GeneratorSample], tol: float = 1e-9) -> DivisibilityVerdict:
    return divisibility_verdict(samples, tol)


# -- positivity of the infinitesimal step --------------------------------------

def infinitesimal_determinant(
    gamma: Sequence[float], epsilon: float, phi: Sequence[complex]
) -> float:
    """Determinant of the first-order step applied to |phi><phi|, in the
    closed form whose sign encodes positivity of the infinitesimal map."""
    g1, g2, g3 = (float(g) for g in gamma)
    p1, p2 = complex(phi[0]), complex(phi[1])
    u = abs(p1) ** 2
    v = abs(p2) ** 2
    s = g1 + g2
    cross = p1 * p2.conjugate()
    term1 = epsilon * s * (1.0 - epsilon * s) * (u - v) ** 2
    term2 = u * v * (1.0 - (1.0 - 2.0 * epsilon * (g2 + g3)) ** 2)
    term3 = (
        2.0
        * epsilon
        * (g1 - g2)
        * (1.0 - epsilon * (g1 + g2 + g3))
        * (u * v - (cross ** 2).real)
    )
    return float(term1 + term2 + term3)


def infinitesimal_map_output(
    gamma: Sequence[float], epsilon: float, phi: Sequence[complex]
) -> InfinitesimalOutput:
    """First-order time step (1 + eps L) applied to the pure state |phi><phi|.

    Requires normalized amplitudes and eps * max|rate| < 0.01 so the
    first-order truncation is meaningful. Returns the 2x2 output matrix and
    its closed-form determinant (exact for rate_1 == rate_2).
    """
    g1, g2, g3 = (float(g) for g in gamma)
    p1, p2 = complex(phi[0]), complex(phi[1])
    norm = abs(p1) ** 2 + abs(p2) ** 2
    if abs(norm - 1.0) > 1e-12:
        raise BadState(f"|phi|^2 = {norm!r}, expected 1")
    if epsilon * max(abs(g1), abs(g2), abs(g3)) >= 0.01:
        raise ValueError("epsilon too large for a first-order step")
    u = abs(p1) ** 2
    v = abs(p2) ** 2
    s = g1 + g2
    off = (1.0 - epsilon * (s + 2.0 * g3)) * p1 * p2.conjugate() + epsilon * (
        g1 - g2
    ) * p1.conjugate() * p2
    m = np.array(
        [
            [(1.0 - epsilon * s) * u + epsilon * s * v, off],
            [off.conjugate(), (1.0 - epsilon * s) * v + epsilon * s * u],
        ]
    )
    return InfinitesimalOutput(m, infinitesimal_determinant(gamma, epsilon, phi))


def axis_growth_flags(gamma: Sequence[float]) -> tuple[bool, bool, bool]:
    """Which Bloch-difference components grow under a first-order step:
    x grows iff rate_2 + rate_3 < 0, y iff rate_1 + rate_3 < 0,
    z iff rate_1 + rate_2 < 0."""
    g1, g2, g3 = (float(g) for g in gamma)
    return g2 + g3 < 0.0, g1 + g3 < 0.0, g1 + g2 < 0.0


# -- trace-distance scans -------------------------------------------------------

def distance_series(
    family: ChannelFamily,
    states_a: np.ndarray,
    states_b: np.ndarray,
    grid: np.ndarray,
) -> np.ndarray:
    """Trace distances of evolved state pairs, shape (n_pairs, n_times).

    ``states_a``/``states_b`` are stacked density matrices (n, d, d); each
    grid time builds one family snapshot applied to the whole batch.
    """
    from .channels import apply_many

    grid = np.asarray(grid, dtype=float)
    out = np.empty((states_a.shape[0], grid.size))
    for k, t in enumerate(grid):
        ch = family(float(t))
        evolved_a = apply_many(ch, states_a)
        evolved_b = apply_many(ch, states_b)
        out[:, k] = _distances(evolved_a, evolved_b)
    return out


def _distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    from .core import trace_distance_many

    return trace_distance_many(a, b)


def central_derivative(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Second-order derivative along the last axis; one-sided at the ends."""
    d = np.empty_like(values)
    d[..., 1:-1] = (values[..., 2:] - values[..., :-2]) / (times[2:] - times[:-2])
    d[..., 0] = (values[..., 1] - values[..., 0]) / (times[1] - times[0])
    d[..., -1] = (values[..., -1] - values[..., -2]) / (times[-1] - times[-2])
    return d


def revival_intervals_and_measure(
    times: np.ndarray, derivative: np.ndarray, tol: float = DERIV_TOL
) -> tuple[list[tuple[float, float]], float]:
    """Contiguous runs with dD/dt > tol and the integrated positive part."""
    mask = derivative > tol
    intervals = []
    measure = 0.0
    k = 0
    n = times.size
    while k < n:
        if not mask[k]:
            k += 1
            continue
        start = k
        while k + 1 < n and mask[k + 1]:
            k += 1
        intervals.append((float(times[start]), float(times[k])))
        if k > start:
            seg_d = derivative[start : k + 1]
            seg_t = times[start : k + 1]
            measure += float(
                np.sum(0.5 * (seg_d[1:] + seg_d[:-1]) * np.diff(seg_t))
            )
        else:
            # single-sample revival: credit half a local grid cell
            left = times[start] - times[start - 1] if start > 0 else 0.0
            right = times[start + 1] - times[start] if start + 1 < n else 0.0
            measure += float(derivative[start] * 0.5 * (left + right))
        k += 1
    return intervals, measure


def backflow_scan(
    family: ChannelFamily,
    rho_a: DensityMatrix,
    rho_b: DensityMatrix,
    grid: np.ndarray,
    tol: float = DERIV_TOL,
) -> BackflowReport:
    """Distance series, revival intervals, backflow measure, and the first
    time the distance derivative turns positive."""
    grid = np.asarray(grid, dtype=float)
    if grid.size < 3 or (np.diff(grid) <= 0).any():
        raise ValueError("grid must be strictly increasing with >= 3 points")
    series = distance_series(
        family, rho_a.matrix[np.newaxis], rho_b.matrix[np.newaxis], grid
    )[0]
    deriv = central_derivative(grid, series)
    intervals, measure = revival_intervals_and_measure(grid, deriv, tol)
    t_char = intervals[0][0] if intervals else None
    return BackflowReport(grid, series, deriv, intervals, measure, t_char)


# -- crossing time of the switched family ---------------------------------------

def chi0_from_pair(rho_a: DensityMatrix, rho_b: DensityMatrix) -> float:
    """Initial-pair parameter chi(0) = sqrt((a1^2 + a2^2) / a3^2) from the
    Bloch-vector difference; undefined (DegenerateInitialPair) when a3 = 0."""
    va = bloch_from_density(rho_a).as_array()
    vb = bloch_from_density(rho_b).as_array()
    a1, a2, a3 = va - vb
    if abs(a3) < 1e-12:
        raise DegenerateInitialPair("initial pair has no z-difference")
    return sqrt((a1 ** 2 + a2 ** 2) / a3 ** 2)


def _crossing_residual(t: float) -> float:
    cf = switch_coefficients(t)
    return exp(t) * (cf.A - cf.B) / cf.A


def characteristic_time(
    query: CharacteristicTimeQuery | float, t_max: float = 20.0
) -> float:
    """Earliest t > 0 with e^t (A - B)/A = +-chi(0), by bracketed bisection.

    For chi(0) = 0 this reduces to the root of A - B. Raises NoSolution when
    neither sign shows a crossing inside [0, t_max].
    """
    chi0 = query.chi0 if isinstance(query, CharacteristicTimeQuery) else float(query)
    CharacteristicTimeQuery(chi0)  # validate
    targets = {chi0, -chi0}
    grid = np.linspace(0.0, t_max, 4001)
    g = np.array([_crossing_residual(t) for t in grid])
    best = None
    for target in targets:
        r = g - target
        sign_change = np.nonzero(r[:-1] * r[1:] <= 0.0)[0]
        if sign_change.size == 0:
            continue
        lo, hi = grid[sign_change[0]], grid[sign_change[0] + 1]
        f_lo = _crossing_residual(lo) - target
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            f_mid = _crossing_residual(mid) - target
            if f_lo * f_mid <= 0.0:
                hi = mid
            else:
                lo, f_lo = mid, f_mid
            if hi - lo < 1e-15:
                break
        root = 0.5 * (lo + hi)
        if best is None or root < best:
            best = root
    if best is None:
        raise NoSolution(f"no crossing for chi0 = {chi0} in [0, {t_max}]")
    return float(best)


# -- rate doubling under self-composition ---------------------------------------

class SeriesRateCheck(NamedTuple):
    t: float
    rates: tuple[float, float, float]
    expected: tuple[float, float, float]
    max_error: float
    min_pair_sum: float


def series_rate_check(t: float, h: float = FD_STEP) -> SeriesRateCheck:
    """Extract rates of the self-composed snapshot family t -> L(t) o L(t) and
    compare with the doubled base rates (1, 1, -tanh t).

    Rate recovery is accurate to ~1e-7 for t up to 3; beyond that the
    z-contraction e^{-4t} emerges from cancellation across the 16 composed
    Kraus operators and the recovered rate_1/rate_2 degrade toward ~1e-4.
    Pairwise rate sums are unaffected (the noisy L_zz cancels within them).
    """
    from .channels import series_doubled_family

    s = extract_generator(series_doubled_family, t, h)
    expected = (1.0, 1.0, -float(np.tanh(t)))
    rates = s.rates()
    max_error = max(abs(a - b) for a, b in zip(rates, expected))
    pair_sums = (
        rates[0] + rates[1],
        rates[0] + rates[2],
        rates[1] + rates[2],
    )
    return SeriesRateCheck(float(t), rates, expected, max_error, min(pair_sums))
