"""Coherent-order supermap (quantum SWITCH) for two qubit channels.

Tensor-factor convention throughout: joint states live on target (x) control,
with the control qubit as the SECOND factor. Keeping this fixed avoids the
classic index bug when projecting the control out.

The order-weight parameter ``p`` scales the two definite-order branches with
amplitudes sqrt(2p) and sqrt(2(1-p)). At the default p = 1/2 this is the plain
SWITCH (unit weight on both orders, joint Kraus set complete to the identity);
away from 1/2 the joint set is complete only blockwise, but acting on
rho (x) |+><+| it is trace preserving for every p and tracing out the control
yields exactly the p-weighted convex mixture of the two orders.
"""

from dataclasses import dataclass, field
from math import log, sqrt
from typing import NamedTuple

import numpy as np

from .core import ATOL_EVOLVED, DensityMatrix, density_from_bloch
from .channels import (
    DimensionMismatch,
    KrausChannel,
    NegativeTime,
    eternal_channel,
)

PLUS_VEC = np.array([1.0, 1.0], dtype=complex) / sqrt(2.0)
MINUS_VEC = np.array([1.0, -1.0], dtype=complex) / sqrt(2.0)

# Root of A(t) - B(t): the switched map's z-contraction changes sign here.
T_STAR = 0.5 * log(1.0 + 2.0 * sqrt(2.0))


def plus_control() -> DensityMatrix:
    return density_from_bloch((1.0, 0.0, 0.0))


@dataclass(frozen=True)
class ControlSpec:
    """Control-qubit preparation; measurement basis is fixed to {|+>, |->}."""

    omega_c: DensityMatrix = field(default_factory=plus_control)


@dataclass(frozen=True)
class SwitchOutcome:
    """One coherent-basis measurement branch of the switched evolution.

    ``state`` is None when the branch probability is below 1e-14 (the
    renormalized post-measurement state is undefined there).
    """

    branch: str
    probability: float
    state: DensityMatrix | None
    effective: KrausChannel | None = None


class SwitchClosedForm(NamedTuple):
    """Coefficients of the normalized '+' branch map: Bloch factors
    (A, A, A - B) with branch probability n."""

    t: float
    A: float
    B: float
    n: float


def _ordered_products(n1: KrausChannel, n2: KrausChannel):
    if n1.dim != 2 or n2.dim != 2:
        raise DimensionMismatch("SWITCH operands must be qubit channels")
    # forward[i,j] = K2_j K1_i (channel 1 first), reverse[i,j] = K1_i K2_j
    forward = np.einsum("jab,ibc->ijac", n2.kraus, n1.kraus)
    reverse = np.einsum("iab,jbc->ijac", n1.kraus, n2.kraus)
    m = n1.n_ops * n2.n_ops
    return forward.reshape(m, 2, 2), reverse.reshape(m, 2, 2)


def switch_kraus(n1: KrausChannel, n2: KrausChannel, p: float = 0.5) -> KrausChannel:
    """Joint Kraus set W_ij on target (x) control for the order superposition.

    W_ij = sqrt(2p) K2_j K1_i (x) |0><0| + sqrt(2(1-p)) K1_i K2_j (x) |1><1|.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"order weight p = {p} outside [0, 1]")
    forward, reverse = _ordered_products(n1, n2)
    w = np.zeros((forward.shape[0], 4, 4), dtype=complex)
    w[:, 0::2, 0::2] = sqrt(2.0 * p) * forward
    w[:, 1::2, 1::2] = sqrt(2.0 * (1.0 - p)) * reverse
    return KrausChannel(w, check=(p == 0.5))


def switch_evolve(
    n1: KrausChannel,
    n2: KrausChannel,
    rho: DensityMatrix,
    control: ControlSpec | None = None,
    p: float = 0.5,
) -> DensityMatrix:
    """Joint target (x) control state after the switched evolution."""
    if rho.dim != 2:
        raise DimensionMismatch("target must be a qubit state")
    control = control or ControlSpec()
    w = switch_kraus(n1, n2, p).kraus
    joint_in = np.kron(rho.matrix, control.omega_c.matrix)
    joint = np.einsum("kab,bc,kdc->ad", w, joint_in, w.conj(), optimize=True)
    return DensityMatrix(joint, atol=ATOL_EVOLVED)


def trace_out_control(joint: DensityMatrix) -> DensityMatrix:
    """Marginal target state of a joint target (x) control state."""
    r = joint.matrix.reshape(2, 2, 2, 2)
    return DensityMatrix(np.einsum("ikjk->ij", r), atol=ATOL_EVOLVED)


def measure_control(
    joint: DensityMatrix, control: ControlSpec | None = None
) -> tuple[SwitchOutcome, SwitchOutcome]:
    """Coherent-basis measurement of the control; both post-selected branches.

    Branch probabilities always sum to one; a branch with probability below
    1e-14 carries state None.
    """
    if joint.dim != 4:
        raise DimensionMismatch("expected a two-qubit joint state")
    r = joint.matrix.reshape(2, 2, 2, 2)
    outcomes = []
    for name, vec in (("+", PLUS_VEC), ("-", MINUS_VEC)):
        block = np.einsum("k,ikjl,l->ij", vec.conj(), r, vec)
        prob = float(block.trace().real)
        if prob < 1e-14:
            outcomes.append(SwitchOutcome(name, prob, None))
        else:
            state = DensityMatrix(block / prob, atol=ATOL_EVOLVED)
            outcomes.append(SwitchOutcome(name, prob, state))
    return outcomes[0], outcomes[1]


def switch_branch_channels(
    n1: KrausChannel, n2: KrausChannel, p: float = 0.5
) -> tuple[KrausChannel | None, KrausChannel | None]:
    """Effective target channels of the '+' and '-' branches for a |+> control.

    Built by projecting the joint Kraus set, not from any closed form. Each
    carries trace_scale equal to its branch probability, which for these
    channels is state independent. A numerically zero branch (probability
    below 1e-14) is returned as None.
    """
    forward, reverse = _ordered_products(n1, n2)
    wf = sqrt(2.0 * p)
    wr = sqrt(2.0 * (1.0 - p))
    # <b| W_ij |+> with control components <b|0><0|+> and <b|1><1|+>
    plus = 0.5 * (wf * forward + wr * reverse)
    minus = 0.5 * (wf * forward - wr * reverse)
    channels = []
    for ops in (plus, minus):
        gram = np.einsum("kba,kbc->ac", ops.conj(), ops)
        scale = float(gram.trace().real) / 2.0
        if scale < 1e-14:
            channels.append(None)
        else:
            channels.append(KrausChannel(ops, trace_scale=min(scale, 1.0)))
    return channels[0], channels[1]


def switch_outcomes(
    n1: KrausChannel,
    n2: KrausChannel,
    rho: DensityMatrix,
    p: float = 0.5,
) -> tuple[SwitchOutcome, SwitchOutcome]:
    """Evolve, measure, and attach the effective branch channels (|+> control)."""
    joint = switch_evolve(n1, n2, rho, ControlSpec(), p)
    plus, minus = measure_control(joint)
    ch_plus, ch_minus = switch_branch_channels(n1, n2, p)
    return (
        SwitchOutcome(plus.branch, plus.probability, plus.state, ch_plus),
        SwitchOutcome(minus.branch, minus.probability, minus.state, ch_minus),
    )


# -- closed form of the switched dephasing family ------------------------------

def switch_coefficients(t: float) -> SwitchClosedForm:
    """Closed-form (A, B, n) of the normalized '+' branch at time t.

    Evaluated in y = e^{-2t} so the rational forms stay finite for large t:
    A = (3y^2 + 2y + 3)/d, B = 4(1 - y^2)/d, n = d/8 with d = 7 + 2y - y^2.
    """
    if t < 0:
        raise NegativeTime(f"t = {t} < 0")
    y = np.exp(-2.0 * t)
    d = 7.0 + 2.0 * y - y * y
    a = (3.0 * y * y + 2.0 * y + 3.0) / d
    b = 4.0 * (1.0 - y * y) / d
    return SwitchClosedForm(float(t), float(a), float(b), float(d / 8.0))


def switch_coefficient_derivatives(t: float) -> tuple[float, float]:
    """Exact time derivatives (dA/dt, dB/dt) of the closed-form coefficients."""
    y = np.exp(-2.0 * t)
    d = 7.0 + 2.0 * y - y * y
    d_prime = 2.0 - 2.0 * y          # d(d)/dy
    num_a = 3.0 * y * y + 2.0 * y + 3.0
    da_dy = ((6.0 * y + 2.0) * d - num_a * d_prime) / (d * d)
    num_b = 4.0 * (1.0 - y * y)
    db_dy = (-8.0 * y * d - num_b * d_prime) / (d * d)
    dy_dt = -2.0 * y
    return float(da_dy * dy_dt), float(db_dy * dy_dt)


def closed_form_apply(cf: SwitchClosedForm, rho: DensityMatrix) -> DensityMatrix:
    """Normalized '+' branch action: populations mix with (A, B), coherences
    scale by A."""
    m = rho.matrix
    out = np.array(
        [
            [cf.A * m[0, 0] + cf.B * m[1, 1], cf.A * m[0, 1]],
            [cf.A * m[1, 0], cf.B * m[0, 0] + cf.A * m[1, 1]],
        ]
    )
    return DensityMatrix(out, atol=ATOL_EVOLVED)


def switched_family(t: float, p: float = 0.5) -> KrausChannel:
    """'+' branch effective channel of the dephasing family switched with
    itself, built from the projected joint Kraus set (brute force)."""
    if t < 0:
        raise NegativeTime(f"t = {t} < 0")
    ch = eternal_channel(t)
    plus, _ = switch_branch_channels(ch, ch, p)
    return plus
