"""Qubit channel dynamics under the quantum SWITCH.

Simulates a dephasing-type qubit channel family whose canonical generator has
a permanently negative rate yet shows no trace-distance revival, places two
copies of it in a coherent superposition of application orders, and analyses
the resulting dynamics: generator extraction, CP/P-divisibility verdicts,
backflow detection, and the closed-form crossing time.
"""

from .core import (
    BlochOutOfBall,
    BlochVector,
    DensityMatrix,
    InvalidDensityMatrix,
    NotHermitian,
    PAULI_BASIS,
    PAULIS,
    bloch_from_density,
    dagger,
    density_from_bloch,
    eigenvalues_hermitian,
    jacobi_eigensystem,
    trace_distance,
    trace_distance_many,
)
from .channels import (
    BadWeights,
    ComplexResidue,
    DimensionMismatch,
    IncompleteKraus,
    KrausChannel,
    NegativeTime,
    TransferMatrix,
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
    eternal_rates,
    identity_channel,
    is_cp_choi,
    is_cptp,
    min_choi_eigenvalue,
    mix,
    series_doubled_family,
    transfer_matrix,
    xi1,
    xi2,
)
from .switchop import (
    ControlSpec,
    SwitchClosedForm,
    SwitchOutcome,
    T_STAR,
    closed_form_apply,
    measure_control,
    plus_control,
    switch_branch_channels,
    switch_coefficient_derivatives,
    switch_coefficients,
    switch_evolve,
    switch_kraus,
    switch_outcomes,
    switched_family,
    trace_out_control,
)
from .analysis import (
    BackflowReport,
    BadState,
    CharacteristicTimeQuery,
    DegenerateInitialPair,
    DivisibilityVerdict,
    GeneratorSample,
    NoSolution,
    PoleAtCharacteristicTime,
    axis_growth_flags,
    backflow_scan,
    characteristic_time,
    chi0_from_pair,
    closed_form_switched_rates,
    cp_divisibility,
    distance_series,
    divisibility_verdict,
    extract_generator,
    generator_samples,
    infinitesimal_determinant,
    infinitesimal_map_output,
    p_divisibility,
    series_rate_check,
)

__version__ = "0.1.0"
