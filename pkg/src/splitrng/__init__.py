"""splitrng: desk-scale simulator and analysis toolkit for beam-splitter
quantum random number generation.

Subpackages:

* qcore      - states, bases, Born-rule sampling, splittable random source
* protocols  - single-particle and entangled-pair generation protocols,
               detector imperfections, correlation / CHSH estimators
* extract    - downgrading, XOR combination, von Neumann debiasing, packing
* statkit    - finite-sample statistical battery
* cli        - command-line orchestration (generate / analyze / sweep /
               chsh / selftest)
"""

from .extract import (
    BitStream,
    Equipartition,
    SymbolStream,
    eliminate,
    identify,
    pack_bits,
    unpack_bits,
    von_neumann_debias,
    xor_combine,
)
from .protocols import (
    IDEAL_DETECTOR,
    NO_CLICK,
    ChshResult,
    DetectorModel,
    TrialRecord,
    adaptive_epr_trial,
    adaptive_epr_trials,
    apply_detector,
    chsh_certify,
    chsh_estimate,
    correlation_estimate,
    epr_joint_distribution,
    epr_trial,
    epr_trials,
    prepare_basis_state,
    run_blocked,
    single_trial,
    single_trials,
    singlet_state,
)
from .qcore import (
    Basis,
    JointState,
    OutcomeDistribution,
    RandomSource,
    StateVector,
    born_probabilities,
    computational_basis,
    fourier_basis,
    joint_born_probabilities,
    overlap_table,
    sample,
    sample_many,
    spin_dim,
    spin_rotation_basis,
)
from .statkit import (
    SuiteResult,
    TestReport,
    bias_estimate,
    chi_square_multinomial,
    entropy_rate,
    monobit,
    run_suite,
    runs_test,
    serial_correlation,
    stream_digest,
)

__version__ = "0.1.0"
