"""Fisher-symmetric informationally complete measurements for pure states."""

__version__ = "0.1.0"

from .povm_core import (  # noqa: E402
    CompletenessError,
    LocalParams,
    PureState,
    RankOnePOVM,
    RealDecomposition,
    gauge_fix,
    load_povm,
    make_pure_state,
    outcome_probabilities,
    perturbed_state,
    povm_from_vectors,
    real_decomposition,
    save_povm,
)
from .fisher import (  # noqa: E402
    FisherReport,
    PFSICVerdict,
    classical_fisher,
    classical_fisher_fd,
    fisher_report,
    fisher_symmetry_quantity,
    gill_massar,
    is_pfsic,
    quantum_fisher_pure,
)
from .constructions import (  # noqa: E402
    OrthogonalMatrix,
    RealBasisSpec,
    build_from_descriptor,
    minimal_pfsic,
    orthogonal_mix,
    random_orthogonal,
    random_povm,
    symmetric_real_basis,
    two_basis_pfsic,
)
from .tomography import (  # noqa: E402
    LocalStateEstimator,
    NotLocallyCompleteError,
    SimConfig,
    SimReport,
    estimate_local,
    run_trials,
    sample_outcomes,
    trine_ambiguity_demo,
)
