"""Environment-assisted transport and local quantum uncertainty in small
excitonic networks."""

__version__ = "0.1.0"

from .errors import EnaqtError, NumericalError, ValidationError  # noqa: E402
from .model import (  # noqa: E402
    BasisLayout,
    DensityMatrix,
    NetworkModel,
    RunConfig,
    build_hamiltonian,
    fmo3_preset,
    localized_state,
)
from .dynamics import (  # noqa: E402
    Superoperator,
    Trajectory,
    build_lindbladian,
    efficiency_by_integration,
    efficiency_direct,
    propagate_expm,
    propagate_rk4,
)
from .correlations import (  # noqa: E402
    PartitionSpec,
    embed_single_excitation,
    lqu_flux,
    lqu_general,
    lqu_single_excitation,
)
from .experiments import (  # noqa: E402
    SweepConfig,
    efficiency,
    record_representative_trajectories,
    run_dephasing_sweep,
)
