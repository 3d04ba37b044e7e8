"""Space-time correlations of harmonic and weakly anharmonic chains."""

__version__ = "0.1.0"

from .circulant import CouplingVector, LocalSquareRoot, localized_square_root  # noqa: E402
from .correlations import CorrelationIndex, correlation_field, finite_correlation, limit_correlation  # noqa: E402
from .dataset import CorrelationDataset  # noqa: E402
from .dispersion import airy_constants, dispersion_jet, find_degenerate_points, frequency  # noqa: E402
from .dynamics import ChainModel, ChainState, EnsembleSpec, NonlinearModel  # noqa: E402
from .errors import LatticeCorrError  # noqa: E402

__all__ = [
    "__version__",
    "CouplingVector",
    "LocalSquareRoot",
    "localized_square_root",
    "CorrelationIndex",
    "correlation_field",
    "finite_correlation",
    "limit_correlation",
    "CorrelationDataset",
    "airy_constants",
    "dispersion_jet",
    "find_degenerate_points",
    "frequency",
    "ChainModel",
    "ChainState",
    "EnsembleSpec",
    "NonlinearModel",
    "LatticeCorrError",
]
