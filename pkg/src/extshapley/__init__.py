"""Extended Shapley values for partition-function games, exact and by sampling."""

from .core import (
    ConfigurationError,
    EmbeddedCoalition,
    InvalidTransferError,
    Partition,
    Permutation,
    SizeError,
    bell,
    enumerate_partitions,
    mask_of,
    players_of,
    restrict_to_new_block,
    trailing_set,
    transfer,
)
from .games import FunctionGame, PartitionFunctionGame, TableGame, permute_game
from .weightings import (
    AlphaWeighting,
    ShapeWeighting,
    all_weightings,
    alpha_bolger,
    alpha_free,
    alpha_full,
    alpha_hu_yang,
    alpha_macho_stadler,
    get_weighting,
    validate_weighting,
)
from .exact import (
    basis_value,
    check_axioms,
    elementary_mc,
    exact_value,
    exact_value_eq1,
    mc_alpha,
)
from .montecarlo import ErrorSpec, approximate, contribution_bounds, required_samples
from .bench import RandomGameSpec, make_random_game

__version__ = "0.1.0"
