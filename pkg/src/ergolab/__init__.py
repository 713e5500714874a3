"""Finitary observation of stationary ergodic processes.

Exact-measure process models, entropy observation schemes, tower
decompositions and the column recoder, with a command-line experiment
harness (``ergolab``).
"""

__version__ = "0.1.0"

from ergolab._backend import BACKEND
from ergolab.core import (
    Alphabet,
    BlockDistribution,
    WeightedLabeling,
    empirical_block_distribution,
    hamming_fraction,
    l1_distance,
    rho_distance,
)
from ergolab.entropy import (
    block_entropy,
    coverage_growth,
    partition_entropy,
    relative_smb_set,
    smb_trajectory,
)
from ergolab.models import (
    IIDModel,
    JointModel,
    MarkovModel,
    ProductModel,
    RotationModel,
    cylinder_measure,
    exact_entropy_rate,
    load_model,
    sample,
)
from ergolab.schemes import (
    SchemeDescriptor,
    convergence_report,
    freq_scheme,
    lz78_scheme,
    plugin_scheme,
    returntime_scheme,
)
