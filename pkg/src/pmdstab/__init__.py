"""Small-signal stability assessment of multi-converter networks in the dq frame.

Modal impedances of the nodal admittance matrix are tracked over frequency
and each resonance is classified by the sign of its damping; a generalized
Nyquist comparator on the open loop Z_N Y_S is provided alongside.
"""

__version__ = "0.1.0"

from .assembly import GroupingDirective, apply_grouping, assemble
from .errors import PmdStabError
from .gnc import GncConfig, gnc_assess
from .modal import FrequencyGrid, sweep
from .netmodel import NetworkModel, load_network, parse_network
from .pmd import PmdConfig, pmd_assess

__all__ = [
    "FrequencyGrid", "GncConfig", "GroupingDirective", "NetworkModel", "PmdConfig",
    "PmdStabError", "apply_grouping", "assemble", "gnc_assess", "load_network",
    "parse_network", "pmd_assess", "sweep",
]
