"""Communication-metered sketching protocols over simulated networks.

The protocol entry points below run one convergecast on a Topology and
return an estimate together with per-edge bit counts; the stream_*
functions are their single-machine streaming counterparts.  Everything
is deterministic given the seed.
"""

from .engine import CommStats, CounterOverflowError
from .entropy import EntropyConfig, entropy_to_bits, estimate_entropy, stream_entropy
from .fp_high import FpHighConfig, estimate_fp_high
from .fp_low import FpLowConfig, estimate_fp_low, stream_fp_logcosine
from .harness import ExperimentSpec, run_experiment
from .heavy_hitters import CountSketchSpec, heavy_hitters, point_estimate_all
from .matrix_product import AmpConfig, amp_estimate
from .topology import Topology, from_spec, line, make_topology, star

__all__ = [
    "AmpConfig",
    "CommStats",
    "CounterOverflowError",
    "CountSketchSpec",
    "EntropyConfig",
    "ExperimentSpec",
    "FpHighConfig",
    "FpLowConfig",
    "Topology",
    "amp_estimate",
    "entropy_to_bits",
    "estimate_entropy",
    "estimate_fp_high",
    "estimate_fp_low",
    "from_spec",
    "heavy_hitters",
    "line",
    "make_topology",
    "point_estimate_all",
    "run_experiment",
    "star",
    "stream_entropy",
    "stream_fp_logcosine",
]

__version__ = "0.1.0"
