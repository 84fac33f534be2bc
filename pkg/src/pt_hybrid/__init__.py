"""Prescribed-time stability toolkit for switching systems with resets.

Layout:

* :mod:`pt_hybrid.blowup` - blow-up gains and time dilation/contraction;
* :mod:`pt_hybrid.switching` - switching signals, BU-ADT/BU-AAT validation
  and generation;
* :mod:`pt_hybrid.hybrid` - hybrid time domains, arcs, and the two-scale
  simulator;
* :mod:`pt_hybrid.stability` - Lyapunov certificates, decay constants, and
  prescribed-time bound checks;
* :mod:`pt_hybrid.scenarios` - the application scenarios;
* :mod:`pt_hybrid.cli` - the ``pt-hybrid`` command line.
"""

__version__ = "0.1.0"

from .blowup import BlowUpParams, contract, dilate, gain, normalized_gain, omega, terminal_time
from .hybrid import (
    HybridArc,
    HybridSystemDef,
    HybridTimeDomain,
    SolverConfig,
    apply_jump,
    htd_stats,
    integrate_flow,
    map_time_scale,
    simulate,
)
from .stability import (
    LyapunovCertificate,
    SampleSpec,
    TheoremConstants,
    check_pt_bound,
    conditioning_ratio,
    decay_constants,
    dwell_activation_margin,
    min_dwell_time,
    verify_certificate,
)
from .switching import (
    AatParams,
    AdtParams,
    GeneratorPolicy,
    JumpSchedule,
    SwitchingSignal,
    bu_adt_bound,
    bu_adt_closed_forms,
    count_switches,
    generate_signal,
    unstable_activation,
    validate_bu_aat,
    validate_bu_adt,
)

__all__ = [
    "__version__",
    # gains and transforms
    "BlowUpParams",
    "gain",
    "normalized_gain",
    "omega",
    "dilate",
    "contract",
    "terminal_time",
    # switching signals
    "AdtParams",
    "AatParams",
    "GeneratorPolicy",
    "SwitchingSignal",
    "JumpSchedule",
    "count_switches",
    "bu_adt_bound",
    "bu_adt_closed_forms",
    "validate_bu_adt",
    "unstable_activation",
    "validate_bu_aat",
    "generate_signal",
    # hybrid systems
    "HybridTimeDomain",
    "HybridArc",
    "HybridSystemDef",
    "SolverConfig",
    "htd_stats",
    "integrate_flow",
    "apply_jump",
    "simulate",
    "map_time_scale",
    # certificates and bounds
    "LyapunovCertificate",
    "TheoremConstants",
    "SampleSpec",
    "conditioning_ratio",
    "min_dwell_time",
    "dwell_activation_margin",
    "decay_constants",
    "verify_certificate",
    "check_pt_bound",
]
