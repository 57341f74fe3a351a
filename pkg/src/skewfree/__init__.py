"""Free subalgebras of skew fields of fractions, certified on truncated skew Laurent series."""

from .constructions import (
    Scenario,
    scenario_heisenberg,
    scenario_prop51,
    scenario_weyl_ml,
    scenario_weyl_symmetric,
    verify_proof_identities,
)
from .freeness_certifier import FreenessReport, certify_freeness
from .ncexpr import evaluate, parse, to_string

__version__ = "0.1.0"
