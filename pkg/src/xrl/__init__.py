"""xrl: a checker and pair of derivation-guided interpreters for an
executable region logic over a small trait/class object language.

Pipeline: parse (.xrl) -> well-formedness -> entry obligations ->
certificate checking (.xrlproof) -> obligation discharge -> monitored
execution (fuel-free total, fuel-based partial) -> differential oracle.
"""

from .checker import (CheckedCertificates, CheckedDerivation, Conclusion,
                      check_derivation, check_method_specs)
from .derivation import (Certificate, CertificateFile, DNode, derivation_size,
                         dump_certificates, load_certificates)
from .diagnostics import Diagnostic
from .domain import BoundedDomain
from .effects import (Effect, locs, mod_vars, read_effects, reff,
                      region_to_effects)
from .entries import Entry, EntryHead, ReducedEntry, forder, morder
from .interp import Stuck, inter_p, inter_t, oracle_run
from .obligations import (DischargePolicy, Obligation, ObligationReport,
                          build_entry_obligations, check_entry_obligations,
                          check_wellfoundedness, discharge)
from .parser import ParseError, ParseResult, parse_cmd_text, parse_expr_text, \
    parse_program
from .printer import print_cmd, print_expr, print_program
from .runtime import (Monitors, MonitorViolation, Ok, RunOutcome, Timeout,
                      outcome_to_json)
from .state import (Loc, State, allocate, eq_except, heap_read, heap_update,
                    lookup, state_from_json, state_to_json, trunc_subst,
                    update)
from .syntax import Program
from .values import (NULL, Ptr, Value, VBool, VNat, VRegion, cast_bool,
                     cast_nat, cast_ptr, cast_region)
from .wd import df, df2, eval_a, eval_a2, eval_b, eval_b2, fp_a, fp_a2
from .wellformed import check_wellformed

__version__ = "0.1.0"
