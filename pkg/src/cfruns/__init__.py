"""Longest runs of continued-fraction digits: certified expansion, Gauss-measure
bounds, streaming run statistics and Monte Carlo envelopes."""

__version__ = "0.1.0"

from .cf_engine import (BUILTIN_CONSTANTS, CertifiedReal, Convergent, Cylinder, Word,
                        cylinder_of, expand, from_decimal, from_rational)
from .errors import (AssumptionUnsatisfiable, CFRunsError, EmptyWord, InvalidInterval,
                     PrecisionExhausted, RationalTerminated, ScheduleTooLarge, StreamEnded,
                     TooLarge)
from .gauss_model import (centering, check_assumption2, check_assumption3, cylinder_measure,
                          gauss_measure_interval, growth_constants)
from .run_stats import RunState, checkpoint_series, longest_run_fixed, longest_run_max
