"""shearlab: numerical laboratory for shear-induced chaos in pulse-forced
limit cycles."""

__version__ = "0.1.0"

from .dsl import FieldProgram, JetValue, ParseError, FieldDomainError, parse_field, eval_jet
from .dynsys import (
    PulseSchedule,
    IntegratorConfig,
    integrate,
    kick_map,
    relaxation_map,
    time_T_map,
)
from .kernels import BACKEND as kernel_backend
