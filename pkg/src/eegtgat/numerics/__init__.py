from .gradcheck import grad_check
from .tensor import Tape, Tensor, active_tape
from . import ops, rng

__all__ = ["Tensor", "Tape", "active_tape", "grad_check", "ops", "rng"]
