"""Explicit-time verification kernel for timed two-state object invariants."""
from .lang import Diagnostic, ModelError
from .loader import build_model, initial_states, load_model, parse_model

__all__ = ["Diagnostic", "ModelError", "build_model", "initial_states",
           "load_model", "parse_model"]
__version__ = "0.1.0"
