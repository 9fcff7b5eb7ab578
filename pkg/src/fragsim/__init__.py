"""fragsim: exact analysis and stochastic simulation of fragmented constrained chains."""

from .models import (
    BathSpec,
    Configuration,
    Model,
    applicable_moves,
    apply_bath,
    invariant_label,
    make_bath,
    make_model,
)

__version__ = "0.1.0"

__all__ = [
    "BathSpec",
    "Configuration",
    "Model",
    "applicable_moves",
    "apply_bath",
    "invariant_label",
    "make_bath",
    "make_model",
    "__version__",
]
