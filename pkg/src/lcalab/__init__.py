"""Linear cellular automata over GF(2) acting on measures: exact character
integrals, entropy, and the reproduction harness."""
__version__ = "0.1.0"

from .core import (
    LEDRAPPIER,
    BitWindow,
    CyclicConfig,
    ShiftPolynomial,
    apply,
    apply_power,
    cyclic_apply_power,
    lucas_binomial,
    lucas_support,
    poly_add,
    poly_mul,
    poly_pow,
)
from .errors import (
    ConfigError,
    LCAError,
    SupportOutsideWindowError,
    WindowTooShortError,
    ZeroPolynomialError,
)
from .measures import BernoulliMeasure, BlockCode, BlockCodeMeasure, HierarchicalMeasure
from .spectral import Character, char_eval, pullback
