"""Parameter-aware reservoir computing for Hamiltonian systems."""

import os as _os

_presets = _os.path.join(_os.path.dirname(__file__), "presets")
if _os.path.isdir(_presets):
    _os.environ.setdefault("HAMRC_PRESETS", _presets)

from ._hamrc import *  # noqa: E402,F401,F403
from ._hamrc import ConfigError, NumericalError, __doc__  # noqa: E402,F401
