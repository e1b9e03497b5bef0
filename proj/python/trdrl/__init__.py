"""Time-reversal symmetry enhanced SAC: python façade over the C++ core."""

from trdrl._core import *  # noqa: F401,F403
from trdrl._core import __version__  # noqa: F401
