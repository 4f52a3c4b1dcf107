"""Executable model of a calculus of concurrent revisions."""

from .syntax import *  # noqa: F401,F403
from .binding import *  # noqa: F401,F403
from .semantics import *  # noqa: F401,F403
from .frontend import *  # noqa: F401,F403
from .analysis import *  # noqa: F401,F403

__version__ = "0.1.0"
