"""Local tensor-train surrogates with deterministic error certificates."""

from ._ltts import *  # noqa: F401,F403
from ._ltts import __version__  # noqa: F401
