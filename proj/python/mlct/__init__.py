from ._mlct import *  # noqa: F401,F403
from ._mlct import engine_version  # noqa: F401
