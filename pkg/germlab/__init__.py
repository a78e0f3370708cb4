# germlab - 0 处芽的精确算术、芽序判定与拓扑实验

from .core import *  # noqa: F401,F403
from .core import __all__ as _core_all

__version__ = "1.0.0"

__all__ = list(_core_all) + ["__version__"]
