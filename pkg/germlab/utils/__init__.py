from .builder import GermBuilder
from .config_manager import ConfigManager
from .data_loader import DataLoader, GermLibrary
from .task_manager import TaskManager

__all__ = [
    "ConfigManager",
    "DataLoader",
    "GermBuilder",
    "GermLibrary",
    "TaskManager",
]
