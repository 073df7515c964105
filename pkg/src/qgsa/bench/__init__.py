from .config import ConfigError, RunConfig, load_config
from .runner import compare, run_seeds, train

__all__ = ["ConfigError", "RunConfig", "compare", "load_config", "run_seeds", "train"]
