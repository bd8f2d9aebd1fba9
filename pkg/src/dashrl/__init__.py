"""dashrl: a reinforcement-learning engine for analytical dashboard generation."""

__version__ = "0.1.0"

from .charts import ChartSpec, DashboardState, Encoding, Limit
from .data import Dataset, load_dataset
from .insights import InsightRecord
from .rewards import RewardBreakdown

__all__ = [
    "ChartSpec",
    "DashboardState",
    "Dataset",
    "Encoding",
    "InsightRecord",
    "Limit",
    "RewardBreakdown",
    "load_dataset",
    "__version__",
]
