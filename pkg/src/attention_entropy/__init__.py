"""Information-theoretic analysis of video attention time series."""

from .analysis import AnalysisConfig, Dataset, analyze_snapshots, run_analysis
from .infotheory import (
    BinningConfig,
    ProbabilityDistribution,
    build_distribution,
    entropy,
    kl_divergence,
    symmetric_divergence,
)
from .synthgen import GeneratorConfig, generate
from .timeseries import Feed, Grid, Metric, NormalizationMode, Snapshot

__version__ = "0.1.0"
