"""Stream runtime monitoring: a Lola specification language front end,
static analysis, an incremental evaluation engine and log drivers."""

from lola.analysis import AnalysisResult, analyze
from lola.engine import Event, Monitor, StepOutput, run_trace
from lola.errors import LolaError
from lola.parser import desugar, merge_specifications, parse_specification
from lola.syntax import Specification, StreamType

__version__ = "0.1.0"

__all__ = [
    "AnalysisResult",
    "Event",
    "LolaError",
    "Monitor",
    "Specification",
    "StepOutput",
    "StreamType",
    "analyze",
    "desugar",
    "merge_specifications",
    "parse_specification",
    "run_trace",
]
