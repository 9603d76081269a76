"""Water-plant digital twin with Modbus logging and ML-backed operator alerting."""

__version__ = "0.1.0"

from .scenarios import ScenarioKind, AffectedComponent, MitigationAction, MitigationKind  # noqa: F401
from .config import PlantParams, InjectionParams, EpisodeConfig, PipelineConfig, TrainConfig  # noqa: F401
