"""
Application Configuration
Environment-based settings using Pydantic BaseSettings
"""
from pathlib import Path
from typing import List, Optional

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Library and CLI settings loaded from environment variables"""

    # Application Settings
    APP_NAME: str = "germlab"
    APP_VERSION: str = "0.1.0"
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"

    # Reproducibility
    GERMLAB_SEED: Optional[int] = None

    # Sectioning
    DEFAULT_SCALE: float = 0.125
    DEFAULT_RESOLUTION: int = 256
    MIN_RESOLUTION: int = 32
    WINDOW_FACTOR: float = 3.0
    GLUE_CELLS: float = 4.0
    POLYGON_VERTICES: int = 64

    # Tangent cones and exponent fits
    LADDER_START: int = 4
    LADDER_STOP: int = 14
    CONVERGENCE_TOLERANCE: float = 1e-3
    COINCIDENT_DISTANCE: float = 1e-30
    MESH_RINGS: int = 8
    MESH_COLUMNS: int = 61

    # Knot invariants
    GENERICITY_TOLERANCE: float = 1e-6
    PROJECTION_RETRIES: int = 64
    SPLICE_RETRIES: int = 16
    CHORD_FRACTION: float = 0.25
    KNOT_TABLE_PATH: Optional[str] = None

    # Bi-Lipschitz certification
    DISTORTION_SAMPLES: int = 10000
    DISTORTION_LIMIT: float = 100.0
    DISTORTION_STABILITY: float = 0.10
    ON_TARGET_TOLERANCE: float = 1e-6

    class Config:
        env_file = ".env"
        case_sensitive = True

    @property
    def ladder(self) -> List[float]:
        """Default decreasing dyadic ladder 2^-LADDER_START ... 2^-LADDER_STOP"""
        return [2.0 ** -j for j in range(self.LADDER_START, self.LADDER_STOP + 1)]

    @property
    def knot_table_file(self) -> Path:
        """Knot table location, bundled table unless overridden"""
        if self.KNOT_TABLE_PATH:
            return Path(self.KNOT_TABLE_PATH)
        return Path(__file__).parent / "data" / "knot_table.json"


# Global settings instance
settings = Settings()
