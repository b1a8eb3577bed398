"""
Configuration settings for ScatterLab.
"""
import os
from dataclasses import dataclass, field
from dotenv import load_dotenv

from utils.exceptions import ConfigurationError

load_dotenv()


@dataclass
class SolverConfig:
    """Linear and nonlinear solver configuration."""
    coupling_factor: float = float(os.getenv("COUPLING_FACTOR", "1.0"))
    newton_tolerance: float = float(os.getenv("NEWTON_TOLERANCE", "1e-10"))
    step_tolerance: float = float(os.getenv("NEWTON_STEP_TOLERANCE", "1e-12"))
    max_iterations: int = int(os.getenv("NEWTON_MAX_ITERATIONS", "50"))
    trust_radius: float = float(os.getenv("TRUST_RADIUS", "1.0"))
    fixed_point_tolerance: float = float(os.getenv("FIXED_POINT_TOLERANCE", "1e-12"))
    fixed_point_max_iterations: int = int(os.getenv("FIXED_POINT_MAX_ITERATIONS", "500"))
    min_separation: float = float(os.getenv("MIN_SCATTERER_SEPARATION", "1e-8"))
    incident_amplitude: float = float(os.getenv("INCIDENT_AMPLITUDE", "1.0"))


@dataclass
class NufftConfig:
    """Gaussian-gridding NUFFT configuration."""
    oversampling: int = int(os.getenv("NUFFT_OVERSAMPLING", "2"))
    spread_width: int = int(os.getenv("NUFFT_SPREAD_WIDTH", "12"))
    chunk_size: int = int(os.getenv("NUFFT_CHUNK_SIZE", "4096"))


@dataclass
class ImagingConfig:
    """Imaging grid configuration."""
    half_width: float = float(os.getenv("IMAGE_HALF_WIDTH", "5.0"))
    samples: int = int(os.getenv("IMAGE_SAMPLES", "500"))
    direct_row_chunk: int = int(os.getenv("DIRECT_ROW_CHUNK", "8"))


@dataclass
class AppConfig:
    """Application configuration."""
    name: str = "scatterlab"
    output_directory: str = os.getenv("OUTPUT_DIRECTORY", "output")
    logs_directory: str = os.getenv("LOGS_DIRECTORY", "logs")
    presets_directory: str = os.getenv(
        "PRESETS_DIRECTORY",
        os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "presets")
    )
    log_level: str = os.getenv("LOG_LEVEL", "INFO")
    log_file: str = os.getenv("LOG_FILE", "")
    threads: int = field(default_factory=lambda: int(os.getenv("THREADS", str(os.cpu_count() or 1))))


class Settings:
    """Main settings class containing all configuration."""

    def __init__(self):
        self.solver = SolverConfig()
        self.nufft = NufftConfig()
        self.imaging = ImagingConfig()
        self.app = AppConfig()

    def validate(self) -> None:
        """Validate configuration settings."""
        if self.solver.coupling_factor <= 0:
            raise ConfigurationError("COUPLING_FACTOR must be positive")

        if self.solver.newton_tolerance <= 0 or self.solver.step_tolerance <= 0:
            raise ConfigurationError("Newton tolerances must be positive")

        if self.solver.max_iterations < 1:
            raise ConfigurationError("NEWTON_MAX_ITERATIONS must be at least 1")

        if self.solver.trust_radius <= 0:
            raise ConfigurationError("TRUST_RADIUS must be positive")

        if self.nufft.oversampling < 2:
            raise ConfigurationError("NUFFT_OVERSAMPLING must be at least 2")

        if self.nufft.spread_width < 2:
            raise ConfigurationError("NUFFT_SPREAD_WIDTH must be at least 2")

        if self.nufft.chunk_size < 1:
            raise ConfigurationError("NUFFT_CHUNK_SIZE must be at least 1")

        if self.app.threads < 1:
            raise ConfigurationError("THREADS must be at least 1")

    def worker_count(self, requested: int = 0) -> int:
        """Number of worker threads, capped by an explicit request when given."""
        if requested and requested > 0:
            return requested
        return max(1, self.app.threads)


# Global settings instance
settings = Settings()
