"""
Configuration management for echelon
"""
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

class Settings:
    """Process-wide settings (per-run choices live in RunConfig)"""

    # Output
    OUTPUT_DIR: str = os.getenv('ECHELON_OUTPUT_DIR', 'results')

    # Numerics
    # Band around zero inside which a strict inequality is reported as inconclusive
    TOLERANCE: float = float(os.getenv('ECHELON_TOLERANCE', '1e-8'))
    # Default grid step for interval maxima, as a fraction of the half-wingspan b
    GRID_FRACTION: float = float(os.getenv('ECHELON_GRID_FRACTION', '1e-3'))
    # Wake model validity, |x| in multiples of b
    VALIDITY_WINDOW: float = float(os.getenv('ECHELON_VALIDITY_WINDOW', '100'))
    # Assumption 2/3 verification window, |x| in multiples of b
    ASSUMPTION_WINDOW: float = float(os.getenv('ECHELON_ASSUMPTION_WINDOW', '20'))

    # Restarts
    WORKERS: int = int(os.getenv('ECHELON_WORKERS', '1'))

    # Logging
    LOG_LEVEL: str = os.getenv('ECHELON_LOG_LEVEL', 'INFO')

    @classmethod
    def validate(cls):
        """Validate settings"""
        errors = []

        if not cls.TOLERANCE > 0:
            errors.append("ECHELON_TOLERANCE must be positive")

        if not 0 < cls.GRID_FRACTION < 1:
            errors.append("ECHELON_GRID_FRACTION must lie in (0, 1)")

        if not cls.VALIDITY_WINDOW > 0:
            errors.append("ECHELON_VALIDITY_WINDOW must be positive")

        if not cls.ASSUMPTION_WINDOW > 0:
            errors.append("ECHELON_ASSUMPTION_WINDOW must be positive")

        if cls.WORKERS < 1:
            errors.append("ECHELON_WORKERS must be at least 1")

        if cls.LOG_LEVEL.upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            errors.append(f"Unknown ECHELON_LOG_LEVEL: {cls.LOG_LEVEL}")

        if errors:
            raise ValueError("Configuration errors:\n" + "\n".join(errors))

        return True

# Singleton instance
settings = Settings()
