"""Engine configuration loaded from environment variables."""

from pathlib import Path

from pydantic_settings import BaseSettings

# Always resolve .env relative to this file, no matter where the CLI is started from
_ENV_FILE = Path(__file__).resolve().parent.parent / ".env"


class Settings(BaseSettings):
    """Numerical defaults; every value can be overridden from env or the .env file."""

    # ── Runtime ─────────────────────────────────────────────────────────
    DEBUG: bool = False
    THREADS: int = 1
    SEED: int = 0

    # ── Rationality & root tests ────────────────────────────────────────
    RATIONAL_EPS: float = 1e-12
    RATIONAL_DENOMINATOR_BOUND: int = 1000
    LEGENDRE_ROOT_TOL: float = 1e-10  # against max-normalised P_p^m

    # ── Expansion ───────────────────────────────────────────────────────
    DEFAULT_N_MAX: int = 20
    FIT_RCOND: float = 1e-12

    # ── Collocation oracle ──────────────────────────────────────────────
    ORACLE_SIGMA_CUT: float = 1e-9
    ORACLE_GAP: float = 1e3
    ORACLE_GRAY_BAND: float = 10.0      # empty nullspace still needs σ_min > cut × band
    ORACLE_MASS_TOL: float = 1e-8
    ORACLE_DEGREE_PADDING: int = 8
    ORACLE_RADIUS: float = 0.5          # contour radius in wavelengths 2π/√λ
    ORACLE_IMPEDANCE_RADIUS: float = 0.05  # cap on R·|η|
    ORACLE_RADIAL_NODES: int = 20
    ORACLE_ROW_FACTOR: int = 3

    # ── Integral order estimator ────────────────────────────────────────
    QUAD_NODES: int = 48
    ORDER_ROUNDING: float = 0.2

    # ── Scattering (MFS) ────────────────────────────────────────────────
    MFS_SOURCES: int = 600
    MFS_OVERSAMPLING: float = 2.0
    MFS_SHRINK: float = 0.7
    MFS_RESIDUAL_TOL: float = 1e-3
    MFS_FACETED_RESIDUAL_TOL: float = 0.75  # L² Robin residual on polyhedra, bounded below by the edge singularity
    MFS_RCOND: float = 1e-13
    FAR_FIELD_TOL: float = 1e-3
    FAR_FIELD_NODES: int = 24
    MC_SAMPLES: int = 10_000

    model_config = {"env_file": str(_ENV_FILE), "case_sensitive": True, "extra": "ignore"}


settings = Settings()
