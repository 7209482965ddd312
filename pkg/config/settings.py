# config/settings.py
import os
import sys
import json
from typing import Optional, Dict, Any
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from core.exceptions import ConfigurationError
from models.schemas import KernelFamily, QSource


class DataSettings(BaseSettings):
    """Dataset parsing settings"""
    delimiter: str = Field(default="auto", description="auto, tab, space, comma or a literal character")
    threshold: Optional[float] = Field(default=None, description="Keep pairs whose rating is >= threshold")
    skip_header: bool = False
    comment_prefixes: str = "#%"

    model_config = SettingsConfigDict(env_prefix="KOMD_DATA_", env_file=".env", extra="ignore")


class KernelSettings(BaseSettings):
    """Dot-product kernel settings"""
    family: KernelFamily = KernelFamily.LINEAR
    c: float = Field(default=1.0, ge=0.0)
    degree: int = Field(default=2, ge=1)
    gamma: float = Field(default=1.0, gt=0.0)
    reduced: bool = True

    # non-reduced kernels with k0 > 0 produce dense grams
    dense_cap: int = Field(default=2000, ge=1)

    model_config = SettingsConfigDict(env_prefix="KOMD_KERNEL_", env_file=".env", extra="ignore")


class SolverSettings(BaseSettings):
    """Per-user simplex QP settings"""
    lambda_p: float = Field(default=0.01, ge=0.0)
    tol: float = Field(default=1e-6, gt=0.0)
    max_iter: int = Field(default=1000, ge=1)
    step_scale: float = Field(default=1.0, gt=0.0, lt=2.0)
    q_source: QSource = QSource.TILDE
    check_monotone: bool = False

    # dense CF-OMD oracle
    reference_cap: int = Field(default=500, ge=2)
    reference_lambda_n: float = Field(default=1e8, ge=0.0)
    reference_outer_iter: int = Field(default=200, ge=1)

    model_config = SettingsConfigDict(env_prefix="KOMD_SOLVER_", env_file=".env", extra="ignore")


class BaselineSettings(BaseSettings):
    """MSDW asymmetric-cosine baseline settings"""
    alpha: float = Field(default=0.5, ge=0.0, le=1.0)
    locality_q: float = Field(default=1.0, ge=1.0)

    model_config = SettingsConfigDict(env_prefix="KOMD_MSDW_", env_file=".env", extra="ignore")


class EvalSettings(BaseSettings):
    """Evaluation protocol settings"""
    folds: int = Field(default=5, ge=2)
    seed: int = 42
    top_n: int = Field(default=500, ge=1)
    min_ratings: int = Field(default=5, ge=1)

    model_config = SettingsConfigDict(env_prefix="KOMD_EVAL_", env_file=".env", extra="ignore")


class RuntimeSettings(BaseSettings):
    """Execution and output settings"""
    threads: int = Field(default=1, ge=1)
    output_dir: str = "out"
    cache_dir: str = "data/cache"
    use_cache: bool = True
    log_level: str = "INFO"
    log_format: str = Field(default="text", pattern="^(text|json)$")
    progress: bool = False

    model_config = SettingsConfigDict(env_prefix="KOMD_RUNTIME_", env_file=".env", extra="ignore")


class Settings(BaseSettings):
    """Main application settings"""

    title: str = "Kernel CF-OMD Recommender"
    version: str = "1.0.0"

    data: DataSettings = Field(default_factory=DataSettings)
    kernel: KernelSettings = Field(default_factory=KernelSettings)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    baseline: BaselineSettings = Field(default_factory=BaselineSettings)
    eval: EvalSettings = Field(default_factory=EvalSettings)
    runtime: RuntimeSettings = Field(default_factory=RuntimeSettings)

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )


class ConfigManager:
    """JSON run-configuration file with dotted-key access"""

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = Path(config_file) if config_file else None
        self._cache: Dict[str, Any] = {}
        self.load_config()

    def load_config(self) -> Dict[str, Any]:
        """Load configuration from file"""
        if self.config_file is None:
            self._cache = {}
            return self._cache

        try:
            with open(self.config_file, 'r') as f:
                self._cache = json.load(f)
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {self.config_file}")
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"config file {self.config_file} is not valid JSON: {e}")

        if not isinstance(self._cache, dict):
            raise ConfigurationError(f"config file {self.config_file} must hold a JSON object")
        return self._cache

    def save_config(self, path: Optional[str] = None) -> Path:
        """Save configuration to file"""
        target = Path(path) if path else self.config_file
        if target is None:
            raise ValueError("no config file path to save to")
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, 'w') as f:
            json.dump(self._cache, f, indent=2, sort_keys=True)
        return target

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value"""
        value: Any = self._cache
        try:
            for k in key.split('.'):
                value = value[k]
            return value
        except (KeyError, TypeError):
            return default

    def set(self, key: str, value: Any) -> None:
        """Set configuration value in memory"""
        keys = key.split('.')
        config = self._cache
        for k in keys[:-1]:
            config = config.setdefault(k, {})
        config[keys[-1]] = value

    @classmethod
    def from_settings(cls, settings: "Settings") -> "ConfigManager":
        """In-memory manager pre-filled with every tunable's effective value"""
        manager = cls()
        manager._cache = cls.default_config(settings)
        return manager

    def get_config_dict(self) -> Dict[str, Any]:
        """Get entire configuration as dictionary"""
        return json.loads(json.dumps(self._cache))

    @staticmethod
    def default_config(settings: "Settings") -> Dict[str, Any]:
        """Template holding every tunable with its effective value"""
        return settings.model_dump(mode="json", exclude={"title", "version"})


def get_settings() -> Settings:
    """Fresh settings, re-reading the environment and .env"""
    return Settings()


def get_environment_info(settings: Settings) -> Dict[str, Any]:
    """Get environment information"""
    return {
        "python_version": sys.version,
        "platform": sys.platform,
        "working_directory": os.getcwd(),
        "env_overrides": sorted(k for k in os.environ if k.startswith("KOMD_")),
        "settings": settings.model_dump(mode="json"),
    }
