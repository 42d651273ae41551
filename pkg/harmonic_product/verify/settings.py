"""Run configuration for the verification commands.

Values are resolved with the precedence command-line flags > environment variables (prefix ``HARMONIC_PRODUCT_``) >
config file > defaults. The config file is a plain ``key = value`` list with ``#`` comments, keys being the field names
below, e.g.::

    # nightly.cfg
    tol = 1e-10
    parallelism = 4
    rho_ladder = 1e-1, 5e-2, 2.5e-2
"""
import contextvars
import enum
import pathlib
from typing import Any
from typing import Dict
from typing import Optional
from typing import Tuple

from loguru import logger
from pydantic import BaseSettings
from pydantic import Field
from pydantic import validator

from harmonic_product.core.utils.string_utils import parse_float_list
from harmonic_product.core.utils.string_utils import parse_int_range
from harmonic_product.exact.identities import Theorem
from harmonic_product.numeric.integrate import DEFAULT_MAX_EVALUATIONS
from harmonic_product.numeric.quadrature import AHatMethod

# Default k ranges sized for a full run in well under a minute
DEFAULT_K_RANGES = {
    Theorem.THM2: (1, 500),
    Theorem.THM3: (1, 25),
    Theorem.COEFF_ODD: (1, 50),
    Theorem.COEFF_EVEN: (0, 50),
}
DEFAULT_RHO_LADDER = tuple(1e-1 * 2.0**-m for m in range(6))

# Theorem spellings accepted on the command line and in config files
THEOREM_ALIASES = {"2": Theorem.THM2, "3": Theorem.THM3}

_CONFIG_FILE: contextvars.ContextVar[Optional[pathlib.Path]] = contextvars.ContextVar("config_file", default=None)
_RAW_STRING_FIELDS = {"k_range", "n_range", "rho_ladder", "theorem", "phi"}


@enum.unique
class Command(enum.Enum):
    IDENTITIES = "identities"
    AHAT = "ahat"
    PRODUCT = "product"


@enum.unique
class OutputFormat(enum.Enum):
    JSON = "json"
    CSV = "csv"
    TEXT = "text"


def read_config_file(path: pathlib.Path) -> Dict[str, str]:
    """Read ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    path = pathlib.Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file {path} does not exist")

    values = {}
    for line_number, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, separator, value = line.partition("=")
        if not separator or not key.strip():
            raise ValueError(f"{path}:{line_number}: expected 'key = value', got {line!r}")
        values[key.strip()] = value.strip()
    logger.debug(f"Read {len(values)} settings from {path}")

    return values


def _config_file_settings(settings: BaseSettings) -> Dict[str, Any]:
    path = _CONFIG_FILE.get()
    if path is None:
        return {}
    values = read_config_file(path)
    unknown = set(values) - set(settings.__fields__)
    if unknown:
        raise ValueError(f"Unknown setting(s) in {path}: {sorted(unknown)}")
    return values


class RunConfig(BaseSettings):
    command: Optional[Command] = None
    theorem: Theorem = Theorem.THM2
    k_range: Optional[Tuple[int, int]] = Field(None, description="Inclusive k interval; defaults depend on the theorem")
    n_range: Tuple[int, int] = (1, 10)
    dimension: int = Field(3, description="Dimension n of the product simulation")
    method: Optional[AHatMethod] = Field(None, description="A_hat route; `None` picks direct for n <= 2, else formula")
    tol: float = 1e-8
    rho: Optional[float] = Field(None, description="Single rho; overrides the ladder when given")
    rho_ladder: Tuple[float, ...] = DEFAULT_RHO_LADDER
    phi: str = "gaussian:1.0"
    output_format: OutputFormat = OutputFormat.JSON
    parallelism: int = 1
    rtol: float = 1e-3
    atol: float = 1e-6
    timings: bool = False
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS

    class Config:
        env_prefix = "HARMONIC_PRODUCT_"
        allow_mutation = False
        extra = "forbid"

        @classmethod
        def parse_env_var(cls, field_name: str, raw_val: str) -> Any:
            # Ranges and ladders use the same "a..b" / "x,y" spellings as the command line
            if field_name in _RAW_STRING_FIELDS:
                return raw_val
            return cls.json_loads(raw_val)

        @classmethod
        def customise_sources(cls, init_settings, env_settings, file_secret_settings):
            return init_settings, env_settings, _config_file_settings

    @classmethod
    def load(cls, config_file: Optional[pathlib.Path] = None, **overrides) -> "RunConfig":
        """Build a config from explicit overrides, the environment and an optional config file."""
        token = _CONFIG_FILE.set(config_file)
        try:
            return cls(**{key: value for key, value in overrides.items() if value is not None})
        finally:
            _CONFIG_FILE.reset(token)

    @validator("theorem", pre=True)
    def _theorem_alias(cls, theorem):
        if isinstance(theorem, str):
            theorem = theorem.strip()
            return THEOREM_ALIASES.get(theorem, theorem)
        return theorem

    @validator("k_range", "n_range", pre=True)
    def _parse_range(cls, value):
        if isinstance(value, str):
            return parse_int_range(value)
        return value

    @validator("k_range", "n_range")
    def _non_empty(cls, value):
        if value is not None and value[1] < value[0]:
            raise ValueError(f"range {value[0]}..{value[1]} is empty")
        return value

    @validator("rho_ladder", pre=True)
    def _parse_ladder(cls, ladder):
        if isinstance(ladder, str):
            return parse_float_list(ladder)
        return ladder

    @validator("rho_ladder")
    def _decreasing_ladder(cls, ladder):
        if not ladder:
            raise ValueError("rho_ladder must contain at least one value")
        if any(not rho > 0 for rho in ladder):
            raise ValueError(f"rho_ladder values must be positive, got {list(ladder)}")
        if any(later >= earlier for earlier, later in zip(ladder[:-1], ladder[1:])):
            raise ValueError(f"rho_ladder must be strictly decreasing, got {list(ladder)}")
        return ladder

    @validator("tol", "rho")
    def _positive(cls, value, field):
        if value is not None and not value > 0:
            raise ValueError(f"{field.name} must be positive, got {value}")
        return value

    @validator("rtol", "atol")
    def _non_negative(cls, value, field):
        if value < 0:
            raise ValueError(f"{field.name} must be non-negative, got {value}")
        return value

    @validator("parallelism", "max_evaluations", "dimension")
    def _at_least_one(cls, value, field):
        if value < 1:
            raise ValueError(f"{field.name} must be >= 1, got {value}")
        return value

    @property
    def resolved_k_range(self) -> Tuple[int, int]:
        return self.k_range if self.k_range is not None else DEFAULT_K_RANGES[self.theorem]

    @property
    def ladder(self) -> Tuple[float, ...]:
        return (self.rho,) if self.rho is not None else self.rho_ladder

    def method_for(self, n: int) -> AHatMethod:
        if self.method is not None:
            return self.method
        return AHatMethod.DIRECT if n <= 2 else AHatMethod.FORMULA
