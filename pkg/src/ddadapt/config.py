"""
Run configuration.

A run is described by an INI file with the sections [geometry],
[kernel], [stochastic], [partition], [boundary], [pdf], [mc] and [run].
Every key is optional and defaults to the benchmark value; unknown
sections or keys are errors. All problems found while reading a file are
reported together in one ConfigError.

Example file:

    [stochastic]
    d = 6
    smolyak_level_full = 4
    r = auto

    [boundary]
    case = all_dirichlet
"""

import configparser
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Type, TypeVar
from typing import Union

from ddadapt.constants import (
    DEFAULT_A0,
    DEFAULT_CHUNK_SIZE,
    DEFAULT_KL_DIMENSION,
    DEFAULT_L1,
    DEFAULT_L2,
    DEFAULT_MC_SAMPLES,
    DEFAULT_N1,
    DEFAULT_N2,
    DEFAULT_SMOLYAK_LEVEL_COARSE,
    DEFAULT_SMOLYAK_LEVEL_ETA,
    DEFAULT_SMOLYAK_LEVEL_FULL,
    DEFAULT_PARTITION,
    DEFAULT_PC_ORDER,
    DEFAULT_PDF_SAMPLES,
    DEFAULT_R_TOLERANCE,
    DEFAULT_REDUCED_DIMENSION,
    DEFAULT_SEED,
    DEFAULT_SIGMA_A,
    DEFAULT_WORKERS,
    DOMAIN_BOX,
    MAX_LEVEL,
    MIN_MC_SAMPLES,
    MIN_PDF_SAMPLES,
    LEVEL_OFFSET,
    PDF_POINTS,
    BcVariant,
    GrowthRule,
    KlMethod,
    VarianceConvention,
)
from ddadapt.exceptions import ConfigError
from ddadapt.models import BcCase, Box

Point = Tuple[float, float]
T = TypeVar("T")


def _parse_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError(f"expected an integer, got {value!r}")
    if isinstance(value, int):
        return value
    text = str(value).strip()
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def _parse_float(value: Any) -> float:
    if isinstance(value, bool):
        raise ValueError(f"expected a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ValueError(f"expected a number, got {value!r}") from None


def _parse_optional_int(value: Any) -> Optional[int]:
    """An integer, or None for the keyword 'auto'."""
    if value is None or str(value).strip().lower() == "auto":
        return None
    return _parse_int(value)


def _parse_str(value: Any) -> str:
    return str(value).strip()


def _parse_points(value: Any) -> Tuple[Point, ...]:
    """Points as 'x1 x2; x1 x2; ...' or a sequence of pairs."""
    if isinstance(value, str):
        text = value.replace(",", " ")
        chunks = [chunk for chunk in text.split(";") if chunk.strip()]
        pairs: List[Any] = [chunk.split() for chunk in chunks]
    else:
        pairs = list(value)
    points = []
    for pair in pairs:
        if len(pair) != 2:
            raise ValueError(f"expected two coordinates per point, got {pair!r}")
        points.append((_parse_float(pair[0]), _parse_float(pair[1])))
    return tuple(points)


def _enum_parser(cls: Type[Any]) -> Callable[[Any], Any]:
    def parse(value: Any) -> Any:
        return value if isinstance(value, cls) else cls.from_string(str(value))

    return parse


def _key(default: Any, parse: Callable[[Any], Any]) -> Any:
    return field(default=default, metadata={"parse": parse})


@dataclass(frozen=True)
class GeometryConfig:
    """Domain box and grid resolution."""

    x1_min: float = _key(DOMAIN_BOX[0], _parse_float)
    x1_max: float = _key(DOMAIN_BOX[1], _parse_float)
    x2_min: float = _key(DOMAIN_BOX[2], _parse_float)
    x2_max: float = _key(DOMAIN_BOX[3], _parse_float)
    n1: int = _key(DEFAULT_N1, _parse_int)
    n2: int = _key(DEFAULT_N2, _parse_int)

    @property
    def box(self) -> Box:
        return Box(self.x1_min, self.x1_max, self.x2_min, self.x2_max)


@dataclass(frozen=True)
class KernelConfig:
    """Lognormal coefficient and its squared-exponential covariance."""

    a0: float = _key(DEFAULT_A0, _parse_float)
    sigma_a: float = _key(DEFAULT_SIGMA_A, _parse_float)
    l1: float = _key(DEFAULT_L1, _parse_float)
    l2: float = _key(DEFAULT_L2, _parse_float)
    convention: VarianceConvention = _key(
        VarianceConvention.BENCHMARK, _enum_parser(VarianceConvention)
    )
    kl_method: KlMethod = _key(KlMethod.KRONECKER, _enum_parser(KlMethod))


@dataclass(frozen=True)
class StochasticConfig:
    """
    Germ dimension, PC order and sparse-grid levels.

    Levels are given in the 1-based convention of the benchmark tables;
    the level_* properties give the 0-based levels used by the code.
    r = None (written 'auto') picks the dimension per subdomain.
    """

    d: int = _key(DEFAULT_KL_DIMENSION, _parse_int)
    p: int = _key(DEFAULT_PC_ORDER, _parse_int)
    smolyak_level_full: int = _key(DEFAULT_SMOLYAK_LEVEL_FULL, _parse_int)
    smolyak_level_coarse: int = _key(DEFAULT_SMOLYAK_LEVEL_COARSE, _parse_int)
    smolyak_level_eta: int = _key(DEFAULT_SMOLYAK_LEVEL_ETA, _parse_int)
    r: Optional[int] = _key(DEFAULT_REDUCED_DIMENSION, _parse_optional_int)
    r_tolerance: float = _key(DEFAULT_R_TOLERANCE, _parse_float)
    growth_rule: GrowthRule = _key(GrowthRule.LINEAR, _enum_parser(GrowthRule))
    coarse_spatial_factor: int = _key(1, _parse_int)

    @property
    def level_full(self) -> int:
        return self.smolyak_level_full - LEVEL_OFFSET

    @property
    def level_coarse(self) -> int:
        return self.smolyak_level_coarse - LEVEL_OFFSET

    @property
    def level_eta(self) -> int:
        return self.smolyak_level_eta - LEVEL_OFFSET


@dataclass(frozen=True)
class PartitionConfig:
    nx: int = _key(DEFAULT_PARTITION[0], _parse_int)
    ny: int = _key(DEFAULT_PARTITION[1], _parse_int)


@dataclass(frozen=True)
class BoundaryConfig:
    """Boundary case and a constant source term."""

    case: BcVariant = _key(BcVariant.MIXED, _enum_parser(BcVariant))
    source: float = _key(0.0, _parse_float)

    @property
    def bc(self) -> BcCase:
        return BcCase.from_variant(self.case)


@dataclass(frozen=True)
class PdfConfig:
    points: Tuple[Point, ...] = _key(tuple(PDF_POINTS), _parse_points)
    samples: int = _key(DEFAULT_PDF_SAMPLES, _parse_int)


@dataclass(frozen=True)
class McConfig:
    samples: int = _key(DEFAULT_MC_SAMPLES, _parse_int)
    realizations: int = _key(0, _parse_int)


@dataclass(frozen=True)
class RunSettings:
    """Seed, parallelism and output location."""

    seed: int = _key(DEFAULT_SEED, _parse_int)
    workers: int = _key(DEFAULT_WORKERS, _parse_int)
    chunk_size: int = _key(DEFAULT_CHUNK_SIZE, _parse_int)
    output_dir: str = _key("ddadapt-out", _parse_str)


_SECTIONS: Dict[str, Type[Any]] = {
    "geometry": GeometryConfig,
    "kernel": KernelConfig,
    "stochastic": StochasticConfig,
    "partition": PartitionConfig,
    "boundary": BoundaryConfig,
    "pdf": PdfConfig,
    "mc": McConfig,
    "run": RunSettings,
}


@dataclass(frozen=True)
class RunConfig:
    """
    Complete description of a benchmark run.

    Example:
        >>> config = RunConfig.from_file("bench.ini").with_overrides(workers=4)
        >>> config.stochastic.level_full
        4
    """

    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    stochastic: StochasticConfig = field(default_factory=StochasticConfig)
    partition: PartitionConfig = field(default_factory=PartitionConfig)
    boundary: BoundaryConfig = field(default_factory=BoundaryConfig)
    pdf: PdfConfig = field(default_factory=PdfConfig)
    mc: McConfig = field(default_factory=McConfig)
    run: RunSettings = field(default_factory=RunSettings)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        """
        Read an INI file.

        Raises:
            ConfigError: If the file is missing, unreadable or invalid
        """
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, encoding="utf-8") as handle:
                parser.read_file(handle)
        except OSError as e:
            raise ConfigError(
                "Cannot read configuration", [f"{path}: {e.strerror}"]
            ) from e
        except configparser.Error as e:
            raise ConfigError("Malformed configuration", [str(e)]) from e
        return cls.from_dict({name: dict(parser[name]) for name in parser.sections()})

    @classmethod
    def from_dict(cls, data: Mapping[str, Mapping[str, Any]]) -> "RunConfig":
        """
        Build from {section: {key: value}}; values may be strings or typed.

        Raises:
            ConfigError: Listing every unknown key, bad value and violated constraint
        """
        errors: List[str] = []
        sections: Dict[str, Any] = {}
        for name, items in data.items():
            if name not in _SECTIONS:
                errors.append(f"unknown section [{name}]")
                continue
            sections[name] = _read_section(_SECTIONS[name], name, items, errors)
        config = cls(**sections)
        errors.extend(config.problems())
        if errors:
            raise ConfigError("Invalid configuration", errors)
        return config

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        """Convert to {section: {key: value}} with plain values."""
        out: Dict[str, Dict[str, Any]] = {}
        for name in _SECTIONS:
            values = asdict(getattr(self, name))
            for key, value in values.items():
                if hasattr(value, "value"):
                    values[key] = value.value
            out[name] = values
        return out

    def write(self, path: Union[str, Path]) -> None:
        """Write the configuration as an INI file that from_file reads back."""
        parser = configparser.ConfigParser(interpolation=None)
        for name, values in self.to_dict().items():
            parser[name] = {key: _format_value(value) for key, value in values.items()}
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            parser.write(handle)

    def with_overrides(
        self,
        seed: Optional[int] = None,
        workers: Optional[int] = None,
        output_dir: Optional[str] = None,
    ) -> "RunConfig":
        """Copy with command-line overrides applied; None keeps the file value."""
        changes: Dict[str, Any] = {}
        if seed is not None:
            changes["seed"] = seed
        if workers is not None:
            changes["workers"] = workers
        if output_dir is not None:
            changes["output_dir"] = str(output_dir)
        config = replace(self, run=replace(self.run, **changes))
        problems = config.problems()
        if problems:
            raise ConfigError("Invalid configuration", problems)
        return config

    def problems(self) -> List[str]:
        """Constraint violations, one line each."""
        g, k, s, part = self.geometry, self.kernel, self.stochastic, self.partition
        errors: List[str] = []
        if not (g.x1_max > g.x1_min and g.x2_max > g.x2_min):
            errors.append("[geometry] box must have positive extents")
        if g.n1 < 2 or g.n2 < 2:
            errors.append("[geometry] n1 and n2 must be at least 2")
        if k.a0 <= 0:
            errors.append("[kernel] a0 must be positive")
        if k.sigma_a < 0:
            errors.append("[kernel] sigma_a must be non-negative")
        if k.l1 <= 0 or k.l2 <= 0:
            errors.append("[kernel] correlation lengths must be positive")
        if s.d < 1:
            errors.append("[stochastic] d must be at least 1")
        if s.p < 1:
            errors.append("[stochastic] p must be at least 1")
        for key in ("smolyak_level_full", "smolyak_level_coarse", "smolyak_level_eta"):
            level = getattr(s, key)
            if not LEVEL_OFFSET <= level <= MAX_LEVEL + LEVEL_OFFSET:
                errors.append(
                    f"[stochastic] {key} must lie in "
                    f"{LEVEL_OFFSET}..{MAX_LEVEL + LEVEL_OFFSET}"
                )
        if s.r is not None and not 1 <= s.r <= s.d:
            errors.append("[stochastic] r must lie in 1..d or be 'auto'")
        if not 0.0 < s.r_tolerance < 1.0:
            errors.append("[stochastic] r_tolerance must lie in (0, 1)")
        if s.coarse_spatial_factor < 1:
            errors.append("[stochastic] coarse_spatial_factor must be at least 1")
        elif g.n1 >= 2 and g.n2 >= 2 and (
            (g.n1 - 1) % s.coarse_spatial_factor or (g.n2 - 1) % s.coarse_spatial_factor
        ):
            errors.append(
                "[stochastic] coarse_spatial_factor must divide n1-1 and n2-1"
            )
        if part.nx < 1 or part.ny < 1:
            errors.append("[partition] nx and ny must be at least 1")
        elif g.n1 >= 2 and g.n2 >= 2 and ((g.n1 - 1) % part.nx or (g.n2 - 1) % part.ny):
            errors.append("[partition] nx must divide n1-1 and ny must divide n2-1")
        if self.boundary.case is BcVariant.CONSTANT:
            errors.append("[boundary] case must be mixed or all_dirichlet")
        box = g.box
        for point in self.pdf.points:
            if not box.contains(point):
                errors.append(f"[pdf] point {point} lies outside the domain")
        if self.pdf.samples < MIN_PDF_SAMPLES:
            errors.append(f"[pdf] samples must be at least {MIN_PDF_SAMPLES}")
        if self.mc.samples < MIN_MC_SAMPLES:
            errors.append(f"[mc] samples must be at least {MIN_MC_SAMPLES}")
        if not 0 <= self.mc.realizations <= self.mc.samples:
            errors.append("[mc] realizations must lie between 0 and samples")
        if self.run.seed < 0:
            errors.append("[run] seed must be non-negative")
        if self.run.workers < 1:
            errors.append("[run] workers must be at least 1")
        if self.run.chunk_size < 1:
            errors.append("[run] chunk_size must be at least 1")
        return errors


def _read_section(
    cls: Type[T], name: str, items: Mapping[str, Any], errors: List[str]
) -> T:
    known = {f.name: f for f in fields(cls)}  # type: ignore[arg-type]
    values: Dict[str, Any] = {}
    for key, raw in items.items():
        if key not in known:
            errors.append(f"[{name}] unknown key '{key}'")
            continue
        try:
            values[key] = known[key].metadata["parse"](raw)
        except ValueError as e:
            errors.append(f"[{name}] {key}: {e}")
    return cls(**values)


def _format_value(value: Any) -> str:
    if value is None:
        return "auto"
    if isinstance(value, (tuple, list)):
        return "; ".join(f"{x1!r} {x2!r}" for x1, x2 in value)
    return str(value)
