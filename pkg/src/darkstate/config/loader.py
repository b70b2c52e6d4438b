"""Run configuration: YAML file merged over packaged defaults, validated strictly."""

import copy
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from darkstate.core.errors import ConfigError
from darkstate.core.models import (
    DeviceParams,
    DriveParams,
    SpectroscopyMode,
    TargetState,
    ghz_to_angular,
    mhz_to_angular,
)
from darkstate.experiments.lifetime import LifetimeConfig
from darkstate.experiments.spectroscopy import SpectroscopyConfig

logger = logging.getLogger(__name__)

DEFAULTS_PATH = Path(__file__).parent.parent / "data" / "defaults.yaml"
HASHED_SECTIONS = ("device", "drive", "experiment")


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSpec(_Section):
    """Evenly spaced grid, endpoints included."""

    start: float
    stop: float
    num: int = Field(ge=1)

    @model_validator(mode="after")
    def _distinct_endpoints(self) -> "GridSpec":
        if self.num > 1 and self.start == self.stop:
            raise ValueError("start and stop must differ when num > 1")
        return self

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


class DeviceSection(_Section):
    omega_r_ghz: float = Field(gt=0)
    omega_q_ghz: float = Field(gt=0)
    g_mhz: float = Field(ge=0)
    kappa_mhz: float = Field(ge=0)
    t1_intrinsic_us: Optional[float] = Field(default=None, gt=0)
    t_phi_ns: Optional[float] = Field(default=None, gt=0)
    n_max: int = Field(default=3, ge=2)
    n_qubits: int = Field(default=2, ge=2)
    e_j_ghz: Optional[float] = Field(default=None, gt=0)
    e_c_mhz: Optional[float] = Field(default=None, gt=0)


class DriveSection(_Section):
    epsilon_mhz: float = Field(ge=0)
    xi: float = Field(default=1.0, ge=0)
    phi_rad: float = 0.0
    omega_d_ghz: Optional[float] = Field(default=None, gt=0)


class ExperimentSection(_Section):
    type: Literal["dressed", "spectroscopy", "lifetime", "sweep"] = "dressed"
    mode: SpectroscopyMode = SpectroscopyMode.ANALYTIC
    phase_offset_rad: float = 0.0
    phi_grid: GridSpec
    omega_d_grid_ghz: GridSpec
    target: TargetState = TargetState.PSI_A
    delta_mhz: Optional[float] = None
    delay_grid_ns: GridSpec
    delta_grid_mhz: List[float] = Field(min_length=1)
    pulse_epsilon_mhz: Optional[float] = Field(default=None, gt=0)
    uncoupled_partner_offset_mhz: float = -1000.0
    max_concurrent: int = Field(default=4, ge=1)


class OutputSection(_Section):
    directory: str = "results"
    formats: List[Literal["csv", "json", "md"]] = Field(default=["csv", "json"], min_length=1)


class RunConfig(_Section):
    """Validated run configuration in the linear units of the file."""

    device: DeviceSection
    drive: DriveSection
    experiment: ExperimentSection
    output: OutputSection

    def device_params(self) -> DeviceParams:
        """Device in rad/ns; a null T1 or T_2,phi gives a zero rate."""
        d = self.device
        gamma_i = 1.0 / (d.t1_intrinsic_us * 1e3) if d.t1_intrinsic_us else 0.0
        gamma_phi = 1.0 / d.t_phi_ns if d.t_phi_ns else 0.0
        return DeviceParams.uniform(
            omega_r=ghz_to_angular(d.omega_r_ghz),
            omega_q=ghz_to_angular(d.omega_q_ghz),
            g=mhz_to_angular(d.g_mhz),
            kappa=mhz_to_angular(d.kappa_mhz),
            gamma_i=gamma_i,
            gamma_phi=gamma_phi,
            n_max=d.n_max,
            n_qubits=d.n_qubits,
        )

    def drive_params(self) -> DriveParams:
        omega_d_ghz = self.drive.omega_d_ghz or self.device.omega_q_ghz
        return DriveParams(
            epsilon=mhz_to_angular(self.drive.epsilon_mhz),
            xi=self.drive.xi,
            phi=self.drive.phi_rad,
            omega_d=ghz_to_angular(omega_d_ghz),
        )

    def delta(self) -> float:
        """Qubit-cavity detuning in rad/ns."""
        if self.experiment.delta_mhz is not None:
            return mhz_to_angular(self.experiment.delta_mhz)
        return ghz_to_angular(self.device.omega_q_ghz - self.device.omega_r_ghz)

    def spectroscopy_config(self) -> SpectroscopyConfig:
        e = self.experiment
        return SpectroscopyConfig(
            device=self.device_params(),
            epsilon=mhz_to_angular(self.drive.epsilon_mhz),
            xi=self.drive.xi,
            phi_grid=tuple(e.phi_grid.values()),
            omega_d_grid=tuple(ghz_to_angular(f) for f in e.omega_d_grid_ghz.values()),
            phase_offset=e.phase_offset_rad,
            max_concurrent=e.max_concurrent,
        )

    def lifetime_config(self) -> LifetimeConfig:
        e = self.experiment
        pulse = mhz_to_angular(e.pulse_epsilon_mhz) if e.pulse_epsilon_mhz else None
        return LifetimeConfig(
            device=self.device_params(),
            target=e.target,
            delta=self.delta(),
            delay_grid=tuple(e.delay_grid_ns.values()),
            pulse_epsilon=pulse,
            partner_offset=mhz_to_angular(e.uncoupled_partner_offset_mhz),
        )

    def delta_grid(self) -> List[float]:
        return [mhz_to_angular(d) for d in self.experiment.delta_grid_mhz]

    def physics_dump(self) -> Dict[str, Any]:
        """Device, drive and experiment sections as plain JSON values."""
        dumped = self.model_dump(mode="json")
        return {name: dumped[name] for name in HASHED_SECTIONS}

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of every section that affects results."""
        canonical = json.dumps(self.physics_dump(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(
        self,
        *,
        n_max: Optional[int] = None,
        mode: Optional[Union[SpectroscopyMode, str]] = None,
        directory: Optional[str] = None,
        formats: Optional[Sequence[str]] = None,
    ) -> "RunConfig":
        """Copy with command-line overrides applied and re-validated."""
        data = self.model_dump(mode="json")
        if n_max is not None:
            data["device"]["n_max"] = n_max
        if mode is not None:
            data["experiment"]["mode"] = SpectroscopyMode(mode).value
        if directory is not None:
            data["output"]["directory"] = directory
        if formats is not None:
            data["output"]["formats"] = list(formats)
        return _validate(data, None)


def _deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _line_of(text: Optional[str], loc: Tuple[Union[int, str], ...]) -> Optional[int]:
    """1-based line of the deepest YAML node found along a key path."""
    if not text:
        return None
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    line = None
    for key in loc:
        if isinstance(node, yaml.MappingNode):
            match = next((kv for kv in node.value if kv[0].value == key), None)
            if match is None:
                break
            line = match[0].start_mark.line + 1
            node = match[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int):
            if key >= len(node.value):
                break
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
    return line


def _validate(data: Dict[str, Any], text: Optional[str]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = tuple(first["loc"])
        key_path = ".".join(str(part) for part in loc)
        raise ConfigError(first["msg"], key_path=key_path, line=_line_of(text, loc)) from e


def load_defaults() -> Dict[str, Any]:
    """Packaged default configuration as a plain dictionary."""
    with open(DEFAULTS_PATH, "r", encoding="utf-8") as f:
        data: Dict[str, Any] = yaml.safe_load(f)
    return data


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """Read a run configuration, filling omitted keys from the defaults.

    Args:
        path: YAML file; None runs on the defaults alone

    Raises:
        ConfigError: On unreadable files, YAML syntax errors or schema violations,
            with the offending key path and line when known
    """
    defaults = load_defaults()
    if path is None:
        return _validate(defaults, None)

    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read configuration: {e}") from e
    try:
        user = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"invalid YAML: {getattr(e, 'problem', e)}", line=line) from e
    if user is None:
        user = {}
    if not isinstance(user, dict):
        raise ConfigError("configuration must be a mapping of sections", line=1)

    logger.debug(f"loaded configuration from {path}")
    return _validate(_deep_merge(defaults, user), text)
