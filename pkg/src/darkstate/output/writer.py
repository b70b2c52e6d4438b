"""CSV result tables and the JSON metadata sidecar."""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from jsonschema import Draft7Validator

from darkstate import __version__
from darkstate.core.errors import OutputError
from darkstate.core.models import ExperimentRecord

logger = logging.getLogger(__name__)

SCHEMA_PATH = Path(__file__).parent.parent / "schemas" / "metadata_schema.json"
FLOAT_FORMAT = "%.17g"


@dataclass
class RunMetadata:
    """Provenance and derived results of one run.

    Attributes:
        experiment: Sub-command that produced the run
        config_hash: Hash of the physics sections of the configuration
        config: Configuration echoed in the units of the file
        n_max: Fock truncation used
        results: Derived quantities (fits, dressed frequencies, ...)
        mode: Spectroscopy mode, if applicable
        integrator_step_ns: Integrator step, if a time evolution ran
        files: Names of the files written for the run
    """

    experiment: str
    config_hash: str
    config: Dict[str, Any]
    n_max: int
    results: Dict[str, Any] = field(default_factory=dict)
    mode: Optional[str] = None
    integrator_step_ns: Optional[float] = None
    files: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready dictionary; non-finite floats become null."""
        return {
            "experiment": self.experiment,
            "code_version": __version__,
            "config_hash": self.config_hash,
            "config": json_safe(self.config),
            "n_max": self.n_max,
            "mode": self.mode,
            "integrator_step_ns": json_safe(self.integrator_step_ns),
            "files": list(self.files),
            "results": json_safe(self.results),
        }


def json_safe(value: Any) -> Any:
    """Recursively convert to plain JSON types, mapping inf and nan to None."""
    if isinstance(value, dict):
        return {str(k.value if isinstance(k, Enum) else k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return [json_safe(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        return number if math.isfinite(number) else None
    return value


def format_value(value: Union[float, str]) -> str:
    if isinstance(value, str):
        return value
    return FLOAT_FORMAT % value


def write_csv(
    path: Path, records: Sequence[ExperimentRecord], extra_columns: Sequence[str] = ()
) -> Path:
    """Write records of a single observable as a CSV table with a header row.

    Columns are the record coordinates, the observable, then the requested
    metadata keys. Floats keep 17 significant digits.

    Raises:
        OutputError: On mixed observables or inconsistent coordinates, or if
            the file cannot be written
    """
    if not records:
        raise OutputError(f"no records to write to {path.name}")
    observable = records[0].observable
    coordinates = list(records[0].coordinates)
    header = coordinates + [observable] + list(extra_columns)
    for record in records:
        if record.observable != observable or list(record.coordinates) != coordinates:
            raise OutputError(f"records written to {path.name} do not share one layout")

    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for record in records:
                row = [format_value(record.coordinates[c]) for c in coordinates]
                row.append(format_value(record.value))
                row.extend(format_value(record.metadata[c]) for c in extra_columns)
                writer.writerow(row)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    logger.debug(f"wrote {len(records)} rows to {path}")
    return path


def load_schema() -> Dict[str, Any]:
    with open(SCHEMA_PATH, "r", encoding="utf-8") as f:
        schema: Dict[str, Any] = json.load(f)
    return schema


def validate_metadata(data: Dict[str, Any]) -> None:
    """Check a metadata dictionary against the packaged JSON schema.

    Raises:
        OutputError: Listing the first violation
    """
    validator = Draft7Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        location = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise OutputError(f"metadata fails schema at {location}: {first.message}")


def write_metadata(path: Path, metadata: RunMetadata) -> Path:
    """Validate and write the metadata sidecar with sorted keys and no timestamps."""
    data = metadata.to_dict()
    validate_metadata(data)
    text = json.dumps(data, indent=2, sort_keys=True, allow_nan=False) + "\n"
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    return path


def ensure_directory(directory: Union[str, Path]) -> Path:
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory {out}: {e}") from e
    return out
