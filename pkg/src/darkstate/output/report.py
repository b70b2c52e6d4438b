"""Markdown run reports rendered from Jinja2 templates."""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from jinja2 import Environment, FileSystemLoader, select_autoescape

from darkstate.core.errors import OutputError
from darkstate.output.writer import RunMetadata, format_value


def _flatten(data: Dict[str, Any], prefix: str = "") -> List[Dict[str, str]]:
    rows = []
    for key in sorted(data):
        value = data[key]
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            rows.extend(_flatten(value, f"{name}."))
        elif isinstance(value, float):
            rows.append({"name": name, "value": format_value(value)})
        else:
            rows.append({"name": name, "value": "null" if value is None else str(value)})
    return rows


class ReportGenerator:
    """Renders the markdown summary of a run."""

    def __init__(self, templates_dir: Optional[Path] = None) -> None:
        """Initialize the report generator.

        Args:
            templates_dir: Optional path to templates directory
        """
        if templates_dir is None:
            templates_dir = Path(__file__).parent.parent / "templates"

        self.templates_dir = templates_dir
        self.env = Environment(
            loader=FileSystemLoader(str(templates_dir)),
            autoescape=select_autoescape(),
            trim_blocks=True,
            lstrip_blocks=True,
        )

    def render_run_report(
        self, metadata: RunMetadata, tables: Sequence[Dict[str, Any]] = ()
    ) -> str:
        """Render run_report.md.j2.

        Args:
            metadata: Run metadata, before or after the files were written
            tables: Optional tables, each with "title", "columns" and "rows"

        Returns:
            Markdown text
        """
        data = metadata.to_dict()
        template = self.env.get_template("run_report.md.j2")
        return template.render(
            run=data,
            config_rows=_flatten(data["config"]),
            result_rows=_flatten(data["results"]),
            tables=list(tables),
        )

    def write_run_report(
        self, path: Path, metadata: RunMetadata, tables: Sequence[Dict[str, Any]] = ()
    ) -> Path:
        try:
            path.write_text(self.render_run_report(metadata, tables), encoding="utf-8")
        except OSError as e:
            raise OutputError(f"cannot write {path}: {e}") from e
        return path
