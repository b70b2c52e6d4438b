"""Command-line interface for darkstate."""

import logging
import sys
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from darkstate import __version__
from darkstate.config.loader import RunConfig, load_config
from darkstate.core.errors import DarkStateError, FitError, GridError
from darkstate.core.models import ExperimentRecord, TargetState, angular_to_ghz, angular_to_mhz
from darkstate.experiments.lifetime import run_detuning_sweep, run_lifetime
from darkstate.experiments.spectroscopy import phase_calibration, run_spectroscopy
from darkstate.model.tavis_cummings import (
    DressedStates,
    dark_state_condition,
    device_layout,
    dispersive_purcell_rate,
    dressed_single_excitation,
    ground_state,
    j_coupling,
    purcell_rate,
    single_qubit_purcell_rate,
    transition_matrix_element,
)
from darkstate.operators.algebra import StateVector
from darkstate.output.report import ReportGenerator
from darkstate.output.writer import RunMetadata, ensure_directory, write_csv, write_metadata

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])
CsvTables = Dict[str, Tuple[List[ExperimentRecord], Sequence[str]]]

MODE_ALIASES = {
    "analytic": "analytic",
    "master": "master_equation",
    "master_equation": "master_equation",
}


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def handle_errors(func: F) -> F:
    """Turn darkstate errors into a message on stderr and the documented exit code."""

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except DarkStateError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(e.exit_code)

    return wrapper  # type: ignore[return-value]


def run_options(func: F) -> F:
    """Options shared by every experiment command."""
    options = [
        click.option(
            "--config",
            "-c",
            "config_path",
            type=click.Path(exists=True, dir_okay=False),
            default=None,
            help="Run configuration (YAML); omitted keys take their defaults",
        ),
        click.option("--out", "-o", type=click.Path(file_okay=False), help="Output directory"),
        click.option(
            "--format", "-f", "formats", help="Comma-separated output formats: csv,json,md"
        ),
        click.option(
            "--mode",
            type=click.Choice(sorted(MODE_ALIASES)),
            help="Spectroscopy mode",
        ),
        click.option("--n-max", type=int, help="Highest cavity Fock state kept"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _load(
    config_path: Optional[str],
    out: Optional[str],
    formats: Optional[str],
    mode: Optional[str],
    n_max: Optional[int],
) -> RunConfig:
    cfg = load_config(config_path)
    format_list = None
    if formats is not None:
        format_list = [f.strip() for f in formats.split(",") if f.strip()]
    return cfg.with_overrides(
        n_max=n_max,
        mode=MODE_ALIASES[mode] if mode else None,
        directory=out,
        formats=format_list,
    )


def _write_outputs(
    cfg: RunConfig,
    metadata: RunMetadata,
    csv_tables: CsvTables,
    report_tables: Sequence[Dict[str, Any]] = (),
) -> List[Path]:
    """Write the requested formats; the JSON sidecar lists every file of the run."""
    out = ensure_directory(cfg.output.directory)
    formats = cfg.output.formats
    experiment = metadata.experiment
    written: List[Path] = []

    if "csv" in formats:
        for name, (records, extra_columns) in csv_tables.items():
            written.append(write_csv(out / f"{name}.csv", records, extra_columns))
    report_name = f"{experiment}_report.md"
    json_name = f"{experiment}.json"
    metadata.files = [p.name for p in written]
    if "md" in formats:
        metadata.files.append(report_name)
    if "json" in formats:
        metadata.files.append(json_name)
        written.append(write_metadata(out / json_name, metadata))
    if "md" in formats:
        report = ReportGenerator().write_run_report(out / report_name, metadata, report_tables)
        written.append(report)
    return written


def _metadata(cfg: RunConfig, experiment: str, **kwargs: Any) -> RunMetadata:
    return RunMetadata(
        experiment=experiment,
        config_hash=cfg.config_hash(),
        config=cfg.physics_dump(),
        n_max=cfg.device.n_max,
        **kwargs,
    )


def _report_files(written: Sequence[Path]) -> None:
    click.echo(f"\n✓ Wrote {len(written)} files:")
    for path in written:
        click.echo(f"  {path}")


def _both_units(omega: float) -> Dict[str, float]:
    return {"rad_per_ns": omega, "ghz": angular_to_ghz(omega)}


def _drive_summary(
    cfg: RunConfig, dressed: DressedStates, ground: StateVector
) -> Dict[str, Any]:
    """Rabi frequency and detuning of the configured drive on each collective line."""
    drive = cfg.drive_params()
    dark = dark_state_condition(drive, dressed)
    lines = (TargetState.PSI_S, TargetState.PSI_A)
    return {
        "phi_rad": drive.phi,
        "xi": drive.xi,
        "omega_d": _both_units(drive.omega_d),
        "dark_line": dark.value if dark is not None else None,
        "rabi": {
            t.value: _both_units(2.0 * transition_matrix_element(drive, dressed.state(t), ground))
            for t in lines
        },
        "detuning": {t.value: _both_units(drive.omega_d - dressed.frequency(t)) for t in lines},
    }


def dressed_summary(cfg: RunConfig) -> Dict[str, Any]:
    """Dressed frequencies, J-coupling and Purcell rates of the configured device.

    The drive section reports what the configured drive does to each line.

    Raises:
        JUndefinedError: If the qubits sit on resonance with the cavity
        ResonanceError: If the qubits are not a resonant pair
    """
    device = cfg.device_params()
    g = device.g[0]
    j = j_coupling(g, device.delta)
    dressed = dressed_single_excitation(device)
    ground = ground_state(device_layout(device))
    purcell = {
        target: purcell_rate(state, ground, device.kappa)
        for target, state in (
            ("psi_a", dressed.psi_a),
            ("psi_s", dressed.psi_s),
            ("psi_r", dressed.psi_r),
        )
    }
    return {
        "theta_m_rad": dressed.theta_m,
        "delta": _both_units(device.delta),
        "omega_a": _both_units(dressed.omega_a),
        "omega_s": _both_units(dressed.omega_s),
        "omega_r_dressed": _both_units(dressed.omega_r_dressed),
        "splitting": _both_units(dressed.splitting),
        "j_coupling": _both_units(j),
        "two_j_abs": _both_units(abs(2.0 * j)),
        "purcell_rate": {name: _both_units(rate) for name, rate in purcell.items()},
        "single_qubit_purcell_rate": _both_units(
            single_qubit_purcell_rate(g, device.delta, device.kappa)
        ),
        "dispersive_purcell_rate": _both_units(
            dispersive_purcell_rate(g, device.delta, device.kappa)
        ),
        "drive": _drive_summary(cfg, dressed, ground),
    }


def _add_unit_row(table: Table, label: str, value: Dict[str, float], digits: int = 9) -> None:
    table.add_row(label, f"{value['rad_per_ns']:.{digits}g}", f"{value['ghz']:.{digits}g}")


def _add_drive_rows(table: Table, drive: Dict[str, Any]) -> None:
    table.add_row("drive.phi_rad", f"{drive['phi_rad']:.9g}", "")
    table.add_row("drive.xi", f"{drive['xi']:.9g}", "")
    _add_unit_row(table, "drive.omega_d", drive["omega_d"])
    table.add_row("drive.dark_line", drive["dark_line"] or "none", "")
    for key in ("rabi", "detuning"):
        for state, value in drive[key].items():
            _add_unit_row(table, f"drive.{key}[{state}]", value, 6)


def _dressed_table(summary: Dict[str, Any]) -> Table:
    table = Table(title="Dressed single-excitation manifold")
    table.add_column("Quantity")
    table.add_column("rad/ns", justify="right")
    table.add_column("GHz", justify="right")
    for name, value in summary.items():
        if name == "purcell_rate":
            for state, rate in value.items():
                _add_unit_row(table, f"purcell_rate[{state}]", rate, 6)
        elif name == "drive":
            _add_drive_rows(table, value)
        elif isinstance(value, dict):
            table.add_row(name, f"{value['rad_per_ns']:.9g}", f"{value['ghz']:.9g}")
        else:
            table.add_row(name, f"{value:.9g}", "")
    return table


def run_dressed(cfg: RunConfig) -> List[Path]:
    summary = dressed_summary(cfg)
    Console().print(_dressed_table(summary))
    return _write_outputs(cfg, _metadata(cfg, "dressed", results=summary), {})


def run_spectroscopy_command(cfg: RunConfig) -> List[Path]:
    sweep_cfg = cfg.spectroscopy_config()
    mode = cfg.experiment.mode
    click.echo(
        f"Running {mode.value} spectroscopy over {len(sweep_cfg.phi_grid)} phases x "
        f"{len(sweep_cfg.omega_d_grid)} frequencies..."
    )
    records = run_spectroscopy(sweep_cfg, mode)
    results: Dict[str, Any] = {}
    try:
        calibration = phase_calibration(records, sweep_cfg)
        results["phase_calibration"] = calibration.to_dict()
        click.echo(f"✓ Zero separation phi_s - phi_a = {calibration.difference:.6f} rad")
    except (FitError, GridError) as e:
        logger.warning(f"phase calibration skipped: {e}")
        results["phase_calibration_error"] = str(e)
    metadata = _metadata(cfg, "spectroscopy", results=results, mode=mode.value)
    return _write_outputs(cfg, metadata, {"spectroscopy_population": (records, ())})


def run_lifetime_command(cfg: RunConfig) -> List[Path]:
    lifetime = cfg.lifetime_config()
    click.echo(
        f"Running lifetime of {lifetime.target.value} at "
        f"delta = {angular_to_mhz(lifetime.delta):.1f} MHz..."
    )
    result = run_lifetime(lifetime)
    results: Dict[str, Any] = {
        "target": lifetime.target.value,
        "delta_mhz": angular_to_mhz(lifetime.delta),
        "t1_ns": result.t1,
        "t1_error_ns": result.fit.error("t1") if result.fit is not None else None,
        "non_decaying": result.non_decaying,
        "fit": result.fit.to_dict() if result.fit is not None else None,
        "fit_error": result.error,
    }
    click.echo(f"✓ T1 = {result.t1:.1f} ns")
    metadata = _metadata(cfg, "lifetime", results=results, integrator_step_ns=result.step)
    return _write_outputs(cfg, metadata, {"lifetime_population": (result.records, ())})


def run_sweep_command(cfg: RunConfig) -> List[Path]:
    template = cfg.lifetime_config()
    deltas = cfg.delta_grid()
    click.echo(f"Running lifetime sweep over {len(deltas)} detunings x 4 states...")
    rows = run_detuning_sweep(template, deltas, max_concurrent=cfg.experiment.max_concurrent)
    records = [row.to_record() for row in rows]

    table = Table(title="Lifetime versus detuning")
    for column in ("delta (MHz)", "state", "T1 (ns)", "error (ns)"):
        table.add_column(column, justify="right")
    report_rows = []
    for row in rows:
        cells = [
            f"{angular_to_mhz(row.delta):.1f}",
            row.target.value,
            f"{row.t1:.1f}",
            f"{row.t1_error:.1f}",
        ]
        table.add_row(*cells)
        report_rows.append(cells)
    Console().print(table)

    results = {
        "points": len(rows),
        "states": [t.value for t in TargetState],
        "lifetimes": [
            {
                "delta_mhz": angular_to_mhz(row.delta),
                "state": row.target.value,
                "t1_ns": row.t1,
                "t1_error_ns": row.t1_error,
            }
            for row in rows
        ],
    }
    report_table = {
        "title": "Lifetime versus detuning",
        "columns": ["delta (MHz)", "state", "T1 (ns)", "error (ns)"],
        "rows": report_rows,
    }
    return _write_outputs(
        cfg,
        _metadata(
            cfg, "sweep", results=results, integrator_step_ns=max(row.step for row in rows)
        ),
        {"sweep_t1_ns": (records, ("t1_error_ns",))},
        [report_table],
    )


RUNNERS: Dict[str, Callable[[RunConfig], List[Path]]] = {
    "dressed": run_dressed,
    "spectroscopy": run_spectroscopy_command,
    "lifetime": run_lifetime_command,
    "sweep": run_sweep_command,
}


@click.group()
@click.version_option(version=__version__)
@click.option("--verbose", "-v", is_flag=True, help="Log debug output")
def cli(verbose: bool) -> None:
    """darkstate - Dark states and subradiance of two qubits in a lossy cavity.

    Simulates the dressed single-excitation manifold, phase-resolved
    spectroscopy and lifetime measurements of a two-transmon circuit-QED
    device. All parameters come from a YAML configuration whose omitted keys
    take the measured-device defaults.
    """
    _configure_logging(verbose)


@cli.command()
@run_options
@handle_errors
def dressed(**options: Any) -> None:
    """Report dressed frequencies, J-coupling and Purcell rates.

    Example:
        darkstate dressed --out results
    """
    _report_files(run_dressed(_load(**options)))


@cli.command()
@run_options
@handle_errors
def spectroscopy(**options: Any) -> None:
    """Steady-state population versus drive phase and frequency.

    Example:
        darkstate spectroscopy --mode master --n-max 2
    """
    _report_files(run_spectroscopy_command(_load(**options)))


@cli.command()
@run_options
@handle_errors
def lifetime(**options: Any) -> None:
    """Free decay of one prepared state and its fitted T1.

    Example:
        darkstate lifetime -c run.yaml
    """
    _report_files(run_lifetime_command(_load(**options)))


@cli.command()
@run_options
@handle_errors
def sweep(**options: Any) -> None:
    """Fitted T1 of psi_a, psi_s, eg and ge over the detuning grid.

    Example:
        darkstate sweep -c run.yaml --format csv,json,md
    """
    _report_files(run_sweep_command(_load(**options)))


@cli.command()
@run_options
@handle_errors
def run(**options: Any) -> None:
    """Run the experiment named by experiment.type in the configuration.

    Example:
        darkstate run -c run.yaml
    """
    cfg = _load(**options)
    click.echo(f"Experiment: {cfg.experiment.type}")
    _report_files(RUNNERS[cfg.experiment.type](cfg))


if __name__ == "__main__":
    cli()
