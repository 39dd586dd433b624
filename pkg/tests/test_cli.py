import os
from pathlib import Path
import subprocess
import sys

import pytest
import simplejson

from geoq.cli import DEFAULT_JOBS
from geoq.const import OUTPUT_ENV_VAR
from geoq.program import EXIT_CONFIG, EXIT_OK
from geoq.program_params import Commands, ProgramParams, RunParams, UIParams
from geoq.scenarios import load_scenario
from tests.common import ROOT_DIR

LIGHT_CHECKS = {
    "scenario_id": "checks-default",
    "checks": {"spectrum_gauge_grid": {"half_width": 2.0, "points": 60}, "jacobi_trials": 3},
}


def _run_cli(*args: str, expected_code: int = EXIT_OK) -> list[str]:
    """Run the CLI."""
    result = subprocess.run(
        [sys.executable, "-m", "geoq", *args],  # noqa S603
        capture_output=True,
        text=True,
        env={**os.environ, "TERM": "dumb"},
        cwd=ROOT_DIR,
    )
    if result.returncode != expected_code:
        pytest.fail(
            f"CLI exited with code {result.returncode}, expected {expected_code}. "
            f"stdout={result.stdout!r}, stderr={result.stderr!r}"
        )
    if result.stderr:
        pytest.fail(f"Detected stderr: {result.stderr}. Stdout: {result.stdout}")
    return result.stdout.splitlines()


def _write_config(directory: Path, data: dict) -> Path:
    path = directory / "scenario.json"
    path.write_text(simplejson.dumps(data), encoding="utf-8")
    return path


def test_help():
    output = "\n".join(_run_cli("--help"))
    for command in Commands:
        assert command.value in output


def test_schema():
    output = "\n".join(_run_cli("schema"))
    assert "ScenarioConfig" in output
    assert "hbar" in output


@pytest.mark.parametrize(
    "args, expected",
    [
        pytest.param(
            ["checks"],
            ProgramParams(
                command=Commands.checks,
                ui=UIParams(log_level="info", no_color=False, quiet=False, stop_on_warning=False, tracebacks=False),
                run=RunParams(output_directory=Path(os.environ.get(OUTPUT_ENV_VAR, "results")), jobs=DEFAULT_JOBS),
                scenario=load_scenario("checks-default"),
            ),
            id="minimal_params",
        ),
        pytest.param(
            ["classical-scan", "--scenario", "harmonic-scan", "--hbar", "0.2,0.1,0.02", "--seed", "4", "-o", "_tmp/out",
             "-j", "2", "-q", "--tracebacks"],
            ProgramParams(
                command=Commands.classical_scan,
                ui=UIParams(log_level="info", no_color=False, quiet=True, stop_on_warning=False, tracebacks=True),
                run=RunParams(output_directory=Path("_tmp/out"), jobs=2),
                scenario=load_scenario("harmonic-scan", overrides={"hbar": [0.2, 0.1, 0.02], "seed": 4}),
            ),
            id="various_params",
        ),
        pytest.param(
            ["schema"],
            ProgramParams(
                command=Commands.schema,
                run=RunParams(output_directory=Path(os.environ.get(OUTPUT_ENV_VAR, "results")), jobs=DEFAULT_JOBS),
            ),
            id="no_scenario",
        ),
    ],
)
def test_dump_config(args: list[str], expected: ProgramParams) -> None:
    lines = _run_cli(*args, "--dump-config")
    params = ProgramParams.model_validate_json("\n".join(lines))
    assert params == expected


@pytest.mark.parametrize(
    "hbar",
    [
        pytest.param("--hbar=-0.1,0.05", id="negative"),
        pytest.param("--hbar=0.01,0.1", id="increasing"),
    ],
)
def test_invalid_hbar_is_a_config_error(tmp_path: Path, hbar: str):
    lines = _run_cli("classical-scan", hbar, "-o", str(tmp_path), expected_code=EXIT_CONFIG)
    assert any("Bad configuration" in line for line in lines)
    assert not any(tmp_path.iterdir())


def test_quantum_spectrum_rejects_two_degrees_of_freedom(tmp_path: Path):
    config = _write_config(tmp_path, {"scenario_id": "two-dof", "kind": "quantum", "n": 2, "hbar": [0.1]})
    out = tmp_path / "out"
    _run_cli("quantum-spectrum", "--config", str(config), "-o", str(out), expected_code=EXIT_CONFIG)
    assert not out.exists()


def test_unknown_config_file_is_a_config_error(tmp_path: Path):
    _run_cli("checks", "--config", str(tmp_path / "missing.json"), expected_code=EXIT_CONFIG)


@pytest.mark.slow
def test_checks_command(tmp_path: Path):
    config = _write_config(tmp_path, LIGHT_CHECKS)
    out = tmp_path / "out"
    lines = _run_cli("checks", "--config", str(config), "-o", str(out), "--no-color")
    assert (out / "checks-default" / "manifest.json").is_file()
    assert (out / "checks-default" / "checks.json").is_file()
    assert not any("FAIL" in line for line in lines)
    report = _run_cli("report", "-o", str(out), "--no-color")
    assert any("checks-default" in line for line in report)
