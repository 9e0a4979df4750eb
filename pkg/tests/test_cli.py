from os import path

import numpy as np
import orjson
import pytest

from typer.testing import CliRunner

from loop_bie import __version__
from loop_bie.mesh import (
    ControlMesh,
    dump_control_mesh
)
from loop_bie.mesh.shapes import torus_arrays
from loop_bie.operators import write_container
from loop_bie.solver import SolveResult
from loop_bie_cli.app import app
from loop_bie_cli.config import (
    THREADS_VARIABLE,
    ConfigError,
    RunConfig
)
from loop_bie_cli.outputs import (
    OutputDirectory,
    config_hash,
    emit_summary,
    summary_row
)

runner = CliRunner()

# ka = 1 for the unit sphere
UNIT_KA_FREQUENCY = 47_713_451.59


def _read(file):
    with open(file) as stream:
        return stream.read()


class TestCommands():

    def test_version(self):
        result = runner.invoke(app, ["version"])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_validate(self, make_run_file, dir):
        file = make_run_file("""
            command = "validate"
            frequency = 3e8

            [geometry]
            shape = "icosahedron"
        """)
        result = runner.invoke(app, ["validate", file])
        assert result.exit_code == 0

        topology = _read(path.join(dir, "out", "topology.txt")).splitlines()
        assert topology[0].startswith(f"# loop-bie version={__version__} config=")
        assert "chi = 2" in topology
        assert "supported = True" in topology
        assert any(line.startswith("electrical_size = ") for line in topology)

        manifest = orjson.loads(_read(path.join(dir, "out", "manifest.json")))
        assert manifest["outputs"] == ["resolved.json", "run.toml", "topology.txt"]
        assert manifest["provenance"]["version"] == __version__

    def test_run_file_is_echoed(self, make_run_file, dir):
        text = """
            command = "validate"

            [geometry]
            shape = "octahedron"
        """
        file = make_run_file(text)
        assert runner.invoke(app, ["run", file]).exit_code == 0
        echoed = _read(path.join(dir, "out", "run.toml")).split("\n", 1)[1]
        assert echoed == _read(file)

    def test_subdivide(self, make_run_file, dir):
        file = make_run_file("""
            command = "subdivide"
            output_dir = "refined"

            [geometry]
            shape = "octahedron"
            refine = 2
        """)
        assert runner.invoke(app, ["subdivide", file]).exit_code == 0

        lines = _read(path.join(dir, "refined", "refined.obj")).splitlines()
        assert sum(line.startswith("v ") for line in lines) == 66
        assert sum(line.startswith("f ") for line in lines) == 128

    def test_eigs(self, make_run_file, dir):
        file = make_run_file("""
            command = "eigs"

            [geometry]
            shape = "limit-sphere"
            level = 1

            [study]
            n_eigs = 10
            eigenvectors = [1, 2, 3]
        """)
        assert runner.invoke(app, ["eigs", file]).exit_code == 0

        eigenvalues = _read(path.join(dir, "out", "eigenvalues.csv")).splitlines()
        assert eigenvalues[1] == "index,eigenvalue,residual"
        assert len(eigenvalues) == 12

        eigenvectors = _read(path.join(dir, "out", "eigenvectors.csv")).splitlines()
        assert eigenvectors[1] == "vertex,x,y,z,h1,h2,h3"
        assert len(eigenvectors) == 2 + 42
        assert "includes_constant = true" in _read(path.join(dir, "out", "eigs.txt"))

    def test_fmm_study(self, make_run_file, dir):
        file = make_run_file("""
            command = "fmm-study"

            [study]
            leaf_sizes = [0.125]
            digits = [1, 2]
        """)
        assert runner.invoke(app, ["fmm-study", file]).exit_code == 0

        lines = _read(path.join(dir, "out", "fmm_study.csv")).splitlines()
        assert lines[1] == "leaf_size,digits,p,error"
        assert [line.split(",")[1] for line in lines[2:]] == ["1", "2"]

    def test_failed_runs_are_grouped(self, make_run_file, dir):
        file = make_run_file("""
            command = "fmm-study"

            [study]
            leaf_sizes = [0.125]
            digits = [14]
        """)
        assert runner.invoke(app, ["fmm-study", file]).exit_code == 3

        manifest = orjson.loads(_read(path.join(dir, "out", "manifest.json")))
        assert "fmm_study.csv" in manifest["outputs"]

    def test_show_config(self, make_run_file):
        file = make_run_file("""
            command = "fmm-study"
        """)
        result = runner.invoke(app, ["show-config", file])
        assert result.exit_code == 0
        assert "\"command\": \"fmm-study\"" in result.output


class TestInputErrors():

    def test_unknown_key(self, make_run_file):
        file = make_run_file("""
            command = "validate"
            colour = "blue"

            [geometry]
            shape = "icosahedron"
        """)
        assert runner.invoke(app, ["validate", file]).exit_code == 2

    def test_missing_run_file(self, dir):
        assert runner.invoke(app, ["validate", path.join(dir, "missing.toml")]).exit_code == 2

    def test_missing_mesh_file(self, make_run_file):
        file = make_run_file("""
            command = "validate"

            [geometry]
            mesh_path = "missing.obj"
        """)
        assert runner.invoke(app, ["validate", file]).exit_code == 2

    def test_unsupported_topology(self, make_run_file, dir):
        (vertices, triangles) = torus_arrays()
        with open(path.join(dir, "torus.obj"), "w") as stream:
            stream.write(dump_control_mesh(ControlMesh(vertices, triangles, validate=False), "obj"))

        file = make_run_file("""
            command = "validate"

            [geometry]
            mesh_path = "torus.obj"
        """)
        assert runner.invoke(app, ["validate", file]).exit_code == 2

    def test_coefficients_of_another_mesh(self, make_run_file, dir):
        write_container(path.join(dir, "coefficients.lbie"), {"coefficients": np.ones(5)})
        file = make_run_file("""
            command = "rcs"
            frequency = 3e8

            [geometry]
            shape = "icosahedron"

            [study]
            coefficients = "coefficients.lbie"
        """)
        assert runner.invoke(app, ["rcs", file]).exit_code == 2


class TestRunConfig():

    def test_line_of_invalid_value(self):
        text = 'command = "solve"\nfrequency = 1e9\n\n[geometry]\nshape = "limit-sphere"\nlevel = 9\n'
        with pytest.raises(ConfigError) as error:
            RunConfig.parse(text, file="run.toml")
        assert error.value.line == 6
        assert error.value.file == "run.toml"
        assert str(error.value).endswith("(run.toml:6)")

    def test_line_of_study_key(self):
        text = 'command = "mht-study"\nfrequency = 1e9\n\n[geometry]\nshape = "icosphere"\n\n[study]\nharmonics = [0]\n'
        with pytest.raises(ConfigError) as error:
            RunConfig.parse(text)
        assert error.value.line == 8

    def test_bad_toml(self):
        with pytest.raises(ConfigError):
            RunConfig.parse('command = "validate"\n[geometry\n')

    def test_frequency_required(self):
        with pytest.raises(ConfigError) as error:
            RunConfig.parse('command = "solve"\n\n[geometry]\nshape = "icosphere"\n')
        assert "frequency" in str(error.value)
        assert error.value.line is None

    def test_geometry_required(self):
        with pytest.raises(ConfigError):
            RunConfig.parse('command = "eigs"\n')

    def test_one_geometry_source(self, bumpy_cube_file):
        text = f'command = "validate"\n\n[geometry]\nshape = "cube"\nmesh_path = "{bumpy_cube_file}"\n'
        with pytest.raises(ConfigError):
            RunConfig.parse(text)

    def test_command_override(self):
        config = RunConfig.parse('command = "validate"\n\n[geometry]\nshape = "cube"\n', command="eigs")
        assert config.command == "eigs"

    def test_paths_resolve_against_run_file(self):
        config = RunConfig.parse('command = "fmm-study"\noutput_dir = "results"\n', base="/runs")
        assert config.output_dir == path.normpath("/runs/results")

    def test_default_output_dir_resolves_against_run_file(self):
        config = RunConfig.parse('command = "fmm-study"\n', base="/runs")
        assert config.output_dir == path.normpath("/runs/out")

    def test_threads_variable(self, monkeypatch):
        config = RunConfig.parse('command = "fmm-study"\nthreads = 2\n')
        monkeypatch.delenv(THREADS_VARIABLE, raising=False)
        assert config.effective_threads == 2
        monkeypatch.setenv(THREADS_VARIABLE, "4")
        assert config.effective_threads == 4


class TestOutputs():

    def test_config_hash(self):
        text = 'command = "solve"\nfrequency = 1e9\n\n[geometry]\nshape = "icosphere"\n'
        digest = config_hash(RunConfig.parse(text))
        assert len(digest) == 16
        assert digest == config_hash(RunConfig.parse(text))
        assert digest != config_hash(RunConfig.parse(text.replace("1e9", "2e9")))

    def test_empty_summary(self):
        (text, summary, timings) = emit_summary([])
        assert summary == "label,formulation,space,unknowns,iterations,inner_iterations,residual,far_field_error,reference\n"
        assert timings == "label,assembly_time,solve_time\n"
        assert len(text.splitlines()) == 1

    def test_summary_rows(self):
        result = SolveResult(
            formulation="cc-cfier",
            coefficients=np.zeros(8),
            iterations=7,
            residuals=[1.0, 5e-6],
            wall_time=2.25,
            inner_iterations=40,
            metadata={"assembly_time": "1.500"},
        )
        rows = [summary_row("loop", result, 0.0123, "mie"), summary_row("M=3", result)]
        (text, summary, timings) = emit_summary(rows)
        assert summary.splitlines()[1] == "loop,cc-cfier,loop,8,7,40,5.000000e-06,1.230000e-02,mie"
        assert summary.splitlines()[2] == "M=3,cc-cfier,loop,8,7,40,5.000000e-06,,"
        assert timings.splitlines()[1] == "loop,1.500,2.250"
        assert len(text.splitlines()) == 3

    def test_provenance_header(self, dir, monkeypatch):
        monkeypatch.delenv(THREADS_VARIABLE, raising=False)
        config = RunConfig.parse('command = "fmm-study"\n', base=dir)
        output = OutputDirectory(config)
        assert output.header() == f"# loop-bie version={__version__} config={config_hash(config)} threads=default"

        output.write_text("notes.txt", "text\n")
        assert output.written == ["notes.txt"]
        assert _read(path.join(dir, "out", "notes.txt")).endswith("\ntext\n")


@pytest.mark.slow
class TestSolveCommands():

    def test_solve_then_rcs(self, make_run_file, dir):
        geometry = """
            [geometry]
            shape = "limit-sphere"
            level = 1
        """
        solve_file = make_run_file(f"""
            command = "solve"
            frequency = {UNIT_KA_FREQUENCY}
            {geometry}
            [study]
            harmonics = [10]
        """, "solve.toml")
        assert runner.invoke(app, ["solve", solve_file]).exit_code == 0

        out = path.join(dir, "out")
        for name in ("pattern.csv", "mie.csv", "history.csv", "result.txt", "coefficients.lbie", "pattern_M10.csv", "timings.csv"):
            assert path.isfile(path.join(out, name))
        summary = _read(path.join(out, "summary.csv")).splitlines()
        assert [row.split(",")[0] for row in summary[2:]] == ["loop", "M=10"]
        assert float(summary[2].split(",")[7]) < 0.2

        rcs_file = make_run_file(f"""
            command = "rcs"
            frequency = {UNIT_KA_FREQUENCY}
            output_dir = "rcs"
            {geometry}
            [study]
            coefficients = "out/coefficients.lbie"
        """, "rcs.toml")
        assert runner.invoke(app, ["rcs", rcs_file]).exit_code == 0

        solved = _read(path.join(out, "pattern.csv")).splitlines()[1:]
        recomputed = _read(path.join(dir, "rcs", "pattern.csv")).splitlines()[1:]
        assert recomputed == solved
