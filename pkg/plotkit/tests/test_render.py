"""plotkit tests: render every figure from a fresh primary-CLI run.

The primary toolkit is driven strictly through its command line and file
formats; nothing is imported from it.
"""

import subprocess
import sys

import pytest

from plotkit.cli import main
from plotkit.render import FigureJob, SchemaError, render


def run_primary(args):
    proc = subprocess.run(
        [sys.executable, "-m", "pt_hybrid.cli", *args],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def primary_outputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("primary")
    run_primary(["bounds", "--T", "10", "--mu0", "1", "--tau-d", "1", "--n0", "3",
                 "--grid", "60", "--out", str(root / "fig2")])
    run_primary(["run", "--scenario", "consensus", "--figure", "fig4",
                 "--seed", "0", "--out", str(root / "consensus")])
    run_primary(["run", "--scenario", "intermittent", "--figure", "fig5",
                 "--seed", "0", "--out", str(root / "intermittent")])
    run_primary(["run", "--scenario", "nesmr", "--figure", "fig6",
                 "--seed", "0", "--out", str(root / "game")])
    return root


DIR_FOR = {
    "fig2": "fig2",
    "fig3": "consensus",
    "fig4": "consensus",
    "fig5": "intermittent",
    "fig6": "game",
}


@pytest.mark.parametrize("tag", ["fig2", "fig3", "fig4", "fig5", "fig6"])
def test_render_all_figures_svg(primary_outputs, tmp_path, tag):
    out = tmp_path / f"{tag}.svg"
    job = FigureJob(in_dir=primary_outputs / DIR_FOR[tag], figure=tag, out_path=out)
    render(job)
    text = out.read_text()
    assert text.lstrip().startswith("<?xml")
    assert "</svg>" in text


def test_fig2_has_five_curves(primary_outputs, tmp_path):
    out = tmp_path / "fig2.svg"
    render(FigureJob(in_dir=primary_outputs / "fig2", figure="fig2", out_path=out))
    # four gain-order curves plus the classical reference line in the legend
    text = out.read_text()
    for label in ("gain order 1", "gain order 2", "gain order 3", "gain order 4",
                  "classical dwell bound"):
        assert label.replace(" ", "") in text.replace(" ", "")


def test_fig4_log_scale_and_decreasing_input(primary_outputs, tmp_path):
    import csv

    with open(primary_outputs / "consensus" / "errors.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    first, last = float(rows[0]["error"]), float(rows[-1]["error"])
    assert last < 1e-3 * first  # the rendered curve decreases toward the deadline
    out = tmp_path / "fig4.svg"
    render(FigureJob(in_dir=primary_outputs / "consensus", figure="fig4", out_path=out))
    assert out.exists()


def test_png_option(primary_outputs, tmp_path):
    out = tmp_path / "fig4.png"
    code = main([
        "render", "--in", str(primary_outputs / "consensus"),
        "--figure", "fig4", "--out", str(out), "--png",
    ])
    assert code == 0
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_deterministic_svg(primary_outputs, tmp_path):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    for out in (a, b):
        render(FigureJob(in_dir=primary_outputs / "game", figure="fig6", out_path=out))
    assert a.read_bytes() == b.read_bytes()


def test_inputs_not_mutated(primary_outputs, tmp_path):
    target = primary_outputs / "intermittent" / "trajectory.csv"
    before = target.read_bytes()
    render(FigureJob(in_dir=primary_outputs / "intermittent", figure="fig5",
                     out_path=tmp_path / "fig5.svg"))
    assert target.read_bytes() == before


def test_empty_directory_schema_error(tmp_path):
    code = main([
        "render", "--in", str(tmp_path), "--figure", "fig4",
        "--out", str(tmp_path / "out.svg"),
    ])
    assert code == 3


def test_missing_columns_listed(tmp_path):
    (tmp_path / "errors.csv").write_text("t,s\n0,0\n")
    with pytest.raises(SchemaError) as exc:
        render(FigureJob(in_dir=tmp_path, figure="fig4", out_path=tmp_path / "o.svg"))
    assert "error" in str(exc.value)


def test_unknown_tag_rejected(tmp_path):
    with pytest.raises(SchemaError):
        FigureJob(in_dir=tmp_path, figure="fig9", out_path=tmp_path / "o.svg")
