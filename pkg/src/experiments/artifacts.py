"""
Run artifacts: CSV writing, manifest.json with git-style content hashes,
and generated matplotlib scripts for every experiment.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Dict, Iterable

import pandas as pd

from .experiment_config import ExperimentConfig

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.10g"


def blob_hash(data: bytes) -> str:
    """SHA-1 of the git blob object for ``data``."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def write_csv(df: pd.DataFrame, path, index: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=index, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(df)} rows to {path}")
    return path


def config_bytes(config: ExperimentConfig) -> bytes:
    return json.dumps(config.model_dump(), sort_keys=True).encode()


def write_manifest(config: ExperimentConfig, out_dir, outputs: Iterable[Path],
                   inputs: Iterable[Path] = ()) -> Path:
    """manifest.json: config, seed and blob hashes of the config, inputs and outputs."""
    out_dir = Path(out_dir)
    manifest = {
        "experiment": config.experiment,
        "seed": config.seed,
        "config": config.model_dump(),
        "config_hash": blob_hash(config_bytes(config)),
        "inputs": {str(p): blob_hash(Path(p).read_bytes()) for p in inputs},
        "outputs": {Path(p).name: blob_hash(Path(p).read_bytes()) for p in outputs},
        "created_at": datetime.now().isoformat(),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


_PLOT_HEADER = '''"""Generated plot script; needs pandas and matplotlib."""
import sys
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

HERE = Path(__file__).resolve().parent
'''

_PLOT_BODIES: Dict[str, str] = {
    "table1": '''
df = pd.read_csv(HERE / "{csv}", index_col=0)
for name, row in df.iterrows():
    plt.semilogy([int(c.split("=")[1]) for c in df.columns], row.values, marker="o", label=name)
plt.xlabel("M")
plt.ylabel("sup |1 - h C_M|")
''',
    "table2": '''
df = pd.read_csv(HERE / "{csv}", index_col=0)
for name, row in df.iterrows():
    plt.semilogy([int(c.split("=")[1]) for c in df.columns], row.values, marker="o", label=name)
plt.xlabel("m")
plt.ylabel("mean E(m)")
''',
    "convergence": '''
df = pd.read_csv(HERE / "{csv}")
for M, part in df.groupby("M"):
    plt.semilogy(part["m"], part["residual_norm"], marker=".", label=f"M={{M}}")
plt.xlabel("m")
plt.ylabel("||H x - y||")
''',
    "distributed-check": '''
df = pd.read_csv(HERE / "{csv}")
plt.plot(df["n"], df["per_agent_max_messages"], marker="o", label="per-agent messages / round")
plt.plot(df["n"], df["scratch_registers"], marker="s", label="scratch registers")
plt.xlabel("n")
''',
    "denoise-sweep": '''
df = pd.read_csv(HERE / "{csv}")
solvers = list(df["solver"].unique())
fig, axes = plt.subplots(1, len(solvers), figsize=(4 * len(solvers), 3.5), squeeze=False)
for ax, name in zip(axes[0], solvers):
    grid = df[df["solver"] == name].pivot_table(index="γ2", columns="γ1", values="mean_snr")
    im = ax.imshow(grid.values, origin="lower", aspect="auto",
                   extent=[grid.columns.min(), grid.columns.max(), grid.index.min(), grid.index.max()])
    ax.set_title(name)
    fig.colorbar(im, ax=ax)
''',
}


def write_plot_script(name: str, csv_path: Path, out_dir) -> Path:
    """plot_<name>.py that reads ``csv_path`` from its own directory."""
    body = _PLOT_BODIES[name].format(csv=Path(csv_path).name)
    footer = '''
if plt.gca().get_legend_handles_labels()[0]:
    plt.legend()
plt.tight_layout()
plt.savefig(HERE / "{stem}.pdf") if "--save" in sys.argv else plt.show()
'''.format(stem=f"plot_{name.replace('-', '_')}")
    path = Path(out_dir) / f"plot_{name.replace('-', '_')}.py"
    path.write_text(_PLOT_HEADER + body + footer)
    return path


def finish_run(config: ExperimentConfig, out_dir, outputs, plot_csv: Path = None, inputs=()) -> Dict[str, Path]:
    """Write the optional plot script and the manifest; returns every artifact path."""
    artifacts = {Path(p).name: Path(p) for p in outputs}
    if config.plot and plot_csv is not None:
        script = write_plot_script(config.experiment, plot_csv, out_dir)
        artifacts[script.name] = script
    manifest = write_manifest(config, out_dir, artifacts.values(), inputs)
    artifacts[manifest.name] = manifest
    return artifacts


@dataclass
class RunResult:
    """Main result table of a run plus every file it wrote."""

    table: pd.DataFrame
    artifacts: Dict[str, Path] = field(default_factory=dict)
