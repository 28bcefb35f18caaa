"""Artifact emission: CSV tables, a JSON run manifest, optional plot script.

Every number is written in round-trip-exact form (repr of the double),
so identical runs produce byte-identical files and acceptance tests can
diff artifacts directly.  The manifest carries the full config echo, a
content hash of that echo, per-stage results, and wall-clock timings;
the timings are the only part allowed to differ between reruns.
"""

from __future__ import annotations

import hashlib
import json
import numbers
from pathlib import Path

import numpy as np

MANIFEST_NAME = "manifest.json"
PLOT_SCRIPT_NAME = "plots.py"


def format_number(value) -> str:
    """Shortest text that parses back to the exact same double."""
    if isinstance(value, bool):
        raise TypeError("booleans have no place in numeric tables")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return repr(float(value))
    raise TypeError(f"cannot format {value!r} as a number")


def plainify(value):
    """Recursively convert numpy scalars/arrays to plain JSON types."""
    if isinstance(value, dict):
        return {k: plainify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plainify(v) for v in value]
    if isinstance(value, np.ndarray):
        return [plainify(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def content_hash(config_echo: dict) -> str:
    """Hash of the canonical serialized inputs; stable across reruns.

    The output directory is echoed but not hashed, so the same
    computation lands on the same fingerprint wherever it is written.
    """
    inputs = {k: v for k, v in config_echo.items() if k != "output_dir"}
    canonical = json.dumps(plainify(inputs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ArtifactWriter:
    """Collects one run's files so a failed run can retract them all."""

    def __init__(self, out_dir: str | Path):
        self.out_dir = Path(out_dir)
        self._made_dir = not self.out_dir.exists()
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.created: list[Path] = []

    def _open(self, name: str):
        path = self.out_dir / name
        handle = path.open("w", encoding="utf-8", newline="")
        self.created.append(path)
        return path, handle

    def write_csv(self, name: str, header: list[str], rows) -> Path:
        """One header line, fixed column order, round-trip-exact numbers."""
        path, handle = self._open(name)
        with handle:
            handle.write(",".join(header) + "\n")
            for row in rows:
                handle.write(",".join(format_number(x) for x in row) + "\n")
        return path

    def write_manifest(self, config_echo: dict, results: dict, timing: dict) -> Path:
        payload = {
            "config": plainify(config_echo),
            "content_hash": content_hash(config_echo),
            "results": plainify(results),
            "timing_seconds": plainify(timing),
        }
        path, handle = self._open(MANIFEST_NAME)
        with handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")
        return path

    def write_plot_script(self, csv_names: list[str]) -> Path:
        path, handle = self._open(PLOT_SCRIPT_NAME)
        with handle:
            handle.write(_plot_script_text(csv_names))
        return path

    def discard(self) -> None:
        """Remove everything this run created; directories only if emptied."""
        for path in self.created:
            path.unlink(missing_ok=True)
        self.created.clear()
        if self._made_dir:
            try:
                self.out_dir.rmdir()
            except OSError:
                pass


def _plot_script_text(csv_names: list[str]) -> str:
    listing = ", ".join(repr(n) for n in csv_names)
    return f'''"""Quick-look figures for the CSV artifacts next to this script."""

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
CSV_FILES = [{listing}]


def load(name):
    with open(HERE / name, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        columns = list(zip(*[[float(cell) for cell in row] for row in reader]))
    return header, columns


for name in CSV_FILES:
    header, columns = load(name)
    if len(columns) < 2:
        continue
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, ys in zip(header[1:], columns[1:]):
        ax.plot(columns[0], ys, marker=".", lw=1.0, label=label)
    ax.set_xlabel(header[0])
    ax.legend(frameon=False)
    fig.tight_layout()
    out = HERE / (Path(name).stem + ".png")
    fig.savefig(out, dpi=150)
    plt.close(fig)
    print("wrote", out)
'''
