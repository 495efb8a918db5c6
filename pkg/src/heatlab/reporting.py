"""CSV, manifest and verdict emission.

CSV convention: comma separators, one header row, LF endings, floats as
shortest round-trip decimals (Python repr), so identical runs produce
byte-identical files on every platform.
"""

from __future__ import annotations

import os
import time

import numpy as np


def format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def format_float_17(v):
    return f"{float(v):.17g}"


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text if text.endswith("\n") else text + "\n")


class Manifest:
    """Echo of the inputs plus versions and stage timings."""

    def __init__(self, scenario, seed):
        import numpy
        import scipy

        from . import __version__

        self.lines = [
            f"scenario: {scenario}",
            f"seed: {seed}",
            f"heatlab: {__version__}",
            f"numpy: {numpy.__version__}",
            f"scipy: {scipy.__version__}",
        ]
        self._timings = []
        self._t0 = None
        self._stage = None

    def echo(self, label, value):
        self.lines.append(f"{label}: {value}")

    def start(self, stage):
        self._stage = stage
        self._t0 = time.perf_counter()

    def stop(self):
        if self._stage is not None:
            self._timings.append((self._stage, time.perf_counter() - self._t0))
            self._stage = None

    def render(self):
        out = list(self.lines)
        if self._timings:
            out.append("timings:")
            out.extend(f"  {name}: {dt:.3f} s" for name, dt in self._timings)
        return "\n".join(out)

    def write(self, outdir):
        write_text(os.path.join(outdir, "manifest.txt"), self.render())


def ensure_outdir(path):
    os.makedirs(path, exist_ok=True)
    return path
