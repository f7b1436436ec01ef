"""
Sweeping the perturbation size from the command line
====================================================

The job in ``jobs/frame_mu_sweep.json`` grows a fixed perturbation
direction with mu and records predicted and computed bounds at each step.
This script runs it through the CLI and prints the CSV.
"""

import tempfile
from pathlib import Path

from framelab.cli import main

here = Path(__file__).resolve().parent
with tempfile.TemporaryDirectory() as out:
    main(["sweep", str(here / "jobs" / "frame_mu_sweep.json"), "--out", out])
    print((Path(out) / "frame_mu_sweep.sweep.csv").read_text())

###############################################################################
# The SVG next to the CSV plots the predicted interval as dashed lines
# around the computed bounds.  Here A = 1, so the lower prediction 1 - mu
# stays positive over the whole range while the actual bounds barely move.
