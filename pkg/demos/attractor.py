"""Unstable focus inside a stable cycle, to the right of the pole x = -1.

Writes the certificate, transversal curve, cycle, one trajectory and portraits to
demos/out/attractor/.
"""

import os
import sys

from quadlienard.cli import main
from quadlienard.io import dumps, load_system
from quadlienard.numerics import IntegrationOptions, integrate

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "out", "attractor")
INP = os.path.join(HERE, "data", "attractor.json")

for argv in (
    ["certify", "--input", INP, "--output", OUT],
    ["transversal", "--input", INP, "--output", os.path.join(OUT, "transversal")],
    ["cycles", "--input", INP, "--box", "0,10", "--output", OUT],
    ["plot", "--input", os.path.join(OUT, "cycles.json"), "--output", os.path.join(OUT, "cycles")],
    ["plot", "--input", os.path.join(OUT, "transversal", "transversal.json"), "--style", "asinh",
     "--output", os.path.join(OUT, "transversal")],
):
    code = main(argv)
    if code:
        sys.exit(code)

# a trajectory in the original coordinates, spiralling out onto the cycle
s, _ = load_system(INP)
tr = integrate(s, (0.05, 0.0), (0.0, 60.0), IntegrationOptions(rtol=1e-9, atol=1e-11))
art = {"artifact": "trajectory", "chart": "original", "system": s.to_dict(), "states": tr.states[:, :2],
       "times": tr.times, "termination": tr.termination}
path = os.path.join(OUT, "trajectory.json")
with open(path, "w", encoding="utf-8") as fh:
    fh.write(dumps(art) + "\n")
sys.exit(main(["plot", "--input", path, "--output", os.path.join(OUT, "trajectory")]))
