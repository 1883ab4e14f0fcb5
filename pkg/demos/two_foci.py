"""Two weak foci at x = 0 and x = -2, detuned by eps = -0.02.

Writes certificates, both small cycles and an SVG portrait to demos/out/two_foci/.
"""

import os
import sys

from quadlienard.cli import main

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "out", "two_foci")
INP = os.path.join(HERE, "data", "two_foci.json")

for argv in (
    ["certify", "--input", INP, "--epsilon", "-0.02", "--output", OUT],
    ["cycles", "--input", INP, "--epsilon", "-0.02", "--box=-3,1", "--output", OUT],
    ["plot", "--input", os.path.join(OUT, "cycles.json"), "--output", OUT],
):
    code = main(argv)
    if code:
        sys.exit(code)
