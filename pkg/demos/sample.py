"""Monte-Carlo run over the attractor box: certify each draw and confirm it numerically.

Usage: python3 demos/sample.py [N] [SEED]   (defaults 40 and 0)
"""

import os
import sys

from quadlienard.cli import main

HERE = os.path.dirname(os.path.abspath(__file__))
n = sys.argv[1] if len(sys.argv) > 1 else "40"
seed = sys.argv[2] if len(sys.argv) > 2 else "0"
sys.exit(main(["sample", "--region", "theorem5", "--n", n, "--seed", seed,
               "--output", os.path.join(HERE, "out", "sample")]))
