#!/usr/bin/env python3
"""Amplitude shooting problem behind the core matching argument.

Bisects the origin slope of the radial amplitude equation until the profile
locks onto the rho -> 1 branch, then writes the profile, the tail diagnostic
r^2 (1 - rho^2), and the selected slope to results/figure3/. Cheap
(seconds); no spectral simulation involved.
"""
import sys

from eikolab.cli import main

if __name__ == "__main__":
    args = ["figure3", "--out", "results/figure3"]
    sys.exit(main(args + sys.argv[1:]))
