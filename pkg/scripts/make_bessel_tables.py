#!/usr/bin/env python3
"""Regenerate the frozen Bessel reference data.

Two artifacts come out of this script, both computed from first principles
with mpmath arbitrary-precision arithmetic (ascending series with explicit
harmonic sums; never mpmath.besselk, so the reference stays independent of
any library implementation):

* tests/data/bessel_oracle.json -- the 200-point log-spaced test grid on
  [1e-3, 50] plus regime probes, 32 significant digits each.
* the Chebyshev coefficient tables for e^z sqrt(z) K_nu(z) on [2, 16] that
  are frozen into eikolab/specfun.py (printed with --cheb for diffing).

Run from the repository root:

    python3 scripts/make_bessel_tables.py            # rewrite the JSON table
    python3 scripts/make_bessel_tables.py --cheb     # print coefficient source
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

import mpmath as mp
import numpy as np

mp.mp.dps = 60


def k0_reference(z) -> mp.mpf:
    """K0 by the ascending series; working precision grows with z.

    K0 = -(log(z/2) + gamma) I0(z) + sum_k H_k q^k / (k!)^2,  q = z^2/4.
    The series alternates against the exponentially large I0 for big z, so
    the working precision carries ~0.9 z/ln(10) guard digits.
    """
    z = mp.mpf(z)
    extra = int(0.9 * float(z)) + 30
    with mp.workdps(60 + extra):
        q = z * z / 4
        term = mp.mpf(1)
        i0 = mp.mpf(1)
        s = mp.mpf(0)
        h = mp.mpf(0)
        k = 0
        while True:
            k += 1
            term *= q / (k * k)
            h += mp.mpf(1) / k
            i0 += term
            s += term * h
            if term * (h + 1) < mp.mpf(10) ** (-(60 + extra)) * (abs(s) + i0):
                break
        return -(mp.log(z / 2) + mp.euler) * i0 + s


def k1_reference(z) -> mp.mpf:
    """K1 = 1/z + log(z/2) I1(z) - (z/4) sum_k (H_k + H_{k+1} - 2 gamma) ...

    Same ascending-series construction as k0_reference; the digamma values
    psi(k+1) + psi(k+2) are carried as explicit harmonic numbers.
    """
    z = mp.mpf(z)
    extra = int(0.9 * float(z)) + 30
    with mp.workdps(60 + extra):
        q = z * z / 4
        term = mp.mpf(1)
        i1s = mp.mpf(1)
        h = mp.mpf(0)
        s = -2 * mp.euler + mp.mpf(1)
        k = 0
        while True:
            k += 1
            term *= q / (k * (k + 1))
            h += mp.mpf(1) / k
            coef = -2 * mp.euler + 2 * h + mp.mpf(1) / (k + 1)
            i1s += term
            s += term * coef
            if term * (abs(coef) + 1) < mp.mpf(10) ** (-(60 + extra)) * (abs(s) + i1s):
                break
        i1 = (z / 2) * i1s
        return 1 / z + mp.log(z / 2) * i1 - (z / 4) * s


def chebyshev_fit(fn, lo: float, hi: float, degree: int):
    """Chebyshev coefficients of fn on [lo, hi] by Gauss-Chebyshev quadrature."""
    n = degree + 1
    nodes = [mp.cos(mp.pi * (j + mp.mpf(1) / 2) / n) for j in range(n)]
    vals = [fn((hi + lo) / 2 + (hi - lo) / 2 * x) for x in nodes]
    coeffs = []
    for m in range(n):
        acc = mp.mpf(0)
        for j, x in enumerate(nodes):
            acc += vals[j] * mp.cos(m * mp.acos(x))
        coeffs.append(acc * 2 / n)
    coeffs[0] /= 2
    return coeffs


def emit_cheb_source(degree: int = 40) -> str:
    lines = []
    for name, ref in (("_CHEB_K0", k0_reference), ("_CHEB_K1", k1_reference)):
        fn = lambda z: mp.exp(z) * mp.sqrt(z) * ref(z)
        coeffs = chebyshev_fit(fn, 2.0, 16.0, degree)
        # drop trailing terms below double-precision relevance
        while len(coeffs) > 1 and abs(coeffs[-1]) < mp.mpf("1e-18"):
            coeffs.pop()
        body = "\n".join(f"    {mp.nstr(c, 17)}," for c in coeffs)
        lines.append(f"{name} = (\n{body}\n)")
    return "\n".join(lines)


def grid_points() -> list[float]:
    return np.geomspace(1e-3, 50.0, 200).tolist()


def probe_points() -> list[float]:
    # tiny-argument log regime, regime boundaries, asymptotic tail, underflow edge
    return [1e-6, 1e-4, 0.5, 1.999, 2.0, 2.001, 15.999, 16.0, 16.001, 100.0, 700.0]


def build_table() -> dict:
    def entry(z: float) -> dict:
        return {
            "z": repr(float(z)),
            "k0": mp.nstr(k0_reference(z), 32),
            "k1": mp.nstr(k1_reference(z), 32),
        }

    return {
        "dps": 60,
        "method": "ascending series, explicit harmonic sums, guard digits ~0.9 z",
        "grid": [entry(z) for z in grid_points()],
        "probes": [entry(z) for z in probe_points()],
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cheb", action="store_true",
                    help="print the frozen Chebyshev coefficient source instead")
    ap.add_argument("--out", default="tests/data/bessel_oracle.json")
    args = ap.parse_args()
    if args.cheb:
        print(emit_cheb_source())
        return 0
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(build_table(), indent=1) + "\n")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
