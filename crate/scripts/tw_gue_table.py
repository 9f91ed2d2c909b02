#!/usr/bin/env python3
"""Tabulate the GUE Tracy-Widom CDF F2 on [-5, 3].

F2(s) = det(I - K_Airy) on L^2(s, inf), evaluated with Gauss-Legendre
quadrature of the Fredholm determinant. The output is pasted into
crates/core/src/brownian/tw_table.rs.
"""
import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import airy

NODES = 96
SPAN = 18.0


def f2(s):
    x, w = leggauss(NODES)
    x = s + (x + 1.0) * SPAN / 2.0
    w = w * SPAN / 2.0
    ai, aip, _, _ = airy(x)
    xi, xj = np.meshgrid(x, x, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        k = (np.outer(ai, aip) - np.outer(aip, ai)) / (xi - xj)
    k[np.diag_indices(NODES)] = aip**2 - x * ai**2
    sw = np.sqrt(w)
    return float(np.linalg.det(np.eye(NODES) - sw[:, None] * k * sw[None, :]))


def main():
    grid = np.round(np.linspace(-5.0, 3.0, 81), 10)
    values = [f2(s) for s in grid]
    fine = np.linspace(-9.0, 6.0, 3001)
    cdf = np.array([f2(s) for s in fine])
    pdf = np.gradient(cdf, fine)
    mean = np.trapezoid(fine * pdf, fine)
    var = np.trapezoid((fine - mean) ** 2 * pdf, fine)
    print(f"// mean={mean:.6f} var={var:.6f}")
    for s, v in zip(grid, values):
        print(f"    ({s:.1f}, {v:.12e}),")


if __name__ == "__main__":
    main()
