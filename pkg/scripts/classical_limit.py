"""Error of one homogeneous mode against exp(-lam T) as q -> 1.

    python scripts/classical_limit.py --lam 1 --T 1 0.5 0.9 0.99 0.999
"""
import math

import click
import numpy as np

from qheat import CoefficientProfile, ConstantFn, DirectProblem, QParams, Spectrum, solve_direct
from qheat.direct import zero_source


@click.command()
@click.argument("q_values", nargs=-1, type=float)
@click.option("--lam", default=1.0, show_default=True)
@click.option("--T", "T", default=1.0, show_default=True)
@click.option("--phi", default=1.0, show_default=True)
def main(q_values, lam, T, phi):
    q_values = q_values or (0.5, 0.9, 0.99, 0.999)
    exact = phi * math.exp(-lam * T)
    click.echo(f"{'q':>8} {'u(T)':>22} {'error':>12} {'depth':>7}")
    for q in q_values:
        p = DirectProblem(Spectrum(np.array([lam]), lam / 2), CoefficientProfile(ConstantFn(1.0), 1.0, 1.0),
                          np.array([phi]), zero_source(1), T, QParams(q))
        u = solve_direct(p, diagnostics=False).trajectory.final[0]
        click.echo(f"{q:8.4f} {u:22.17f} {abs(u - exact):12.3e} {p.lattice_depth:7d}")


if __name__ == "__main__":
    main()
