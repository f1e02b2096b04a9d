"""Stationary populations versus g at kappa = 0.01 with stability marked."""
import numpy as np

from _common import parser, pyplot
from tcdyn import SystemParams
from tcdyn.sweeps import bifurcation_scan, bifurcation_thresholds


def main():
    args = parser(__doc__).parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    table = bifurcation_scan(SystemParams(), np.linspace(0.05, 6, 100 if args.quick else 400), 0.01)
    print(bifurcation_thresholds(table))
    plt = pyplot()
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6, 7))
    for b in table.branches:
        g, st = np.array(b.g), np.array(b.stable)
        for ax, vals in zip(axes, (b.n1, b.n2)):
            v = np.array(vals)
            ax.plot(g, np.where(st, v, np.nan), "-", lw=2)
            ax.plot(g, np.where(~st, v, np.nan), "--", lw=1)
    for ax, name in zip(axes, ("n1", "n2")):
        ax.set_ylabel(name)
        ax.set_yscale("symlog", linthresh=1e-3)
    axes[1].set_xlabel("g / Delta")
    fig.savefig(args.out / "fig2_bifurcation.png", dpi=150)


if __name__ == "__main__":
    main()
