"""Attractor reached from a grid of initial cavity populations at g = 2, kappa = 0.01."""
import numpy as np

from _common import parser, pyplot
from tcdyn import SystemParams
from tcdyn.parallel import worker_count
from tcdyn.sweeps import RunSettings, basin_map


def main():
    args = parser(__doc__).parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    n = 6 if args.quick else 21
    grid = np.linspace(0, 10, n)
    settings = RunSettings(dt=2e-3, T_max=6000, window=100, tol_fp=1e-5, save_every=5)
    bm = basin_map(SystemParams(), (0.185, 0.185, 0.076), grid, grid, settings=settings,
                   workers=worker_count())
    codes = sorted(set(bm.outcomes.ravel()))
    z = np.vectorize(codes.index)(bm.outcomes)
    plt = pyplot()
    fig, ax = plt.subplots()
    ax.pcolormesh(grid, grid, z, shading="nearest")
    ax.set_xlabel("n1(0)")
    ax.set_ylabel("n2(0)")
    ax.set_title(" / ".join(codes))
    fig.savefig(args.out / "fig3_basins.png", dpi=150)


if __name__ == "__main__":
    main()
