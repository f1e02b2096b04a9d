"""Fixed-point counts in the (g, kappa) plane for two pump rates."""
import numpy as np

from _common import parser, pyplot
from tcdyn import SystemParams
from tcdyn.sweeps import phase_diagram


def main():
    args = parser(__doc__).parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    n = 41 if args.quick else 201
    g = np.linspace(0.05, 6, n)
    k = np.geomspace(1e-3, 1, n)
    plt = pyplot()
    fig, axes = plt.subplots(2, 2, figsize=(10, 8), sharex=True, sharey=True)
    for row, gu in zip(axes, (0.2, 0.5)):
        pd = phase_diagram(SystemParams(gamma_up=gu), g, k)
        for ax, grid, title in zip(row, (pd.n_fp, pd.n_sfp), ("#FP", "#stable FP")):
            m = ax.pcolormesh(g, k, grid, shading="nearest", vmin=0, vmax=4)
            ax.set_yscale("log")
            ax.set_title(f"{title}, gamma_up={gu}")
            fig.colorbar(m, ax=ax)
        np.savez(args.out / f"fig1_gu{gu}.npz", g=g, kappa=k, n_fp=pd.n_fp, n_sfp=pd.n_sfp)
    for ax in axes[1]:
        ax.set_xlabel("g / Delta")
    for ax in axes[:, 0]:
        ax.set_ylabel("kappa / Delta")
    fig.savefig(args.out / "fig1_phase_diagram.png", dpi=150)


if __name__ == "__main__":
    main()
