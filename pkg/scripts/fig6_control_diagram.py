"""Control diagrams of both stable lasing states under n2-modulated feedback."""
import numpy as np

from _common import parser, pyplot
from tcdyn import SystemParams
from tcdyn.feedback import FeedbackScheme, Variant
from tcdyn.parallel import worker_count
from tcdyn.sweeps import dual_control_regions


def main():
    ap = parser(__doc__)
    ap.add_argument("--lambda-max", type=float, default=0.05)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    n = 31 if args.quick else 101
    reg = dual_control_regions(SystemParams(kappa=0.005), FeedbackScheme(Variant.OMEGA1, 0.01, 1.0),
                               np.linspace(0.06, 6, n), np.linspace(0, args.lambda_max, n),
                               workers=worker_count())
    print("only FP1 / only FP2 / both unstable:",
          int(reg.only_first.sum()), int(reg.only_second.sum()), int(reg.both.sum()))
    plt = pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(12, 4.5))
    for ax, d, idx in zip(axes, reg.diagrams, reg.fp_indices):
        v = np.nanmax(np.abs(d.rightmost))
        m = ax.pcolormesh(d.taus, d.lambdas, d.rightmost, shading="nearest", cmap="RdBu_r",
                          vmin=-v, vmax=v)
        ax.plot([b.tau for b in d.boundary], [b.lam for b in d.boundary], "g.", ms=3)
        ax.set_title(f"FP{idx}")
        ax.set_xlabel("tau Delta")
        ax.set_ylabel("lambda / Delta")
        fig.colorbar(m, ax=ax)
    fig.savefig(args.out / "fig6_control_diagram.png", dpi=150)


if __name__ == "__main__":
    main()
