"""Limit cycle at g = 5, kappa = 0.5 and its stabilization by inversion feedback."""
import numpy as np

from _common import parser, pyplot
from tcdyn import SystemParams
from tcdyn.delay import control_diagram
from tcdyn.feedback import NO_FEEDBACK, FeedbackScheme, Variant, integrate_dde
from tcdyn.stability import analyzed_fixed_points
from tcdyn.sweeps import cavity_initial_state


def main():
    args = parser(__doc__).parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    p = SystemParams(g=5.0, kappa=0.5)
    x0 = cavity_initial_state(0.1, 0.1, (0.185, 0.185, 0.076))
    s = FeedbackScheme(Variant.JZ, 0.4, 1.0)
    plt = pyplot()
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(12, 4.5))
    for sch, style in ((NO_FEEDBACK, ":"), (s, "-")):
        tr = integrate_dde(x0, p, sch, dt=1e-3, T=200, save_every=20)
        n1, n2, _, _ = tr.observables()
        ax0.plot(tr.t, n1, style, label=f"n1 {sch.variant.value}")
        ax0.plot(tr.t, n2, style, label=f"n2 {sch.variant.value}")
    ax0.set_xlabel("t Delta")
    ax0.legend(fontsize=7)
    fp = analyzed_fixed_points(p)[1]
    n = 31 if args.quick else 101
    cd = control_diagram(fp, p, s, np.linspace(0.06, 6, n), np.linspace(0, 1, n))
    v = np.nanmax(np.abs(cd.rightmost))
    m = ax1.pcolormesh(cd.taus, cd.lambdas, cd.rightmost, shading="nearest", cmap="RdBu_r",
                       vmin=-v, vmax=v)
    ax1.plot([b.tau for b in cd.boundary], [b.lam for b in cd.boundary], "g.", ms=3)
    ax1.set_xlabel("tau Delta")
    ax1.set_ylabel("lambda / Delta")
    fig.colorbar(m, ax=ax1, label="rightmost real part")
    fig.savefig(args.out / "fig4_stabilization.png", dpi=150)


if __name__ == "__main__":
    main()
