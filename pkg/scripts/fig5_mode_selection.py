"""Mode selection at kappa = 0.005, g = 2 with n2-modulated and coherent feedback."""
from _common import parser, pyplot
from tcdyn import SystemParams
from tcdyn.feedback import FeedbackScheme, Variant, mirror_delay
from tcdyn.stability import analyzed_fixed_points
from tcdyn.sweeps import (
    RunSettings, cavity_initial_state, dominant_fixed_points, mode_selection_experiment,
)


def main():
    args = parser(__doc__).parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    p = SystemParams(kappa=0.005)
    fps = analyzed_fixed_points(p)
    _, i2 = dominant_fixed_points(fps)
    atomic = (0.185, 0.185, 0.076)
    runs = [
        ("Omega1, lambda=0.01, tau=1", FeedbackScheme(Variant.OMEGA1, 0.01, 1.0),
         cavity_initial_state(0.0, 9.0, atomic)),
        ("Mirror, lambda=1, tau=2pi/omega", FeedbackScheme(Variant.MIRROR, 1.0, mirror_delay(fps[i2])),
         cavity_initial_state(0.0, 0.0, atomic)),
    ]
    settings = RunSettings(dt=2e-3, T_max=6000, window=100, tol_fp=1e-5, save_every=5)
    plt = pyplot()
    fig, axes = plt.subplots(2, 1, figsize=(7, 7))
    for ax, (title, s, ic) in zip(axes, runs):
        rep = mode_selection_experiment(p, s, ic, settings)
        for key, style in (("uncontrolled", ":"), ("controlled", "-")):
            t, n1, n2 = rep.series[key]
            ax.plot(t, n1, style, label=f"n1 {key}")
            ax.plot(t, n2, style, label=f"n2 {key}")
        ax.set_title(f"{title}: {rep.uncontrolled_dominance} -> {rep.controlled_dominance}")
        ax.legend(fontsize=7)
    axes[1].set_xlabel("t Delta (trailing window)")
    fig.tight_layout()
    fig.savefig(args.out / "fig5_mode_selection.png", dpi=150)


if __name__ == "__main__":
    main()
