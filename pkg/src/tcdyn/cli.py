"""Command-line interface: `tcdyn <command> --config <path> --out <dir> [--set key=value ...]`.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 partial grid.
The worker count for grid commands is read from the TCDYN_WORKERS variable.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, parse_config, serialize_config
from .delay import control_diagram, delay_linearization, rightmost_real_part
from .errors import NumericalError, TcdynError, ValidationError
from .feedback import (
    NO_FEEDBACK, Variant, detect_steady, feedback_signal, integrate_dde,
)
from .io import write_csv, write_json
from .model import LAB, RotatingFrame
from .parallel import worker_count
from .stability import analyzed_fixed_points, rightmost_eigenvalue
from .steady_state import FPKind, Stability, residual
from .sweeps import (
    RunSettings, basin_map, bifurcation_scan, cavity_initial_state, mode_selection_experiment,
    phase_diagram, region_classify,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_PARTIAL = 0, 2, 3, 4
COMMANDS = ("fixed-points", "integrate", "phase-diagram", "bifurcation", "basin",
            "control-diagram", "stabilize", "select-mode")

_PLOT_HEAD = '''"""Generated plot script: reads {csv} from this directory."""
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

here = Path(__file__).parent
d = np.genfromtxt(here / "{csv}", delimiter=",", names=True, comments="#", dtype=None,
                  encoding="utf-8")
'''

_PLOTS = {
    "phase-diagram": '''g, k = np.unique(d["g"]), np.unique(d["kappa"])
fig, ax = plt.subplots(1, 2, figsize=(10, 4))
for a, col in zip(ax, ("n_fp", "n_sfp")):
    z = d[col].reshape(len(k), len(g))
    m = a.pcolormesh(g, k, z, shading="nearest")
    a.set_yscale("log"); a.set_xlabel("g / Delta"); a.set_ylabel("kappa / Delta"); a.set_title(col)
    fig.colorbar(m, ax=a)
fig.savefig(here / "phase_diagram.png", dpi=150)
''',
    "bifurcation": '''fig, ax = plt.subplots(2, 1, sharex=True, figsize=(6, 6))
for b in np.unique(d["branch"]):
    s = d[d["branch"] == b]
    for a, col in zip(ax, ("n1", "n2")):
        a.plot(s["g"], np.where(s["stable"] == 1, s[col], np.nan), "-", label=f"branch {b}")
        a.plot(s["g"], np.where(s["stable"] == 0, s[col], np.nan), "--")
for a, col in zip(ax, ("n1", "n2")):
    a.set_ylabel(col); a.set_yscale("symlog", linthresh=1e-3)
ax[1].set_xlabel("g / Delta"); ax[0].legend()
fig.savefig(here / "bifurcation.png", dpi=150)
''',
    "basin": '''n1, n2 = np.unique(d["n1_0"]), np.unique(d["n2_0"])
codes = {o: i for i, o in enumerate(sorted(set(d["outcome"])))}
z = np.array([codes[o] for o in d["outcome"]]).reshape(len(n2), len(n1))
fig, ax = plt.subplots()
m = ax.pcolormesh(n1, n2, z, shading="nearest")
ax.set_xlabel("n1(0)"); ax.set_ylabel("n2(0)"); ax.set_title(", ".join(codes))
fig.savefig(here / "basin.png", dpi=150)
''',
    "control-diagram": '''lam, tau = np.unique(d["lambda"]), np.unique(d["tau"])
z = d["rightmost"].reshape(len(lam), len(tau))
fig, ax = plt.subplots()
v = np.nanmax(np.abs(z))
m = ax.pcolormesh(tau, lam, z, shading="nearest", cmap="RdBu_r", vmin=-v, vmax=v)
bfile = here / "boundary.csv"
if bfile.exists() and bfile.stat().st_size:
    b = np.genfromtxt(bfile, delimiter=",", names=True, comments="#")
    if b.size:
        ax.plot(np.atleast_1d(b["tau"]), np.atleast_1d(b["lambda"]), ".", color="g", ms=2)
ax.set_xlabel("tau * Delta"); ax.set_ylabel("lambda / Delta"); fig.colorbar(m, ax=ax)
fig.savefig(here / "control_diagram.png", dpi=150)
''',
    "timeseries": '''fig, ax = plt.subplots()
for col in [c for c in d.dtype.names if c.startswith("n")]:
    ax.plot(d["t"], d[col], label=col)
ax.set_xlabel("t * Delta"); ax.set_ylabel("n_i"); ax.legend()
fig.savefig(here / "timeseries.png", dpi=150)
''',
}


def _plot(out: Path, kind: str, csv: str) -> Path:
    path = out / f"plot_{kind.replace('-', '_')}.py"
    path.write_text(_PLOT_HEAD.format(csv=csv) + _PLOTS[kind], encoding="utf-8")
    return path


def _fp_table(fps, p):
    rows = []
    for i, f in enumerate(fps):
        re = f.eigenvalues.real if f.eigenvalues is not None else np.array([np.nan])
        rows.append({
            "index": i, "kind": f.kind.value, "omega": f.omega, "n1": f.n1, "n2": f.n2,
            "jz": f.jz, "jpjm": float(abs(f.state[4]) ** 2), "stability": f.stability.value,
            "max_re_eig": rightmost_eigenvalue(f, p).real, "min_re_eig": float(re.min()),
            "residual": residual(f, p),
        })
    return rows


_FP_COLUMNS = [
    ("index", "dimensionless", "fixed-point index (0 = trivial)"),
    ("kind", "label", "Trivial or NonTrivial"),
    ("omega", "Delta", "rotating-frame frequency"),
    ("n1", "dimensionless", "mode-1 population"),
    ("n2", "dimensionless", "mode-2 population"),
    ("jz", "dimensionless", "stationary inversion"),
    ("jpjm", "dimensionless", "stationary J+J-"),
    ("stability", "label", "Stable, Unstable or Marginal"),
    ("max_re_eig", "Delta", "largest real part (gauge mode excluded)"),
    ("min_re_eig", "Delta", "smallest real part"),
    ("residual", "Delta", "max-norm of the vector field at the fixed point"),
]


def _resolve_target(fps, target: str):
    nontriv = [i for i, f in enumerate(fps) if f.kind == FPKind.NONTRIVIAL]
    if target.isdigit():
        i = int(target)
        if i >= len(fps):
            raise ValidationError(f"target index {i} but only {len(fps)} fixed points",
                                  field="scheme.target")
        return i
    if not nontriv:
        raise NumericalError("no non-trivial fixed point to target")
    key = lambda i: fps[i].n1 / max(fps[i].n2, 1e-300)
    return max(nontriv, key=key) if target == "n1" else min(nontriv, key=key)


def _scheme(cfg: ExperimentConfig, fps):
    if cfg.scheme.variant == "none":
        return NO_FEEDBACK, None
    idx = _resolve_target(fps, cfg.scheme.target)
    return cfg.scheme.feedback(fps[idx].omega), idx


def _series_rows(tr, extra=None):
    n1, n2, jz, dip = tr.observables()
    cols = [tr.t, n1, n2, jz, dip] + ([extra] if extra is not None else [])
    return list(zip(*cols))


_TS_COLUMNS = [("t", "1/Delta", "time"), ("n1", "dimensionless", "mode-1 population"),
               ("n2", "dimensionless", "mode-2 population"), ("jz", "dimensionless", "inversion"),
               ("dipole", "dimensionless", "|J+|")]


def _cls_dict(c):
    return {"kind": c.kind.value, "fp_index": c.fp_index, "period": c.period,
            "amplitude": c.amplitude, "diagnostics": c.diagnostics}


def run_command(name: str, cfg: ExperimentConfig, out_dir, plot: bool = True) -> tuple[int, list]:
    """Execute one experiment and write its artifacts; returns (exit status, files)."""
    if name not in COMMANDS:
        raise ValidationError(f"unknown command {name!r}", field="command")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p, run = cfg.params, cfg.run
    text = serialize_config(cfg)
    meta = {"tool": "tcdyn", "command": name}
    files: list[Path] = []
    summary: dict = {"command": name, "warnings": list(cfg.warnings)}
    status = EXIT_OK
    fps = analyzed_fixed_points(p, run.eps_stab)
    frame = LAB

    def csv(fname, cols, rows):
        files.append(write_csv(out / fname, cols, rows, meta, text))

    if name == "fixed-points":
        table = _fp_table(fps, p)
        csv("fixed_points.csv", _FP_COLUMNS, [[r[c[0]] for c in _FP_COLUMNS] for r in table])
        eig_rows = [(i, k, complex(e).real, complex(e).imag)
                    for i, f in enumerate(fps) for k, e in enumerate(f.eigenvalues)]
        csv("eigenvalues.csv", [("fp_index", "dimensionless", "fixed-point index"),
                                ("k", "dimensionless", "eigenvalue index"),
                                ("re", "Delta", "real part"), ("im", "Delta", "imaginary part")],
            eig_rows)
        n_sfp = sum(f.stability == Stability.STABLE for f in fps)
        summary.update(n_fp=len(fps), n_sfp=n_sfp, region=region_classify(len(fps), n_sfp),
                       fixed_points=table)

    elif name in ("integrate", "stabilize"):
        scheme, target = _scheme(cfg, fps)
        if name == "stabilize" and not scheme.active:
            raise ValidationError("stabilize needs an active feedback scheme", field="scheme.variant")
        x0 = cavity_initial_state(cfg.initial.n1, cfg.initial.n2, cfg.initial.atomic,
                                  (cfg.initial.phase1, cfg.initial.phase2))
        if run.frame == "rotating" and target is not None:
            frame = RotatingFrame(fps[target].omega)
        runs = {"controlled": scheme} if name == "integrate" else \
            {"uncontrolled": NO_FEEDBACK, "controlled": scheme}
        for label, sch in runs.items():
            tr = integrate_dde(x0, p, sch, run.dt, run.T, frame, run.save_every, run.warmup)
            fb = feedback_signal(tr)
            cols = _TS_COLUMNS + [("feedback", "dimensionless", "|q(t-tau)-q(t)| of the controlled quantity")]
            fname = "timeseries.csv" if name == "integrate" else f"timeseries_{label}.csv"
            csv(fname, cols, _series_rows(tr, fb))
            final = (float(v[-1]) for v in tr.observables())
            entry = {"final": dict(zip(("n1", "n2", "jz", "dipole"), final))}
            if run.T >= 2 * run.window:
                cls = detect_steady(tr, run.window, run.tol_fp, run.tol_cycle, fps)
                entry["classification"] = _cls_dict(cls)
                nwin = int(round(run.window / (run.dt * run.save_every)))
                entry["feedback_trailing_max"] = float(np.nanmax(fb[-nwin:])) if sch.active else 0.0
            summary[label] = entry
        summary["scheme"] = {"variant": scheme.variant.value, "lambda": scheme.lam, "tau": scheme.tau}
        if target is not None and scheme.variant in (Variant.JZ, Variant.OMEGA1):
            lin = delay_linearization(fps[target], p, scheme)
            summary["target_fp"] = target
            summary["rightmost_real_part"] = rightmost_real_part(lin, n_cheb=run.n_cheb)
        if plot:
            files.append(_plot(out, "timeseries", files[-1].name))

    elif name == "phase-diagram":
        pd = phase_diagram(p, cfg.grid("g"), cfg.grid("kappa"), run.eps_stab)
        rows = [(c.g, c.kappa, c.n_fp, c.n_sfp, c.region_label, c.dominant_ratio,
                 c.ratios[1] if len(c.ratios) > 1 else math.nan, c.valid) for c in pd.cells]
        csv("phase_diagram.csv", [
            ("g", "Delta", "coupling"), ("kappa", "Delta", "cavity loss"),
            ("n_fp", "dimensionless", "number of physical fixed points"),
            ("n_sfp", "dimensionless", "number of stable fixed points"),
            ("region", "label", "region label a-g or unlabeled"),
            ("dominant_ratio", "dimensionless", "n1/n2 of the stable FP with most photons"),
            ("second_ratio", "dimensionless", "n1/n2 of the other stable FP, if any"),
            ("valid", "flag", "1 if the cell was computed"),
        ], rows)
        labels, counts = np.unique(pd.labels.ravel().astype(str), return_counts=True)
        summary["region_counts"] = dict(zip(labels.tolist(), counts.tolist()))
        if not pd.valid.all():
            status = EXIT_PARTIAL
        if plot:
            files.append(_plot(out, "phase-diagram", "phase_diagram.csv"))

    elif name == "bifurcation":
        tab = bifurcation_scan(p, cfg.grid("g"), p.kappa)
        rows = [(b.id, b.kind.value, g, w, n1, n2, jz, st, mr)
                for b in tab.branches
                for g, w, n1, n2, jz, st, mr in zip(b.g, b.omega, b.n1, b.n2, b.jz, b.stable, b.max_re)]
        csv("bifurcation.csv", [
            ("branch", "dimensionless", "branch id"), ("kind", "label", "Trivial or NonTrivial"),
            ("g", "Delta", "coupling"), ("omega", "Delta", "rotating-frame frequency"),
            ("n1", "dimensionless", "mode-1 population"), ("n2", "dimensionless", "mode-2 population"),
            ("jz", "dimensionless", "inversion"), ("stable", "flag", "1 if linearly stable"),
            ("max_re", "Delta", "largest eigenvalue real part (gauge mode excluded)"),
        ], rows)
        summary["thresholds"] = tab.thresholds()
        if plot:
            files.append(_plot(out, "bifurcation", "bifurcation.csv"))

    elif name == "basin":
        scheme, _ = _scheme(cfg, fps)
        settings = RunSettings(run.dt, run.T_max, run.window, run.tol_fp, run.tol_cycle, run.save_every)
        bm = basin_map(p, cfg.initial.atomic, cfg.grid("n1"), cfg.grid("n2"), scheme, settings,
                       (cfg.initial.phase1, cfg.initial.phase2))
        rows = [(c.n1_0, c.n2_0, c.outcome, -1 if c.fp_index is None else c.fp_index,
                 c.classification.diagnostics.get("t_end", math.nan)) for c in bm.cells]
        csv("basin.csv", [
            ("n1_0", "dimensionless", "initial mode-1 population"),
            ("n2_0", "dimensionless", "initial mode-2 population"),
            ("outcome", "label", "FP<index>, LimitCycle or Undecided"),
            ("fp_index", "dimensionless", "attracting fixed point index, -1 if none"),
            ("t_end", "1/Delta", "integration time used"),
        ], rows)
        outs, counts = np.unique([c.outcome for c in bm.cells], return_counts=True)
        summary["outcome_counts"] = dict(zip(outs.tolist(), counts.tolist()))
        summary["fixed_points"] = _fp_table(fps, p)
        if any(c.outcome == "Undecided" for c in bm.cells):
            status = EXIT_PARTIAL
        if plot:
            files.append(_plot(out, "basin", "basin.csv"))

    elif name == "control-diagram":
        scheme, target = _scheme(cfg, fps)
        if scheme.variant not in (Variant.JZ, Variant.OMEGA1):
            raise ValidationError("control-diagram needs variant jz or omega1", field="scheme.variant")
        cd = control_diagram(fps[target], p, scheme, cfg.grid("tau"), cfg.grid("lambda"),
                             run.n_cheb, workers=worker_count())
        rows = [(lam, tau, cd.rightmost[i, j], cd.valid[i, j])
                for i, lam in enumerate(cd.lambdas) for j, tau in enumerate(cd.taus)]
        csv("control_diagram.csv", [
            ("lambda", "Delta", "feedback gain"), ("tau", "1/Delta", "delay"),
            ("rightmost", "Delta", "largest real part of the characteristic roots"),
            ("valid", "flag", "1 if the cell was computed"),
        ], rows)
        csv("boundary.csv", [
            ("Omega", "Delta", "crossing frequency"), ("tau", "1/Delta", "delay"),
            ("lambda", "Delta", "gain"), ("z", "dimensionless", "branch index"),
        ], [(b.Omega, b.tau, b.lam, b.z) for b in cd.boundary])
        summary.update(target_fp=target, n_stable_cells=int(cd.stable.sum()),
                       n_cells=int(cd.rightmost.size), n_boundary_points=len(cd.boundary),
                       errors={str(k): v for k, v in cd.errors.items()})
        if not cd.valid.all():
            status = EXIT_PARTIAL
        if plot:
            files.append(_plot(out, "control-diagram", "control_diagram.csv"))

    elif name == "select-mode":
        scheme, target = _scheme(cfg, fps)
        x0 = cavity_initial_state(cfg.initial.n1, cfg.initial.n2, cfg.initial.atomic,
                                  (cfg.initial.phase1, cfg.initial.phase2))
        settings = RunSettings(run.dt, run.T_max, run.window, run.tol_fp, run.tol_cycle, run.save_every)
        rep = mode_selection_experiment(p, scheme, x0, settings)
        t_u, n1_u, n2_u = rep.series["uncontrolled"]
        t_c, n1_c, n2_c = rep.series["controlled"]
        csv("selection_uncontrolled.csv", _TS_COLUMNS[:3], list(zip(t_u, n1_u, n2_u)))
        csv("selection_controlled.csv", _TS_COLUMNS[:3], list(zip(t_c, n1_c, n2_c)))
        summary.update(
            scheme={"variant": scheme.variant.value, "lambda": scheme.lam, "tau": scheme.tau},
            uncontrolled=_cls_dict(rep.uncontrolled), controlled=_cls_dict(rep.controlled),
            ratio_uncontrolled=rep.ratio_uncontrolled, ratio_controlled=rep.ratio_controlled,
            dominance_uncontrolled=rep.uncontrolled_dominance,
            dominance_controlled=rep.controlled_dominance,
            n1_dominant_fp=rep.n1_index, n2_dominant_fp=rep.n2_index)
        if plot:
            files.append(_plot(out, "timeseries", "selection_controlled.csv"))

    summary["status"] = status
    files.append(write_json(out / "summary.json", summary))
    return status, files


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="tcdyn", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="configuration file (defaults if omitted)")
    ap.add_argument("--out", type=Path, required=True, help="output directory")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config key, e.g. params.g=2 or grid.g.count=51")
    ap.add_argument("--no-plot", action="store_true", help="skip writing the plot script")
    args = ap.parse_args(argv)
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text, args.overrides)
        for w in cfg.warnings:
            print(f"warning: {w}", file=sys.stderr)
        status, files = run_command(args.command, cfg, args.out, plot=not args.no_plot)
    except ValidationError as exc:
        print(f"error: {exc}" + (f" (field: {exc.field})" if exc.field else ""), file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, TcdynError) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    for f in files:
        print(f)
    return status


if __name__ == "__main__":
    sys.exit(main())
