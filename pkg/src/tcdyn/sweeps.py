"""Parameter-grid drivers: phase diagram, bifurcation scan, basins, mode selection."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .delay import ControlDiagram, control_diagram
from .errors import NoConvergence, NumericalError
from .feedback import (
    NO_FEEDBACK, FeedbackScheme, SteadyClassification, SteadyKind, run_until_steady,
)
from .model import MeanFieldState, SystemParams
from .parallel import ordered_map
from .stability import EPS_STAB, analyzed_fixed_points, rightmost_eigenvalue
from .steady_state import FixedPoint, FPKind, Stability, characteristic_frequencies

REGIONS = {(1, 1): "a", (2, 1): "b", (2, 0): "c", (3, 1): "d", (3, 2): "e",
           (4, 1): "f", (4, 2): "g"}
UNLABELED = "unlabeled"


def region_classify(n_fp: int, n_sfp: int) -> str:
    return REGIONS.get((int(n_fp), int(n_sfp)), UNLABELED)


def _ratio(fp: FixedPoint) -> float:
    n1, n2 = fp.n1, fp.n2
    if n2 > 0:
        return n1 / n2
    return math.inf if n1 > 0 else math.nan


def stable_ratios(fps: list[FixedPoint]) -> list[float]:
    """n1/n2 of the stable fixed points, largest total photon number first."""
    st = [f for f in fps if f.stability == Stability.STABLE]
    st.sort(key=lambda f: -(f.n1 + f.n2))
    return [_ratio(f) for f in st]


@dataclass
class PhaseCell:
    g: float
    kappa: float
    n_fp: int
    n_sfp: int
    region_label: str
    dominant_ratio: float
    ratios: tuple = ()
    valid: bool = True


@dataclass
class PhaseDiagram:
    g: np.ndarray
    kappa: np.ndarray
    cells: list[PhaseCell]          # kappa-major order

    def _grid(self, attr, dtype=float):
        return np.array([getattr(c, attr) for c in self.cells], dtype).reshape(
            len(self.kappa), len(self.g))

    @property
    def n_fp(self):
        return self._grid("n_fp", int)

    @property
    def n_sfp(self):
        return self._grid("n_sfp", int)

    @property
    def labels(self):
        return self._grid("region_label", object)

    @property
    def dominant_ratio(self):
        return self._grid("dominant_ratio")

    @property
    def valid(self):
        return self._grid("valid", bool)


def phase_cell(p: SystemParams, omegas=None, eps_stab: float = EPS_STAB) -> PhaseCell:
    try:
        fps = analyzed_fixed_points(p, eps_stab, omegas)
    except NumericalError:
        return PhaseCell(p.g, p.kappa, 0, 0, UNLABELED, math.nan, (), False)
    n_sfp = sum(f.stability == Stability.STABLE for f in fps)
    ratios = tuple(stable_ratios(fps))
    dom = ratios[0] if ratios else math.nan
    return PhaseCell(p.g, p.kappa, len(fps), n_sfp, region_classify(len(fps), n_sfp), dom, ratios)


def _phase_row(kappa, p_base: SystemParams, g_grid, eps_stab):
    pk = p_base.with_(kappa=float(kappa))
    try:
        omegas = characteristic_frequencies(pk)  # independent of g
    except NumericalError:
        return [PhaseCell(float(g), float(kappa), 0, 0, UNLABELED, math.nan, (), False)
                for g in g_grid]
    return [phase_cell(pk.with_(g=float(g)), omegas, eps_stab) for g in g_grid]


def phase_diagram(p_base: SystemParams, g_grid, kappa_grid, eps_stab: float = EPS_STAB,
                  workers: int | None = None) -> PhaseDiagram:
    g_grid = np.asarray(g_grid, float)
    kappa_grid = np.asarray(kappa_grid, float)
    rows = ordered_map(partial(_phase_row, p_base=p_base, g_grid=g_grid, eps_stab=eps_stab),
                       kappa_grid, workers)
    return PhaseDiagram(g_grid, kappa_grid, [c for r in rows for c in r])


# --- bifurcation scan ----------------------------------------------------------

@dataclass
class Branch:
    id: int
    kind: FPKind
    g: list = field(default_factory=list)
    omega: list = field(default_factory=list)
    n1: list = field(default_factory=list)
    n2: list = field(default_factory=list)
    jz: list = field(default_factory=list)
    stable: list = field(default_factory=list)
    max_re: list = field(default_factory=list)

    def append(self, g, fp: FixedPoint, p: SystemParams):
        self.g.append(g)
        self.omega.append(fp.omega)
        self.n1.append(fp.n1)
        self.n2.append(fp.n2)
        self.jz.append(fp.jz)
        self.stable.append(fp.stability == Stability.STABLE)
        self.max_re.append(rightmost_eigenvalue(fp, p).real)


@dataclass
class BifurcationTable:
    kappa: float
    g_values: np.ndarray
    branches: list[Branch]
    n_fp: np.ndarray
    n_sfp: np.ndarray

    def thresholds(self) -> dict:
        return bifurcation_thresholds(self)


def _distance(fp: FixedPoint, br: Branch) -> float:
    a = np.array([fp.omega, fp.n1, fp.n2])
    b = np.array([br.omega[-1], br.n1[-1], br.n2[-1]])
    # relative differences with a unit floor so branches born at n = 0 stay matched
    return float(np.sum(np.abs(a - b) / np.maximum(1.0, np.abs(a) + np.abs(b))))


def bifurcation_scan(p_base: SystemParams, g_values, kappa_fixed: float,
                     match_tol: float = 0.5) -> BifurcationTable:
    """Fixed points and their stability along a g-cut, joined into branches."""
    g_values = np.asarray(g_values, float)
    pk = p_base.with_(kappa=float(kappa_fixed))
    omegas = characteristic_frequencies(pk)
    branches: list[Branch] = []
    live: list[Branch] = []
    nfp, nsfp = [], []
    for g in g_values:
        p = pk.with_(g=float(g))
        fps = analyzed_fixed_points(p, omegas=omegas)
        nfp.append(len(fps))
        nsfp.append(sum(f.stability == Stability.STABLE for f in fps))
        nxt: list[Branch] = []
        free = [b for b in live if b.kind == FPKind.NONTRIVIAL]
        for fp in fps:
            if fp.kind == FPKind.TRIVIAL:
                br = next((b for b in live if b.kind == FPKind.TRIVIAL), None)
                if br is None:
                    br = Branch(len(branches), FPKind.TRIVIAL)
                    branches.append(br)
            else:
                cand = sorted(free, key=lambda b: _distance(fp, b))
                if cand and _distance(fp, cand[0]) <= match_tol:
                    br = cand[0]
                    free.remove(br)
                else:
                    br = Branch(len(branches), FPKind.NONTRIVIAL)
                    branches.append(br)
            br.append(float(g), fp, p)
            nxt.append(br)
        live = nxt
    return BifurcationTable(float(kappa_fixed), g_values, branches, np.array(nfp), np.array(nsfp))


def bifurcation_thresholds(table: BifurcationTable) -> dict:
    """Scan-resolution estimates (midpoints between grid values) of the bifurcations.

    Keys: trivial_destabilization, births (nontrivial branches in order of
    appearance), stabilizations (per nontrivial branch, None if never stable).
    """
    gs = table.g_values

    def mid(g):
        i = int(np.searchsorted(gs, g))
        return float(0.5 * (gs[i - 1] + gs[i])) if i > 0 else float(g)

    out = {"trivial_destabilization": None, "births": [], "stabilizations": []}
    triv = next(b for b in table.branches if b.kind == FPKind.TRIVIAL)
    for g, st in zip(triv.g, triv.stable):
        if not st:
            out["trivial_destabilization"] = mid(g)
            break
    nontriv = sorted((b for b in table.branches if b.kind == FPKind.NONTRIVIAL),
                     key=lambda b: b.g[0])
    for b in nontriv:
        out["births"].append(mid(b.g[0]))
        g_st = next((g for g, st in zip(b.g, b.stable) if st), None)
        out["stabilizations"].append(None if g_st is None else mid(g_st))
    return out


# --- trajectories on grids -----------------------------------------------------

def cavity_initial_state(n1: float, n2: float, atomic_ic, phases=(0.0, 0.0)) -> np.ndarray:
    """a_i(0) = sqrt(n_i) e^{i phi_i}; atomic_ic = (J+, J-, Jz), J+ = conj(J-)."""
    jp, jm, jz = atomic_ic
    a1 = math.sqrt(n1) * np.exp(1j * phases[0])
    a2 = math.sqrt(n2) * np.exp(1j * phases[1])
    if abs(complex(jp) - np.conj(complex(jm))) > 1e-12:
        raise ValueError("atomic initial condition must satisfy J+ = conj(J-)")
    return MeanFieldState.physical(a1, a2, jm, float(np.real(jz))).to_array()


@dataclass(frozen=True)
class RunSettings:
    dt: float = 1e-3
    T_max: float = 10000.0
    window: float = 200.0
    tol_fp: float = 1e-6
    tol_cycle: float = 0.1
    save_every: int = 10
    chunk: float | None = None


@dataclass
class BasinCell:
    n1_0: float
    n2_0: float
    outcome: str                       # "FP<k>", "LimitCycle" or "Undecided"
    fp_index: int | None = None
    classification: SteadyClassification | None = None


@dataclass
class BasinMap:
    n1_grid: np.ndarray
    n2_grid: np.ndarray
    cells: list[BasinCell]            # n2-major order (rows: n2, columns: n1)
    fixed_points: list[FixedPoint]

    @property
    def outcomes(self) -> np.ndarray:
        return np.array([c.outcome for c in self.cells], object).reshape(
            len(self.n2_grid), len(self.n1_grid))


def _outcome(cls: SteadyClassification) -> str:
    if cls.kind == SteadyKind.FIXED_POINT:
        return f"FP{cls.fp_index}"
    return cls.kind.value


def _basin_cell(n12, p, atomic_ic, scheme, settings, phases, fps):
    n1, n2 = n12
    x0 = cavity_initial_state(n1, n2, atomic_ic, phases)
    try:
        cls, _ = run_until_steady(x0, p, scheme, settings.dt, settings.T_max, settings.window,
                                  settings.tol_fp, settings.tol_cycle, settings.chunk,
                                  settings.save_every, fixed_points=fps)
    except NumericalError as exc:
        cls = SteadyClassification(SteadyKind.UNDECIDED, diagnostics={"error": str(exc)})
    return BasinCell(float(n1), float(n2), _outcome(cls), cls.fp_index, cls)


def basin_map(p: SystemParams, atomic_ic, n1_grid, n2_grid,
              scheme: FeedbackScheme = NO_FEEDBACK, settings: RunSettings = RunSettings(),
              phases=(0.0, 0.0), workers: int | None = None) -> BasinMap:
    n1_grid = np.asarray(n1_grid, float)
    n2_grid = np.asarray(n2_grid, float)
    fps = analyzed_fixed_points(p)
    items = [(a, b) for b in n2_grid for a in n1_grid]
    cells = ordered_map(partial(_basin_cell, p=p, atomic_ic=atomic_ic, scheme=scheme,
                                settings=settings, phases=phases, fps=fps), items, workers)
    return BasinMap(n1_grid, n2_grid, cells, fps)


def dominant_fixed_points(fps: list[FixedPoint]) -> tuple[int, int]:
    """Indices of the stable non-trivial FPs with the largest and smallest n1/n2."""
    cand = [i for i, f in enumerate(fps)
            if f.kind == FPKind.NONTRIVIAL and f.stability == Stability.STABLE]
    if not cand:
        raise NumericalError("no stable non-trivial fixed point")
    cand.sort(key=lambda i: fps[i].n1 / max(fps[i].n2, 1e-300))
    return cand[-1], cand[0]


@dataclass
class ModeSelectionReport:
    scheme: FeedbackScheme
    uncontrolled: SteadyClassification
    controlled: SteadyClassification
    ratio_uncontrolled: float
    ratio_controlled: float
    fixed_points: list[FixedPoint]
    n1_index: int
    n2_index: int
    series: dict = field(default_factory=dict)

    @property
    def controlled_dominance(self) -> str | None:
        return _dominance(self.controlled, self)

    @property
    def uncontrolled_dominance(self) -> str | None:
        return _dominance(self.uncontrolled, self)


def _dominance(cls: SteadyClassification, rep: ModeSelectionReport) -> str | None:
    if cls.kind != SteadyKind.FIXED_POINT:
        return None
    if cls.fp_index == rep.n1_index:
        return "n1"
    if cls.fp_index == rep.n2_index:
        return "n2"
    return None


def mode_selection_experiment(p: SystemParams, scheme: FeedbackScheme, ic,
                              settings: RunSettings = RunSettings()) -> ModeSelectionReport:
    """Run identical initial conditions with and without feedback and compare."""
    fps = analyzed_fixed_points(p)
    i1, i2 = dominant_fixed_points(fps)
    results = {}
    for name, sch in (("uncontrolled", NO_FEEDBACK), ("controlled", scheme)):
        cls, tr = run_until_steady(ic, p, sch, settings.dt, settings.T_max, settings.window,
                                   settings.tol_fp, settings.tol_cycle, settings.chunk,
                                   settings.save_every, fixed_points=fps)
        if cls.kind == SteadyKind.UNDECIDED:
            raise NoConvergence(f"{name} run did not settle (T_max={settings.T_max})")
        results[name] = (cls, tr)
    ratio = {k: v[0].diagnostics["mean_n1"] / max(v[0].diagnostics["mean_n2"], 1e-300)
             for k, v in results.items()}
    series = {k: (v[1].t, *v[1].observables()[:2]) for k, v in results.items()}
    return ModeSelectionReport(scheme, results["uncontrolled"][0], results["controlled"][0],
                               ratio["uncontrolled"], ratio["controlled"], fps, i1, i2, series)


@dataclass
class DualControlRegions:
    fp_indices: tuple[int, int]
    diagrams: tuple[ControlDiagram, ControlDiagram]

    @property
    def unstable(self):
        return tuple(d.valid & (d.rightmost > 0) for d in self.diagrams)

    @property
    def only_first(self):
        u1, u2 = self.unstable
        return u1 & ~u2 & self.diagrams[1].valid

    @property
    def only_second(self):
        u1, u2 = self.unstable
        return u2 & ~u1 & self.diagrams[0].valid

    @property
    def both(self):
        u1, u2 = self.unstable
        return u1 & u2


def dual_control_regions(p: SystemParams, scheme: FeedbackScheme, tau_grid, lambda_grid,
                         n_cheb: int = 24, workers: int | None = None) -> DualControlRegions:
    """Control diagrams of the two stable lasing FPs (ascending omega) under one scheme."""
    fps = analyzed_fixed_points(p)
    idx = [i for i, f in enumerate(fps)
           if f.kind == FPKind.NONTRIVIAL and f.stability == Stability.STABLE]
    if len(idx) != 2:
        raise NumericalError(f"expected two stable lasing FPs, found {len(idx)}")
    diags = tuple(control_diagram(fps[i], p, scheme, tau_grid, lambda_grid, n_cheb,
                                  workers=workers) for i in idx)
    return DualControlRegions(tuple(idx), diags)
