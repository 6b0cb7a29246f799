"""Declarative experiments producing pass/fail reports.

Each experiment kind is a function ``ExperimentConfig -> ExperimentReport``
registered in ``REGISTRY``.  A report is a list of rows; every row pairs a
measured value with a target, the origin of that target and a comparison
rule whose tolerance comes from the configuration.
"""

from __future__ import annotations

import difflib
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gamma as gamma_fn

from . import kernel
from .config import ExperimentConfig, as_float_list, build_model
from .doi import (DOIQuadrature, c_alpha, factorization_residual, refined_csz_decay,
                  scalar_power_identity_check)
from .errors import ConfigParseError, StlabError, TruncationUnsafe
from .models import (ModelKind, ModelTriple, grushin_block, steklov_sequence, tau_of_function,
                     unit_ball_volume)
from .operators import (birman_schwinger, birman_schwinger_counts, fractional_commutator,
                        heat_trace, jacobi_theta, jacobi_theta_dual, minimal_safe_radius,
                        negative_part, positive_part, residue_probe, schrodinger,
                        truncation_safe)
from .oracles import product_phase_by_reordering
from .sequences import (TAIL_FRACTION, decay_exponent_fit, holder_constant, lambda_pm,
                        mu_sequence, spectral_measurability_report, weak_quasi_norm,
                        weyl_limit_fit)
from .symbols import CosineSeries, FourierSymbol, ThetaMatrix, twist_phase

# origin of a target value
CLOSED_FORM = "closed-form"
QUADRATURE = "quadrature"
LATTICE_SUM = "lattice-sum"
MATRIX_ORACLE = "matrix-oracle"
STATEMENT = "stated-exponent"
INVARIANT = "exact-invariant"
TARGET_SOURCES = {CLOSED_FORM, QUADRATURE, LATTICE_SUM, MATRIX_ORACLE, STATEMENT, INVARIANT}

COMPARISONS = ("rel", "abs", "le", "ge", "eq")


@dataclass(frozen=True)
class ReportRow:
    label: str
    measured: float
    target: float
    target_source: str
    tol: float = 0.0
    compare: str = "rel"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.target_source not in TARGET_SOURCES:
            raise ValueError(f"row {self.label!r} has no valid target source")
        if self.compare not in COMPARISONS:
            raise ValueError(f"unknown comparison {self.compare!r}")

    @property
    def rel_err(self) -> float:
        d = abs(self.measured - self.target)
        return d / abs(self.target) if self.target != 0 else d

    @property
    def passed(self) -> bool:
        m, t = self.measured, self.target
        if not math.isfinite(m):
            return False
        if self.compare == "rel":
            return abs(m - t) <= self.tol * (abs(t) if t != 0 else 1.0)
        if self.compare == "abs":
            return abs(m - t) <= self.tol
        if self.compare == "le":
            return m <= t + self.tol
        if self.compare == "ge":
            return m >= t - self.tol
        return m == t

    def to_dict(self) -> dict:
        return {"label": self.label, "params": self.params, "measured": _num(self.measured),
                "target": _num(self.target), "target_source": self.target_source,
                "tol": self.tol, "compare": self.compare, "rel_err": _num(self.rel_err),
                "pass": self.passed}


def _num(x: float):
    x = float(x)
    return x if math.isfinite(x) else str(x)


@dataclass
class ExperimentReport:
    id: str
    kind: str
    rows: list = field(default_factory=list)
    runtime_s: float = 0.0
    diagnostics: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.rows) and all(r.passed for r in self.rows)

    def add(self, *args, **kwargs) -> ReportRow:
        row = ReportRow(*args, **kwargs)
        self.rows.append(row)
        return row

    def add_series(self, name: str, x, y, max_points: int = 1500) -> None:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.size > max_points:
            idx = np.unique(np.linspace(0, x.size - 1, max_points).astype(int))
            x, y = x[idx], y[idx]
        self.series[name] = {"x": [float(v) for v in x], "y": [_num(v) for v in y]}

    def to_dict(self) -> dict:
        return {"id": self.id, "kind": self.kind, "pass": self.passed, "error": self.error,
                "runtime_s": round(self.runtime_s, 6), "rows": [r.to_dict() for r in self.rows],
                "diagnostics": self.diagnostics, "series": self.series}


@dataclass(frozen=True)
class ExperimentKind:
    name: str
    func: Callable
    required: tuple
    anchor: str
    needs_model: bool = True
    optional: tuple = ()


REGISTRY: dict[str, ExperimentKind] = {}


def register(name: str, required: tuple = (), anchor: str = "", needs_model: bool = True,
             optional: tuple = ()):
    def deco(func):
        REGISTRY[name] = ExperimentKind(name, func, tuple(required), anchor, needs_model, tuple(optional))
        return func
    return deco


def check_kind(kind: str) -> None:
    if kind not in REGISTRY:
        hint = difflib.get_close_matches(kind, list(REGISTRY), n=1)
        raise ConfigParseError(f"unknown experiment kind {kind!r}"
                               + (f"; did you mean {hint[0]!r}?" if hint else ""))


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run one experiment; library errors become a failing report."""
    check_kind(cfg.kind)
    t0 = time.perf_counter()
    try:
        report = REGISTRY[cfg.kind].func(cfg)
    except StlabError as exc:
        report = ExperimentReport(cfg.id, cfg.kind, error=f"{type(exc).__name__}: {exc}")
    report.runtime_s = time.perf_counter() - t0
    return report


# -- helpers -------------------------------------------------------------------


def _model(cfg: ExperimentConfig, M: int | None = None) -> ModelTriple:
    return build_model(cfg.model, cfg.symbols, M)


def trusted_fraction(model: ModelTriple) -> float:
    """Share of the spectrum unaffected by the cube-shaped truncation.

    For lattice models in dimension ``n >= 2`` only modes inside the
    inscribed ball are complete; elsewhere the whole range counts.
    """
    if model.kind in (ModelKind.TORUS, ModelKind.QUANTUM_TORUS, ModelKind.DIRAC_QUANTUM_TORUS) \
            and model.n >= 2:
        inside = np.count_nonzero(model.basis.norms() <= model.M)
        return inside / model.basis.size
    return 1.0


def _valid_length(model: ModelTriple, length: int, tail: float) -> int:
    return int(math.floor((1.0 - tail) * trusted_fraction(model) * length))


def _branch_fit(model, values, exponent, wf, tail):
    return weyl_limit_fit(values, exponent, wf, tail_fraction=tail,
                          valid_length=_valid_length(model, len(values), tail))


def _unit_symbol(model: ModelTriple):
    if model.kind in (ModelKind.RECTANGLE_DIRICHLET, ModelKind.RECTANGLE_NEUMANN):
        return CosineSeries({(0, 0): 1.0})
    return FourierSymbol.constant(model.n, 1.0)


def _scaled_series(values, exponent):
    j = np.arange(1, len(values) + 1, dtype=float)
    return j, j ** exponent * np.asarray(values)


# -- Weyl-type laws ----------------------------------------------------------------


@register("condition_W", ("tol",), "lim j^{2/p} lambda_j(a D^-2 a) = tau[a^p]^{2/p} for positive a",
          optional=('M_oracle', 'tail_fraction', 'window_fraction'))

def check_condition_W(cfg: ExperimentConfig) -> ExperimentReport:
    model = _model(cfg)
    a = cfg.symbol("a", _unit_symbol(model))
    wf = float(cfg.param("window_fraction", 0.5))
    tail = float(cfg.param("tail_fraction", TAIL_FRACTION))
    p = model.p
    A = model.symbol_matrix(a)
    K = A @ model.abs_power(-2.0) @ A
    seq = lambda_pm(K)
    fit = _branch_fit(model, seq.positive, 2.0 / p, wf, tail)
    tau = tau_of_function(model, a, lambda t: np.abs(t) ** p, int(cfg.param("M_oracle", 64)))
    target = tau.value ** (2.0 / p)
    rep = ExperimentReport(cfg.id, cfg.kind)
    rep.add("weyl_limit", fit.limit, target, QUADRATURE if model.is_commutative else MATRIX_ORACLE,
            float(cfg.require("tol")), params={"exponent": 2.0 / p})
    rep.diagnostics.update(window=list(fit.window), spread=fit.spread, oracle_diff=tau.difference)
    rep.add_series("j^(2/p) lambda_j", *_scaled_series(seq.positive, 2.0 / p))
    return rep


@register("bs_asymptotics", ("q", "tol"),
          "lim j^{q/p} lambda_j^pm(|D|^-q/2 a |D|^-q/2) = tau[a_pm^{p/q}]^{q/p}",
          optional=('M_oracle', 'tail_fraction', 'window_fraction'))

def check_bs_asymptotics(cfg: ExperimentConfig) -> ExperimentReport:
    model = _model(cfg)
    a = cfg.symbol("a")
    q = float(cfg.require("q"))
    wf = float(cfg.param("window_fraction", 0.5))
    tail = float(cfg.param("tail_fraction", TAIL_FRACTION))
    M_or = int(cfg.param("M_oracle", 64))
    p = model.p
    seq = lambda_pm(birman_schwinger(model, a, q))
    rep = ExperimentReport(cfg.id, cfg.kind)
    src = QUADRATURE if model.is_commutative else MATRIX_ORACLE
    for name, branch, part in (("plus", seq.positive, positive_part),
                               ("minus", seq.negative, negative_part)):
        target = tau_of_function(model, a, lambda t: part(t) ** (p / q), M_or).value ** (q / p)
        if len(branch) < 32:
            rep.add(f"lambda_{name}", 0.0, target, src, float(cfg.require("tol")), "abs")
            continue
        fit = _branch_fit(model, branch, q / p, wf, tail)
        rep.add(f"lambda_{name}", fit.limit, target, src, float(cfg.require("tol")),
                params={"q": q})
        rep.diagnostics[f"spread_{name}"] = fit.spread
        rep.add_series(f"j^(q/p) lambda_j {name}", *_scaled_series(branch, q / p))
    return rep


@register("torus_weyl", ("j_lo", "j_hi", "tol"),
          "lambda_j(Laplacian)^{n/2} / j -> 1/|B^n| on the flat torus",
          optional=('dense',))

def check_torus_weyl(cfg: ExperimentConfig) -> ExperimentReport:
    model = _model(cfg)
    j_lo, j_hi = int(cfg.require("j_lo")), int(cfg.require("j_hi"))
    if cfg.param("dense", True):
        lam = kernel.eigvalsh(model.d_squared_matrix())
    else:
        lam = model.d_squared_spectrum()
    j = np.arange(j_lo, j_hi + 1)
    ratio = lam[j] ** (model.n / 2.0) / (j + 1.0)
    rep = ExperimentReport(cfg.id, cfg.kind)
    rep.add("median_ratio", float(np.median(ratio)), 1.0 / unit_ball_volume(model.n), CLOSED_FORM,
            float(cfg.require("tol")), params={"j_lo": j_lo, "j_hi": j_hi})
    rep.diagnostics.update(dim=model.dim, spread=float(ratio.max() - ratio.min()))
    jj = np.arange(1, lam.size)
    rep.add_series("lambda_j^(n/2)/(j+1)", jj, lam[jj] ** (model.n / 2.0) / (jj + 1.0))
    return rep


@register("steklov", ("tol",), "j lambda_j^pm of Lambda^-1/2 gamma Lambda^-1/2 -> c(1) int gamma_pm",
          optional=('M_oracle', 'tail_fraction', 'window_fraction'))

def steklov_check(cfg: ExperimentConfig) -> ExperimentReport:
    model = _model(cfg)
    wf = float(cfg.param("window_fraction", 0.5))
    tail = float(cfg.param("tail_fraction", TAIL_FRACTION))
    seq = steklov_sequence(model)
    rep = ExperimentReport(cfg.id, cfg.kind)
    M_or = int(cfg.param("M_oracle", 256))
    for name, branch, part in (("plus", seq.positive, positive_part),
                               ("minus", seq.negative, negative_part)):
        target = tau_of_function(model, model.weight, part, M_or).value
        if len(branch) < 32:
            rep.add(f"lambda_{name}", 0.0, target, QUADRATURE, float(cfg.require("tol")), "abs")
            continue
        fit = weyl_limit_fit(branch, 1.0, wf, tail_fraction=tail)
        rep.add(f"lambda_{name}", fit.limit, target, QUADRATURE, float(cfg.require("tol")))
        rep.diagnostics[f"spread_{name}"] = fit.spread
        rep.diagnostics[f"window_{name}"] = list(fit.window)
        rep.add_series(f"j lambda_j {name}", *_scaled_series(branch, 1.0))
    return rep


def grushin_exponent(Mx: int, My: int, j_lo: int, j_hi: int) -> tuple[float, np.ndarray]:
    """Growth exponent of the nonzero sub-Laplacian eigenvalues over ``[j_lo, j_hi]``.

    Raises ``TruncationUnsafe`` unless the smallest eigenvalue of the first
    excluded ``y``-frequency block exceeds ``lambda_{j_hi}``: blocks increase
    in the Loewner order with ``eta^2``, so every omitted eigenvalue then lies
    above the window.
    """
    vals = []
    for eta in range(-My, My + 1):
        vals.append(kernel.banded_eigvalsh(grushin_block(Mx, eta), 2))
    lam = np.sort(np.concatenate(vals))
    lam = lam[lam > 1e-9]
    if j_hi >= lam.size:
        raise TruncationUnsafe(f"only {lam.size} eigenvalues, window needs {j_hi + 1}")
    edge = float(kernel.banded_eigvalsh(grushin_block(Mx, My + 1), 2)[0])
    if edge <= lam[j_hi]:
        raise TruncationUnsafe(
            f"first omitted block starts at {edge:.4g} <= lambda_{j_hi} = {lam[j_hi]:.4g}; raise My")
    # the x-truncation is safe once (Mx+1)^2 exceeds the window as well
    if (Mx + 1) ** 2 <= lam[j_hi]:
        raise TruncationUnsafe(f"(Mx+1)^2 = {(Mx + 1) ** 2} <= lambda_{j_hi}; raise Mx")
    rate = decay_exponent_fit(1.0 / lam, window=(j_lo, j_hi))
    return rate, lam


@register("grushin_exponent", ("Mx", "My", "j_lo", "j_hi", "tol", "tol_stability"),
          "Grushin sub-Laplacian eigenvalues grow like j^{2/3} (homogeneous dimension 3)",
          needs_model=False,
          optional=('check_eta0',))

def grushin_exponent_check(cfg: ExperimentConfig) -> ExperimentReport:
    Mx, My = int(cfg.require("Mx")), int(cfg.require("My"))
    j_lo, j_hi = int(cfg.require("j_lo")), int(cfg.require("j_hi"))
    rep = ExperimentReport(cfg.id, cfg.kind)
    e1, lam = grushin_exponent(Mx, My, j_lo, j_hi)
    rep.add("exponent", e1, 2.0 / 3.0, STATEMENT, float(cfg.require("tol")), "abs",
            params={"Mx": Mx, "My": My})
    e2, _ = grushin_exponent(Mx, 2 * My, j_lo, j_hi)
    rep.add("doubling_shift", abs(e2 - e1), 0.0, INVARIANT, float(cfg.require("tol_stability")),
            "le", params={"My": 2 * My})
    if cfg.param("check_eta0", True):
        k = np.arange(1, Mx + 1, dtype=float)
        eta0 = np.sort(np.repeat(k ** 2, 2))
        e0 = decay_exponent_fit(1.0 / eta0, window=(eta0.size // 4, eta0.size - 1))
        rep.add("eta0_exponent", e0, 2.0, CLOSED_FORM, float(cfg.require("tol")), "abs")
    rep.diagnostics.update(exponent_doubled=e2, lambda_window=[float(lam[j_lo]), float(lam[j_hi])])
    j = np.arange(1, min(lam.size, 4 * j_hi) + 1)
    rep.add_series("lambda_j", j, lam[: j.size])
    return rep


# -- trace conditions ------------------------------------------------------------


@register("condition_H", ("t_grid", "tol"), "t^{p/2} Tr[a e^{-tD^2}] / Gamma(1+p/2) -> tau(a)",
          optional=('superpoly_power',))

def check_condition_H(cfg: ExperimentConfig) -> ExperimentReport:
    model = _model(cfg)
    a = cfg.symbol("a", _unit_symbol(model))
    t = sorted(as_float_list(cfg.require("t_grid")))
    p = model.p
    curve = heat_trace(model, a, t)
    target = model.tau(a)
    measured = np.asarray(t) ** (p / 2.0) * curve.values / float(gamma_fn(1.0 + p / 2.0))
    rep = ExperimentReport(cfg.id, cfg.kind)
    tol = float(cfg.require("tol"))
    for ti, m in zip(t, measured):
        rep.add("scaled_trace", float(m), target, CLOSED_FORM, tol, params={"t": ti})
    resid = np.abs(measured - target) / (abs(target) if target else 1.0)
    if len(t) >= 2 and resid[0] > 0 and resid[1] > 0:
        # apparent power of the remainder between the two smallest times
        rate = math.log(resid[1] / resid[0]) / math.log(t[1] / t[0])
        rep.diagnostics["remainder_power"] = rate
        rep.diagnostics["super_polynomial"] = bool(rate > float(cfg.param("superpoly_power", 8.0)))
    else:
        rep.diagnostics["super_polynomial"] = bool(np.all(resid[:2] < 1e-14))
    rep.add_series("scaled_trace", t, measured)
    return rep


@register("heat_theta", ("t_grid", "tol"), "lattice heat trace equals the n-th power of the Jacobi theta sum")
def check_heat_theta(cfg: ExperimentConfig) -> ExperimentReport:
    model = _model(cfg)
    t = sorted(as_float_list(cfg.require("t_grid")))
    curve = heat_trace(model, None, t)
    rep = ExperimentReport(cfg.id, cfg.kind)
    tol = float(cfg.require("tol"))
    for ti, v in zip(t, curve.values):
        target = jacobi_theta_dual(ti) ** model.n
        rep.add("trace_vs_theta", float(v), target, CLOSED_FORM, tol, "abs", params={"t": ti})
    rep.diagnostics["direct_theta"] = [jacobi_theta(ti) for ti in t]
    return rep


@register("condition_Z", ("eps_grid", "tol"), "(s-p) Tr[a |D|^-s] -> p tau(a) as s decreases to p",
          optional=('tail_correction',))

def check_condition_Z(cfg: ExperimentConfig) -> ExperimentReport:
    model = _model(cfg)
    a = cfg.symbol("a", _unit_symbol(model))
    probe = residue_probe(model, a, as_float_list(cfg.require("eps_grid")),
                          bool(cfg.param("tail_correction", True)))
    target = model.p * model.tau(a)
    rep = ExperimentReport(cfg.id, cfg.kind)
    tol = float(cfg.require("tol"))
    rep.add("residue", probe.extrapolated, target, CLOSED_FORM, tol,
            "rel" if target != 0 else "abs")
    rep.diagnostics["scaled"] = [float(x) for x in probe.scaled]
    rep.add_series("eps * zeta(p+eps)", probe.eps, probe.scaled)
    return rep


# -- semiclassics --------------------------------------------------------------------


def _sweep_target(cfg, V, q, lam, probe_model):
    p = probe_model.p
    f = lambda t: np.maximum(lam - t, 0.0) ** (p / (2.0 * q))  # noqa: E731
    M_or = int(cfg.param("M_oracle", 32))
    return tau_of_function(probe_model, V, f, M_or)


@register("semiclassical_sweep", ("h_grid", "tol"),
          "h^p N(h^{2q} D^{2q} + V; lambda) -> tau[(V-lambda)_-^{p/2q}] as h -> 0",
          optional=('M', 'M_oracle', 'bound_slack', 'lam', 'q'))

def semiclassical_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    V = cfg.symbol("V")
    q = float(cfg.param("q", 1.0))
    lam = float(cfg.param("lam", 0.0))
    hs = sorted(as_float_list(cfg.require("h_grid")), reverse=True)
    fixed_M = cfg.param("M")
    probe_model = _model(cfg, 1)
    p = probe_model.p
    tau = _sweep_target(cfg, V, q, lam, probe_model)
    rep = ExperimentReport(cfg.id, cfg.kind)
    slack = float(cfg.param("bound_slack", 0.5))
    values = []
    near = []
    radii = []
    for h in hs:
        M = int(fixed_M) if fixed_M is not None else minimal_safe_radius(h, q, V, lam)
        model = _model(cfg, M)
        if not truncation_safe(model, V, q, h, lam):
            raise TruncationUnsafe(f"M={M} is not truncation-safe at h={h:g}")
        H = schrodinger(model, V, q, h, lam)
        ev = H.eigenvalues()
        count = int(np.count_nonzero(ev < lam))
        near.append(bool(np.min(np.abs(ev - lam)) < 1e-9))
        radii.append(M)
        values.append(h ** p * count)
        rep.add("scaled_count_bound", h ** p * count, tau.value * (1.0 + slack), INVARIANT,
                compare="le", params={"h": h, "M": M, "count": count})
    hs_arr = np.asarray(hs)
    vals = np.asarray(values)
    order = np.argsort(hs_arr)
    half = max(2, int(math.ceil(len(hs) / 2)))
    sel = order[:half]
    slope, intercept = np.polyfit(hs_arr[sel], vals[sel], 1)
    src = QUADRATURE if probe_model.is_commutative else MATRIX_ORACLE
    rep.add("extrapolated", float(intercept), tau.value, src, float(cfg.require("tol")),
            "rel" if tau.value != 0 else "abs")
    rep.diagnostics.update(radii=radii, near_threshold=near, slope=float(slope),
                           oracle_diff=tau.difference)
    rep.add_series("h^p N", hs_arr, vals)
    return rep


@register("birman_schwinger_principle", ("trials", "min_dim", "max_dim"),
          "#{spec(H0+V) < 0} = #{spec(H0^-1/2 V H0^-1/2) < -1}", needs_model=False,
          optional=('h_grid',))

def birman_schwinger_principle_check(cfg: ExperimentConfig) -> ExperimentReport:
    rng = np.random.default_rng(cfg.seed)
    trials = int(cfg.require("trials"))
    lo, hi = int(cfg.require("min_dim")), int(cfg.require("max_dim"))
    failures = 0
    for _ in range(trials):
        n = int(rng.integers(lo, hi + 1))
        X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        H0 = X @ X.conj().T / n + float(rng.uniform(0.05, 1.0)) * np.eye(n)
        Y = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        V = (Y + Y.conj().T) * float(rng.uniform(0.2, 2.0))
        direct, bs = birman_schwinger_counts(H0, V)
        failures += direct != bs
    rep = ExperimentReport(cfg.id, cfg.kind)
    rep.add("random_failures", float(failures), 0.0, INVARIANT, compare="eq",
            params={"trials": trials})
    if cfg.model and "V" in cfg.symbols:
        model = _model(cfg)
        Vm = model.symbol_matrix(cfg.symbol("V"))
        shift_fail = 0
        hs = as_float_list(cfg.param("h_grid", list(np.linspace(0.05, 1.0, 20))))
        for h in hs:
            H0 = np.diag(h ** 2 * model.d_values ** 2 + 1.0)
            direct, bs = birman_schwinger_counts(H0, Vm - np.eye(model.dim))
            shift_fail += direct != bs
        rep.add("shifted_family_failures", float(shift_fail), 0.0, INVARIANT, compare="eq",
                params={"h_points": len(hs)})
    return rep


# -- integration formula ------------------------------------------------------------


@register("integration_formula", ("tol",),
          "Lambda+ - Lambda- and the log-average of |D|^-p/2 a |D|^-p/2 both equal tau[a]",
          optional=('M_oracle', 'N', 'tail_fraction', 'window_fraction'))

def integration_formula_check(cfg: ExperimentConfig) -> ExperimentReport:
    model = _model(cfg)
    a = cfg.symbol("a")
    p = model.p
    tol = float(cfg.require("tol"))
    wf = float(cfg.param("window_fraction", 0.5))
    tail = float(cfg.param("tail_fraction", TAIL_FRACTION))
    M_or = int(cfg.param("M_oracle", 64))
    B = birman_schwinger(model, a, p)
    ev = kernel.eigvalsh(B)
    N = cfg.param("N")
    if N is None:
        N = _valid_length(model, ev.size, tail)
    report = spectral_measurability_report(ev, window_fraction=wf, tol=tol, N=int(N),
                                           tail_fraction=tail, p=p)
    src = QUADRATURE if model.is_commutative else MATRIX_ORACLE
    tau_a = tau_of_function(model, a, lambda t: t, M_or).value
    tau_plus = tau_of_function(model, a, positive_part, M_or).value
    tau_abs = tau_of_function(model, a, np.abs, M_or).value
    rep = ExperimentReport(cfg.id, cfg.kind)
    cmp = "rel" if tau_a != 0 else "abs"
    rep.add("lambda_plus", report.lambda_plus, tau_plus, src, tol,
            "rel" if tau_plus != 0 else "abs")
    rep.add("lambda_difference", report.difference, tau_a, src, tol, cmp)
    rep.add("log_average", report.log_average, tau_a, src, tol, cmp, params={"N": int(N)})
    mu = mu_sequence(B)
    fit_abs = weyl_limit_fit(mu, 1.0 / p, wf, tail_fraction=tail,
                             valid_length=_valid_length(model, len(mu), tail))
    rep.add("abs_limit", fit_abs.limit, tau_abs, src, tol, "rel" if tau_abs != 0 else "abs")
    est = [report.lambda_plus, report.difference, report.log_average] if tau_a != 0 else \
        [report.difference, report.log_average]
    scale = max(abs(x) for x in est) or 1.0
    rep.add("mutual_spread", (max(est) - min(est)) / scale, 0.0, INVARIANT, tol, "le")
    rep.diagnostics.update(lambda_minus=report.lambda_minus, consistent=report.consistent)
    seq = lambda_pm(ev)
    rep.add_series("j lambda_j plus", *_scaled_series(seq.positive, 1.0 / p))
    if len(seq.negative):
        rep.add_series("j lambda_j minus", *_scaled_series(seq.negative, 1.0 / p))
    return rep


# -- commutators and DOIs ---------------------------------------------------------------


@register("commutator_schatten", ("q_grid", "tol", "tol_norm"),
          "mu_j([|D|^-q, a]) decays like j^{-(q+1)/p}; weak quasi-norm bounded in M",
          optional=('window_fraction',))

def commutator_schatten_check(cfg: ExperimentConfig) -> ExperimentReport:
    model = _model(cfg)
    big = _model(cfg, 2 * model.M)
    a = cfg.symbol("a")
    p = model.p
    wf = float(cfg.param("window_fraction", 0.5))
    rep = ExperimentReport(cfg.id, cfg.kind)
    for q in as_float_list(cfg.require("q_grid")):
        seq = mu_sequence(fractional_commutator(model, a, q))
        if seq.values[0] == 0.0:
            rep.add("exact_zero", 0.0, 0.0, INVARIANT, compare="eq", params={"q": q})
            continue
        rate = decay_exponent_fit(seq, wf)
        rep.add("decay_exponent", rate, (q + 1.0) / p, STATEMENT, float(cfg.require("tol")), "abs",
                params={"q": q})
        n1 = weak_quasi_norm(seq, p / (q + 1.0))
        n2 = weak_quasi_norm(mu_sequence(fractional_commutator(big, a, q)), p / (q + 1.0))
        rep.add("quasi_norm_change", abs(n2 / n1 - 1.0), 0.0, INVARIANT,
                float(cfg.require("tol_norm")), "le", params={"q": q, "norm_M": n1, "norm_2M": n2})
        j = np.arange(1, len(seq) + 1)
        rep.add_series(f"mu_j q={q:g}", j, seq.values)
    return rep


@register("doi_scalar", ("x_grid", "alpha_grid", "tol"),
          "|x|^-alpha = c(alpha) int_0^inf mu^{1-alpha} (x^2+mu^2)^-1 dmu", needs_model=False,
          optional=('quad_tol',))

def doi_scalar_check(cfg: ExperimentConfig) -> ExperimentReport:
    quad = DOIQuadrature(rel_tol=float(cfg.param("quad_tol", 1e-10)))
    rep = ExperimentReport(cfg.id, cfg.kind)
    tol = float(cfg.require("tol"))
    for x in as_float_list(cfg.require("x_grid")):
        for al in as_float_list(cfg.require("alpha_grid")):
            r = scalar_power_identity_check(x, al, quad)
            rep.add("residual", r, 0.0, CLOSED_FORM, tol, "le", params={"x": x, "alpha": al})
    return rep


def random_kernel_decomposition(rng, n: int) -> kernel.SpectralDecomposition:
    """Random Hermitian spectral data with exactly one zero eigenvalue."""
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    dec = kernel.eigh(X + X.conj().T)
    lam = np.array(dec.eigenvalues)
    lam[np.argmin(np.abs(lam))] = 0.0
    return kernel.SpectralDecomposition(lam, np.array(dec.eigenvectors), 1e-12)


@register("factorization", ("trials", "alpha_grid", "tol"),
          "[|D|^-alpha, a] = |D|^-beta Phi([D,a]) |D|^-gamma + kernel terms", needs_model=False,
          optional=('beta', 'gamma', 'max_dim', 'min_dim', 'quad_tol'))

def factorization_check(cfg: ExperimentConfig) -> ExperimentReport:
    rng = np.random.default_rng(cfg.seed)
    quad = DOIQuadrature(rel_tol=float(cfg.param("quad_tol", 1e-6)))
    beta = float(cfg.param("beta", 0.0))
    gamma = float(cfg.param("gamma", 0.0))
    lo, hi = int(cfg.param("min_dim", 12)), int(cfg.param("max_dim", 16))
    tol = float(cfg.require("tol"))
    rep = ExperimentReport(cfg.id, cfg.kind)
    worst = 0.0
    for trial in range(int(cfg.require("trials"))):
        n = int(rng.integers(lo, hi + 1))
        D = random_kernel_decomposition(rng, n)
        Y = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        A = Y + Y.conj().T
        for al in as_float_list(cfg.require("alpha_grid")):
            r = factorization_residual(D, A, al, beta, gamma, quad)
            worst = max(worst, r.relative_residual)
            rep.add("relative_residual", r.relative_residual, 0.0, INVARIANT, tol, "le",
                    params={"trial": trial, "dim": n, "alpha": al})
    if cfg.model and "a" in cfg.symbols:
        model = _model(cfg)
        for al in as_float_list(cfg.require("alpha_grid")):
            r = factorization_residual(model, cfg.symbol("a"), al, beta, gamma, quad)
            rep.add("model_relative_residual", r.relative_residual, 0.0, INVARIANT, tol, "le",
                    params={"alpha": al})
    rep.diagnostics["worst"] = worst
    return rep


@register("refined_csz", ("alpha", "s", "min_exponent"),
          "(a^1/2 |D|^-alpha a^1/2)^s - |D|^-alpha s a^s decays faster than either term",
          optional=('window_fraction',))

def refined_csz_check(cfg: ExperimentConfig) -> ExperimentReport:
    model = _model(cfg)
    a = cfg.symbol("a")
    rep = ExperimentReport(cfg.id, cfg.kind)
    for s in as_float_list(cfg.require("s")):
        r = refined_csz_decay(model, a, float(cfg.require("alpha")), s,
                              float(cfg.param("window_fraction", 0.5)))
        rep.add("decay_exponent", r.exponent, float(cfg.require("min_exponent")), STATEMENT,
                compare="ge", params={"s": s, "baseline": r.baseline, "improved": r.improved})
        j = np.arange(1, r.singular_values.size + 1)
        rep.add_series(f"mu_j s={s:g}", j, r.singular_values)
    return rep


# -- property suites ---------------------------------------------------------------------


def _random_power_law_matrix(rng, n: int, p: float) -> np.ndarray:
    """Random matrix with singular values close to ``j^{-1/p}``."""
    U, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    V, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    s = np.arange(1, n + 1, dtype=float) ** (-1.0 / p) * rng.uniform(0.2, 1.0, size=n)
    return (U * s) @ V.conj().T


@register("holder_inequality", ("trials",), "weak-Schatten Holder inequality with its explicit constant",
          needs_model=False,
          optional=('max_dim', 'min_dim'))

def holder_check(cfg: ExperimentConfig) -> ExperimentReport:
    rng = np.random.default_rng(cfg.seed)
    trials = int(cfg.require("trials"))
    lo, hi = int(cfg.param("min_dim", 8)), int(cfg.param("max_dim", 40))
    violations = 0
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(lo, hi + 1))
        p, q = (float(x) for x in rng.uniform(0.3, 4.0, size=2))
        r = p * q / (p + q)
        if rng.random() < 0.5:
            S, T = _random_power_law_matrix(rng, n, p), _random_power_law_matrix(rng, n, q)
        else:
            S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            T = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        lhs = weak_quasi_norm(mu_sequence(S @ T), r)
        rhs = holder_constant(p, q) * weak_quasi_norm(mu_sequence(S), p) * \
            weak_quasi_norm(mu_sequence(T), q)
        worst = max(worst, lhs / rhs)
        violations += lhs > rhs * (1.0 + 1e-12)
    rep = ExperimentReport(cfg.id, cfg.kind)
    rep.add("violations", float(violations), 0.0, INVARIANT, compare="eq", params={"trials": trials})
    rep.diagnostics["worst_ratio"] = worst
    return rep


@register("fan_inequality", ("trials",), "mu_{j+k}(S+T) <= mu_j(S) + mu_k(T)", needs_model=False)
def fan_check(cfg: ExperimentConfig) -> ExperimentReport:
    rng = np.random.default_rng(cfg.seed)
    violations = 0
    trials = int(cfg.require("trials"))
    for _ in range(trials):
        n = int(rng.integers(6, 30))
        S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        rank = int(rng.integers(1, n // 2 + 1))
        R = (rng.normal(size=(n, rank)) @ rng.normal(size=(rank, n))) * float(rng.uniform(0.1, 10))
        T = rng.normal(size=(n, n)) * float(rng.uniform(0.01, 3.0))
        mS, mR = mu_sequence(S).values, mu_sequence(R).values
        mT, mST = mu_sequence(T).values, mu_sequence(S + T).values
        mSR = mu_sequence(S + R).values
        slack = 1e-10 * (mS[0] + mR[0] + mT[0])
        for j in range(n - rank):
            # finite-rank shift: mu_rank(R) vanishes up to rounding
            violations += mSR[j + rank] > mS[j] + mR[rank] + slack
        for j in range(n):
            for k in range(n - j):
                violations += mST[j + k] > mS[j] + mT[k] + slack
    rep = ExperimentReport(cfg.id, cfg.kind)
    rep.add("violations", float(violations), 0.0, INVARIANT, compare="eq", params={"trials": trials})
    return rep


@register("partial_power_semigroup", ("trials", "tol"),
          "|D|^z1 |D|^z2 = |D|^(z1+z2) with the kernel removed", needs_model=False)
def semigroup_check(cfg: ExperimentConfig) -> ExperimentReport:
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(int(cfg.require("trials"))):
        n = int(rng.integers(4, 24))
        U, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        lam = rng.uniform(0.5, 3.0, size=n) * rng.choice([-1.0, 1.0], size=n)
        lam[rng.integers(0, n)] = 0.0
        A = (U * lam) @ U.conj().T
        D = kernel.eigh(A)
        z1 = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        z2 = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        lhs = kernel.partial_power(D, z1) @ kernel.partial_power(D, z2)
        rhs = kernel.partial_power(D, z1 + z2)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) / max(1.0, float(np.max(np.abs(rhs)))))
    rep = ExperimentReport(cfg.id, cfg.kind)
    rep.add("max_deviation", worst, 0.0, INVARIANT, float(cfg.require("tol")), "le")
    return rep


@register("twist_cocycle", ("n_grid", "trials", "tol"),
          "phase cocycle identity and agreement with word reordering", needs_model=False,
          optional=('oracle_trials',))

def twist_cocycle_check(cfg: ExperimentConfig) -> ExperimentReport:
    rng = np.random.default_rng(cfg.seed)
    tol = float(cfg.require("tol"))
    rep = ExperimentReport(cfg.id, cfg.kind)
    for n in (int(x) for x in as_float_list(cfg.require("n_grid"))):
        A = rng.uniform(-1, 1, size=(n, n))
        theta = ThetaMatrix(np.triu(A, 1) - np.triu(A, 1).T)
        defect = 0.0
        for _ in range(int(cfg.require("trials"))):
            k, m, l = (rng.integers(-5, 6, size=n) for _ in range(3))
            lhs = twist_phase(theta, k, m) * twist_phase(theta, k + m, l)
            rhs = twist_phase(theta, m, l) * twist_phase(theta, k, m + l)
            defect = max(defect, abs(lhs - rhs))
        rep.add("cocycle_defect", defect, 0.0, INVARIANT, tol, "le", params={"n": n})
        mismatch = 0.0
        for _ in range(int(cfg.param("oracle_trials", 200))):
            # words of length <= 6: |k|_1 + |m|_1 <= 6
            while True:
                k = rng.integers(-2, 3, size=n)
                m = rng.integers(-2, 3, size=n)
                if np.abs(k).sum() + np.abs(m).sum() <= 6:
                    break
            mismatch = max(mismatch, abs(twist_phase(theta, k, m)
                                         - product_phase_by_reordering(theta.entries, k, m)))
        rep.add("reordering_mismatch", mismatch, 0.0, INVARIANT, tol, "le", params={"n": n})
    return rep


def list_experiments() -> list[tuple[str, tuple, str]]:
    return [(k.name, k.required, k.anchor) for k in sorted(REGISTRY.values(), key=lambda k: k.name)]


__all__ = ["REGISTRY", "ExperimentReport", "ReportRow", "run_experiment", "list_experiments",
           "c_alpha"]
