"""Study orchestration: parse flat key-value configs, run tau-refinement
sweeps over solver/correction-count columns in a bounded worker pool, compute
observed orders, and emit CSV tables.

Config files are INI-style: one study per section, one assignment per line.
Numbers may use the ``2^-9`` power notation.  See the README for the schema
of each study kind (fode, wave, subdiff, operator, diagnostics, weights).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from configparser import ConfigParser
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import problems
from .corrections import CorrectionSet, vandermonde_diagnostics
from .fode import (
    MultiTermProblem,
    SolverConfig,
    error_report,
    solve_corrected_wsgl,
    solve_l1,
    solve_trapezoidal,
    two_term_sigma_rule,
)
from .glweights import SampledPath, gl_weights, rl_deriv_power, wsgl_weights, _wsgl_cached
from .corrections import starting_weight_table
from .sem import SpectralMesh
from .tfpde import (
    l2_error,
    solve_subdiffusion,
    solve_subdiffusion_l1_baseline,
    solve_wave,
    solve_wave_l1_baseline,
)

__all__ = [
    "StudyConfig",
    "ConvergenceTable",
    "RowTable",
    "observed_order",
    "parse_config",
    "run_study",
    "worker_count",
]

CONVERGENCE_KINDS = {"fode", "wave", "subdiff"}
ALL_KINDS = CONVERGENCE_KINDS | {"operator", "diagnostics", "weights"}


def worker_count() -> int:
    env = os.environ.get("FRACSTEP_WORKERS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("FRACSTEP_WORKERS must be >= 1")
        return n
    return os.cpu_count() or 1


def _parse_number(tok: str) -> float:
    tok = tok.strip()
    if "^" in tok:
        base, expo = tok.split("^")
        return float(base) ** float(expo)
    return float(tok)


def _parse_list(val: str) -> list:
    return [tok for tok in val.replace(",", " ").split() if tok]


@dataclass(frozen=True)
class StudyConfig:
    """One parsed study section."""

    kind: str
    name: str
    params: dict

    def get(self, key, default=None):
        return self.params.get(key, default)

    def require(self, key):
        if key not in self.params:
            raise KeyError(f"study '{self.name}' is missing required key '{key}'")
        return self.params[key]


def parse_config(path) -> list[StudyConfig]:
    """Parse every study section of an INI-style config file."""
    cp = ConfigParser()
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(path)
    studies = []
    for section in cp.sections():
        raw = dict(cp.items(section))
        if "kind" not in raw:
            raise ValueError(f"section [{section}] has no 'kind'")
        kind = raw.pop("kind").strip()
        if kind not in ALL_KINDS:
            raise ValueError(f"unknown study kind '{kind}' in [{section}]")
        studies.append(StudyConfig(kind, section, raw))
    return studies


def observed_order(errors) -> list[float]:
    """log2(e_i / e_{i+1}) down a halving chain; nonpositive entries yield
    NaN order markers."""
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("need at least two errors")
    out = []
    for a, b in zip(errors, errors[1:]):
        if a <= 0 or b <= 0:
            out.append(math.nan)
        else:
            out.append(math.log2(a / b))
    return out


@dataclass
class RowTable:
    """Plain header + rows table (diagnostics, weights, operator studies)."""

    header: list
    rows: list

    def to_csv(self, path) -> None:
        lines = [",".join(self.header)]
        lines += [",".join(row) for row in self.rows]
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class ConvergenceTable:
    """tau-refinement table: one error column (and derived order column) per
    (column label, norm) pair."""

    taus: list
    norms: list
    groups: list  # (label, {norm: [errors]})

    def orders(self, label: str, norm: str) -> list[float]:
        for lab, data in self.groups:
            if lab == label:
                return observed_order(data[norm])
        raise KeyError(label)

    def errors(self, label: str, norm: str) -> list[float]:
        for lab, data in self.groups:
            if lab == label:
                return list(data[norm])
        raise KeyError(label)

    def to_csv(self, path) -> None:
        header = ["tau"]
        for label, _ in self.groups:
            for norm in self.norms:
                header += [f"{label}_{norm}_error", f"{label}_{norm}_order"]
        lines = [",".join(header)]
        order_cols = {
            (label, norm): observed_order(data[norm]) if len(self.taus) > 1 else []
            for label, data in self.groups
            for norm in self.norms
        }
        for i, tau in enumerate(self.taus):
            row = [f"{tau:.6e}"]
            for label, data in self.groups:
                for norm in self.norms:
                    row.append(f"{data[norm][i]:.4e}")
                    if i == 0:
                        row.append("")
                    else:
                        o = order_cols[(label, norm)][i - 1]
                        row.append("nan" if math.isnan(o) else f"{o:.4f}")
            lines.append(",".join(row))
        Path(path).write_text("\n".join(lines) + "\n")


def sigma_list(rule: str, m: int, alpha: float, alpha2: float | None = None) -> tuple:
    """Expand a sigma-rule string to m exponents.

    Grammar: ``k*alpha``, ``(k+1)*alpha`` (each with an optional ``+offset``
    suffix), ``k+1`` (integers 2, 3, ...), ``twoterm`` (the two-term
    guideline), or ``list: v1 v2 ...``.
    """
    rule = rule.strip()
    if m == 0:
        return ()
    if rule.startswith("list:"):
        vals = [_parse_number(t) for t in _parse_list(rule[5:])]
        if len(vals) < m:
            raise ValueError("explicit sigma list shorter than m")
        return tuple(vals[:m])
    if rule == "twoterm":
        if alpha2 is None:
            raise ValueError("two-term sigma rule needs two orders")
        return two_term_sigma_rule(alpha, alpha2, m).sigmas
    if rule == "k+1":
        return tuple(float(k + 1) for k in range(1, m + 1))
    offset = 0.0
    stem = rule
    if "+" in rule.replace("(k+1)", "(kp1)"):
        stem, off = rule.replace("(k+1)", "(kp1)").rsplit("+", 1)
        stem = stem.replace("(kp1)", "(k+1)")
        offset = _parse_number(off)
    if stem == "k*alpha":
        return tuple(k * alpha + offset for k in range(1, m + 1))
    if stem == "(k+1)*alpha":
        return tuple((k + 1) * alpha + offset for k in range(1, m + 1))
    raise ValueError(f"unknown sigma rule '{rule}'")


def _map_cells(fn, cells):
    """Evaluate fn over the cell list with the bounded worker pool; results
    come back in cell order regardless of scheduling."""
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(fn, cells))


# ---------------------------------------------------------------------------
# fode studies


def _fode_problem(cfg: StudyConfig):
    name = cfg.require("problem")
    if name == "two_term_ml":
        alpha = _parse_number(cfg.require("alpha"))
        T = _parse_number(cfg.get("t_end", "1"))
        return problems.two_term_ml_problem(alpha, T), problems.two_term_ml_exact(alpha)
    if name == "nonlinear_cubic":
        a1, a2 = (_parse_number(t) for t in _parse_list(cfg.require("alphas")))
        T = _parse_number(cfg.get("t_end", "10"))
        return problems.nonlinear_cubic_problem(a1, a2, T), None
    raise ValueError(f"unknown fode problem '{name}'")


def _fode_reference(cfg: StudyConfig, problem: MultiTermProblem, exact):
    ref = cfg.get("reference", "exact")
    if ref == "exact":
        if exact is None:
            raise ValueError("problem has no exact solution; pick a reference method")
        return exact
    method, tau_s = ref.split(":")
    tau = _parse_number(tau_s)
    cache = cfg.get("cache_file")
    if cache and Path(cache).exists():
        data = np.loadtxt(cache, delimiter=",", skiprows=1)
        return SampledPath(tau, data[:, 1])
    if method == "trapezoidal":
        path = solve_trapezoidal(problem, tau)
    elif method == "l1":
        path = solve_l1(problem, tau)
    else:
        raise ValueError(f"unknown reference method '{method}'")
    if cache:
        rows = ["t,y"] + [f"{t:.16e},{y:.16e}" for t, y in zip(path.times, path.values)]
        Path(cache).write_text("\n".join(rows) + "\n")
    return path


def _run_fode(cfg: StudyConfig) -> ConvergenceTable:
    problem, exact = _fode_problem(cfg)
    taus = [_parse_number(t) for t in _parse_list(cfg.require("taus"))]
    columns = _parse_list(cfg.require("columns"))
    norms = _parse_list(cfg.get("norms", "max final avg"))
    # sigma rules count in the study's base order (the config alpha when
    # given), not the problem's leading order
    rule_alpha = _parse_number(cfg.get("alpha", str(problem.alphas[0])))
    alpha2 = problem.alphas[1] if problem.n_terms > 1 else None
    rule = cfg.get("sigma_rule", "k*alpha")
    reference = _fode_reference(cfg, problem, exact)

    def run_cell(cell):
        col, tau = cell
        if col == "l1":
            path = solve_l1(problem, tau)
        elif col in ("trap", "trapezoidal"):
            path = solve_trapezoidal(problem, tau)
        else:
            m = int(col)
            cset = CorrectionSet(sigma_list(rule, m, rule_alpha, alpha2))
            path = solve_corrected_wsgl(problem, SolverConfig(tau=tau, corrections=cset))
        rep = error_report(path, reference)
        return {"max": rep.max_error, "final": rep.final_error, "avg": rep.avg_error}

    cells = [(col, tau) for col in columns for tau in taus]
    results = _map_cells(run_cell, cells)
    groups = []
    for ci, col in enumerate(columns):
        label = col if col in ("l1", "trap", "trapezoidal") else f"m{col}"
        data = {norm: [] for norm in norms}
        for ti in range(len(taus)):
            rep = results[ci * len(taus) + ti]
            for norm in norms:
                data[norm].append(rep[norm])
        groups.append((label, data))
    return ConvergenceTable(taus, norms, groups)


# ---------------------------------------------------------------------------
# wave / subdiffusion studies


def _mesh_from(cfg: StudyConfig, default: SpectralMesh) -> SpectralMesh:
    if "mesh" not in cfg.params:
        return default
    brk = [_parse_number(t) for t in _parse_list(cfg.require("mesh"))]
    degs = [int(t) for t in _parse_list(cfg.require("degrees"))]
    return SpectralMesh(brk, degs)


def _run_wave(cfg: StudyConfig) -> ConvergenceTable:
    case = cfg.get("case", "smooth")
    alphas = [_parse_number(t) for t in _parse_list(cfg.get("alphas", cfg.get("alpha", "0.5")))]
    taus = [_parse_number(t) for t in _parse_list(cfg.require("taus"))]
    columns = [int(t) for t in _parse_list(cfg.require("columns"))]
    apply_to = cfg.get("apply_to", "all")
    norm = cfg.get("norm", "final")
    rule = cfg.get("sigma_rule", "k+1" if case == "smooth" else "(k+1)*alpha")

    def make_problem(alpha):
        if case == "smooth":
            nu = _parse_number(cfg.get("nu", "2"))
            mesh = _mesh_from(cfg, problems.three_zone_mesh())
            return problems.wave_smooth_problem(alpha, nu, mesh), problems.wave_smooth_exact()
        if case == "forced":
            mesh = _mesh_from(cfg, problems.three_zone_mesh())
            return problems.wave_forced_problem(alpha, mesh), None
        raise ValueError(f"unknown wave case '{case}'")

    def sig_for(alpha, m):
        # the rule counts absolute exponents; the wave scheme needs one more
        # than max(m1, m2, m3) never, just m of them
        return sigma_list(rule, m, alpha)

    def counts(m):
        if apply_to == "m3":
            return 0, 0, m
        if apply_to == "all":
            return m, m, m
        raise ValueError(f"unknown apply_to '{apply_to}'")

    def run_cell(cell):
        alpha, m, tau = cell
        problem, exact = make_problem(alpha)
        m1, m2, m3 = counts(m)
        hist = solve_wave(problem, tau, sig_for(alpha, m), m1, m2, m3)
        ref = exact
        if ref is None:
            ref_spec = cfg.require("reference")
            method, tau_s = ref_spec.split(":")
            if method != "self":
                raise ValueError("wave studies support reference = exact or self:<tau>")
            ref = solve_wave(problem, _parse_number(tau_s), sig_for(alpha, m), m1, m2, m3)
        return l2_error(hist, ref, at="average" if norm == "average" else "final")

    cells = [(alpha, m, tau) for alpha in alphas for m in columns for tau in taus]
    results = _map_cells(run_cell, cells)
    groups = []
    idx = 0
    for alpha in alphas:
        for m in columns:
            label = f"a{alpha:g}_m{m}"
            errs = [results[idx + ti] for ti in range(len(taus))]
            idx += len(taus)
            groups.append((label, {norm: errs}))
    return ConvergenceTable(taus, [norm], groups)


def _run_subdiff(cfg: StudyConfig) -> ConvergenceTable:
    taus = [_parse_number(t) for t in _parse_list(cfg.require("taus"))]
    columns = _parse_list(cfg.require("columns"))
    norm = cfg.get("norm", "average")
    rule = cfg.get("sigma_rule", "list:0.75 1.0 1.25 1.5 1.75 2.0 2.25 2.5 2.75 3.0")
    drop = cfg.get("drop_far_field", "false").lower() in ("1", "true", "yes", "on")
    mesh = _mesh_from(cfg, problems.two_zone_unit_mesh(16))
    problem = problems.subdiffusion_forced_problem(mesh)
    ref_spec = cfg.require("reference")
    method, tau_s = ref_spec.split(":")
    if method != "self":
        raise ValueError("subdiff studies support reference = self:<tau> only")
    ref_tau = _parse_number(tau_s)

    def solve_col(col, tau):
        if col == "l1":
            return solve_subdiffusion_l1_baseline(problem, tau)
        m = int(col)
        sig = sigma_list(rule, m, problem.alpha1, problem.alpha2)
        return solve_subdiffusion(problem, tau, sig, m1=m, m2=m, drop_far_field=drop)

    refs = {col: solve_col(col, ref_tau) for col in columns}

    def run_cell(cell):
        col, tau = cell
        hist = solve_col(col, tau)
        return l2_error(hist, refs[col], at="average" if norm == "average" else "final")

    cells = [(col, tau) for col in columns for tau in taus]
    results = _map_cells(run_cell, cells)
    groups = []
    for ci, col in enumerate(columns):
        label = col if col == "l1" else f"m{col}"
        errs = [results[ci * len(taus) + ti] for ti in range(len(taus))]
        groups.append((label, {norm: errs}))
    return ConvergenceTable(taus, [norm], groups)


# ---------------------------------------------------------------------------
# operator / diagnostics / weights studies


def _run_operator(cfg: StudyConfig) -> RowTable:
    alpha = _parse_number(cfg.require("alpha"))
    tau = _parse_number(cfg.require("tau"))
    T = _parse_number(cfg.get("t_end", "1"))
    m_values = [int(t) for t in _parse_list(cfg.require("columns"))]
    rule = cfg.get("sigma_rule", "k*alpha")
    expos = [_parse_number(t) for t in _parse_list(cfg.require("u_exponents"))]
    coeffs = [_parse_number(t) for t in _parse_list(cfg.get("u_coefficients", ""))] or [1.0] * len(
        expos
    )
    n_t = int(round(T / tau))
    t = np.arange(n_t + 1) * tau
    U = sum(c * t**p for c, p in zip(coeffs, expos))
    exact = np.zeros(n_t + 1)
    exact[1:] = sum(c * rl_deriv_power(alpha, p, 1.0) * t[1:] ** (p - alpha) for c, p in zip(coeffs, expos))
    g = _wsgl_cached(alpha, n_t)

    def run_cell(m):
        base = tau ** (-alpha) * np.convolve(g.g, U)[: n_t + 1]
        if m:
            cset = CorrectionSet(sigma_list(rule, m, alpha))
            W = starting_weight_table(alpha, cset, g, n_t)
            base = base + tau ** (-alpha) * (W @ U[1 : m + 1])
        return np.abs(base - exact)

    errs = _map_cells(run_cell, m_values)
    header = ["t"] + [f"m{m}_error" for m in m_values]
    rows = []
    for n in range(1, n_t + 1):
        rows.append([f"{t[n]:.6e}"] + [f"{e[n]:.4e}" for e in errs])
    return RowTable(header, rows)


def _run_diagnostics(cfg: StudyConfig) -> RowTable:
    alphas = [_parse_number(t) for t in _parse_list(cfg.require("alphas"))]
    m_values = [int(t) for t in _parse_list(cfg.require("columns"))]
    rule = cfg.get("sigma_rule", "k*alpha")

    def run_cell(cell):
        alpha, m = cell
        diag = vandermonde_diagnostics(alpha, CorrectionSet(sigma_list(rule, m, alpha)))
        return diag

    cells = [(alpha, m) for alpha in alphas for m in m_values]
    results = _map_cells(run_cell, cells)
    rows = []
    for (alpha, m), diag in zip(cells, results):
        rows.append([f"{alpha:g}", f"{m}", f"{diag.condition_number:.4e}", f"{diag.max_residual:.4e}"])
    return RowTable(["alpha", "m", "condition", "residual"], rows)


def _run_weights(cfg: StudyConfig) -> RowTable:
    alpha = _parse_number(cfg.require("alpha"))
    count = int(cfg.require("count"))
    om = gl_weights(alpha, count).omega
    g = wsgl_weights(alpha, max(count, 1)).g
    rows = [[f"{k}", f"{om[k]:.16e}", f"{g[k]:.16e}"] for k in range(count + 1)]
    return RowTable(["k", "omega", "g"], rows)


_RUNNERS = {
    "fode": _run_fode,
    "wave": _run_wave,
    "subdiff": _run_subdiff,
    "operator": _run_operator,
    "diagnostics": _run_diagnostics,
    "weights": _run_weights,
}


def run_study(config: StudyConfig, out: str | None = None):
    """Run one study; returns its table and writes the CSV when ``out`` (or
    the config's own ``out`` key) names a target."""
    table = _RUNNERS[config.kind](config)
    target = out or config.get("out")
    if target:
        table.to_csv(target)
    return table
