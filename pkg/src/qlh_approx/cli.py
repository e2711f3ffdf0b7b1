"""Command-line driver: builds schedules, schemes and methods from flags or a
key=value file, runs one experiment and writes a CSV table plus a keyed-text
report.

Exit status: 0 when every verdict passes, 1 when any fails, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterDomainError
from .korovkin import (
    E0,
    E1,
    E2,
    ConvergenceReport,
    OperatorFamily,
    Verdict,
    dwA_korovkin_report,
    psummability_korovkin_report,
    uniform_grid,
)
from .lagrange_hermite import LHParams, lh_coefficient, prefactor
from .operator import ParamSchedule, apply_grid_many, evaluate, is_perfect_square
from .qcalc import q_integer
from .summability import (
    CesaroMatrix,
    DeferredScheme,
    IdentityMatrix,
    PowerSeriesMethod,
    SummabilityMatrix,
    dw_regularity_residuals,
    dyadic_u_grid,
    full_scheme,
    geometric_method,
    half_deferred_scheme,
    ones_method,
)

COMMANDS = ("moments", "normalization", "dwa-korovkin", "psum-korovkin", "counterexample", "regularity")
MOMENT_TOL = 1e-8
COUNTEREXAMPLE_TOL = 0.02

# named presets; the short forms are accepted too
MATRIX_PRESETS = {"identity": "identity", "identity-matrix": "identity", "cesaro": "cesaro", "cesaro-matrix": "cesaro"}
PN_PRESETS = {"ones": "ones", "ones-weights": "ones", "geometric-pn": "geometric:0.5"}

# per-command defaults: (n_start, n_end, n_step, grid_points)
_DEFAULTS = {
    "moments": (10, 10, 1, 101),
    "normalization": (10, 10, 1, 101),
    "dwa-korovkin": (1, 200, 1, 1001),
    "psum-korovkin": (1, 200, 1, 1001),
    "counterexample": (1, 200, 1, 1001),
    "regularity": (100, 1000, 100, 1001),
}


class ConfigError(ValueError):
    """A configuration field is missing, malformed or out of range."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    command: str
    n_start: int
    n_end: int
    n_step: int
    r: int
    alpha_rule: str
    q_rule: str
    scheme: str
    matrix: str
    pn: str
    grid_points: int
    tail_tol: float
    u_grid: str
    g: str = "e2"
    eps: float = 0.01
    eps_prime: float = 0.05
    out: str | None = None
    schedule: ParamSchedule = field(init=False, repr=False)

    @property
    def ns(self) -> list[int]:
        return list(range(self.n_start, self.n_end + 1, self.n_step))


# --------------------------------------------------------------------------
# rule parsing


def _const(text: str, field_name: str) -> float:
    try:
        return float(text.split(":", 1)[1])
    except (IndexError, ValueError):
        raise ConfigError(field_name, f"expected const:<value>, got {text!r}") from None


def parse_alpha_rule(text: str) -> tuple[Callable, str]:
    if text == "n/(n+1)":
        return (lambda n, k: n / (n + 1.0)), "alpha=n/(n+1)"
    if text.startswith("const:"):
        v = _const(text, "alpha-rule")
        if not 0.0 < v < 1.0:
            raise ConfigError("alpha-rule", f"alpha must lie in (0, 1), got {v!r}")
        return (lambda n, k: v + 0.0 * np.asarray(n, dtype=float)), f"alpha={v!r}"
    raise ConfigError("alpha-rule", f"unknown rule {text!r} (use n/(n+1) or const:<v>)")


def parse_q_rule(text: str) -> tuple[Callable, str]:
    if text == "1-1/n":
        return (lambda n: 1.0 - 1.0 / np.maximum(n, 2)), "q=1-1/n"
    if text.startswith("const:"):
        v = _const(text, "q-rule")
        if not 0.0 < v < 1.0:
            raise ConfigError("q-rule", f"q must lie in (0, 1), got {v!r}")
        return (lambda n: v + 0.0 * np.asarray(n, dtype=float)), f"q={v!r}"
    raise ConfigError("q-rule", f"unknown rule {text!r} (use 1-1/n or const:<v>)")


def parse_scheme(text: str) -> DeferredScheme:
    """``full`` or ``half-deferred[:<b-rule>]``; b-rule is ``n/<k>`` or ``sqrt``."""
    if text == "full":
        return full_scheme()
    if text == "half-deferred":
        return half_deferred_scheme()
    if text.startswith("half-deferred:"):
        rule = text.split(":", 1)[1]
        if rule == "sqrt":
            return half_deferred_scheme(lambda n: math.isqrt(n))
        if rule.startswith("n/"):
            try:
                k = int(rule[2:])
            except ValueError:
                k = 0
            if k >= 2:
                return half_deferred_scheme(lambda n: n // k)
        raise ConfigError("scheme", f"unknown b-rule {rule!r} (use n/<k> with k >= 2, or sqrt)")
    raise ConfigError("scheme", f"unknown scheme {text!r} (use full or half-deferred:<b-rule>)")


def parse_matrix(text: str) -> SummabilityMatrix:
    name = MATRIX_PRESETS.get(text)
    if name is None:
        raise ConfigError("matrix", f"unknown matrix {text!r} (use identity or cesaro)")
    return IdentityMatrix() if name == "identity" else CesaroMatrix()


def parse_pn(text: str) -> PowerSeriesMethod:
    text = PN_PRESETS.get(text, text)
    if text == "ones":
        return ones_method()
    if text.startswith("geometric:"):
        v = _const(text.replace("geometric:", "const:", 1), "pn")
        if not 0.0 < v <= 1.0:
            raise ConfigError("pn", f"geometric ratio must lie in (0, 1], got {v!r}")
        return geometric_method(v)
    raise ConfigError("pn", f"unknown p_n rule {text!r} (use ones or geometric:<ratio>)")


def parse_u_grid(text: str, radius: float) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3 or parts[0] != "dyadic":
        raise ConfigError("u-grid", f"expected dyadic:<jmin>:<jmax>, got {text!r}")
    try:
        jmin, jmax = int(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError("u-grid", f"jmin and jmax must be integers, got {text!r}") from None
    if not 1 <= jmin <= jmax - 2 or jmax > 52:
        raise ConfigError("u-grid", f"need 1 <= jmin <= jmax - 2 and jmax <= 52, got {jmin}:{jmax}")
    return dyadic_u_grid(jmin, jmax, radius)


_TEST_FUNCTIONS = {"e0": E0, "e1": E1, "e2": E2}


# --------------------------------------------------------------------------
# argument handling


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qlh-approx", description=__doc__.split("\n\n")[0])
    p.add_argument("--config", help="flat key=value file; command-line flags win")
    p.add_argument("--command", choices=COMMANDS)
    p.add_argument("--n-start", type=int)
    p.add_argument("--n-end", type=int)
    p.add_argument("--n-step", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--alpha-rule")
    p.add_argument("--q-rule")
    p.add_argument("--scheme")
    p.add_argument("--matrix")
    p.add_argument("--pn")
    p.add_argument("--grid-points", type=int)
    p.add_argument("--tail-tol", type=float)
    p.add_argument("--u-grid")
    p.add_argument("--g", choices=sorted(_TEST_FUNCTIONS))
    p.add_argument("--eps", type=float)
    p.add_argument("--eps-prime", type=float)
    p.add_argument("--out", help="output prefix; writes <out>.csv and <out>.txt")
    return p


_INT_FIELDS = {"n_start", "n_end", "n_step", "r", "grid_points"}
_FLOAT_FIELDS = {"tail_tol", "eps", "eps_prime"}


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path!r}: {exc.strerror}") from None
    for i, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"line {i} is not key=value: {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def build_config(argv: Sequence[str] | None = None) -> ExperimentConfig:
    ns = _parser().parse_args(argv)
    raw: dict[str, object] = read_config_file(ns.config) if ns.config else {}
    known = {a.dest for a in _parser()._actions} - {"help", "config"}
    for key in raw:
        if key not in known:
            raise ConfigError(key.replace("_", "-"), "unknown configuration key")
    raw.update({k: v for k, v in vars(ns).items() if v is not None and k != "config"})

    values: dict[str, object] = {}
    for key, v in raw.items():
        try:
            if key in _INT_FIELDS:
                values[key] = int(v)
            elif key in _FLOAT_FIELDS:
                values[key] = float(v)
            else:
                values[key] = str(v)
        except ValueError:
            raise ConfigError(key.replace("_", "-"), f"malformed value {v!r}") from None

    command = values.get("command")
    if command not in COMMANDS:
        raise ConfigError("command", f"expected one of {', '.join(COMMANDS)}, got {command!r}")
    n0, n1, dn, gp = _DEFAULTS[command]
    cfg = ExperimentConfig(
        command=command,
        n_start=values.get("n_start", n0),
        n_end=values.get("n_end", n1),
        n_step=values.get("n_step", dn),
        r=values.get("r", 1),
        alpha_rule=values.get("alpha_rule", "n/(n+1)"),
        q_rule=values.get("q_rule", "1-1/n"),
        scheme=values.get("scheme", "full"),
        matrix=values.get("matrix", "identity"),
        pn=values.get("pn", "ones"),
        grid_points=values.get("grid_points", gp),
        tail_tol=values.get("tail_tol", 1e-10),
        u_grid=values.get("u_grid", "dyadic:4:17"),
        g=values.get("g", "e2"),
        eps=values.get("eps", 0.01),
        eps_prime=values.get("eps_prime", 0.05),
        out=values.get("out"),
    )
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    if cfg.n_start < 1:
        raise ConfigError("n-start", f"must be >= 1, got {cfg.n_start}")
    if cfg.n_step < 1:
        raise ConfigError("n-step", f"must be >= 1, got {cfg.n_step}")
    if cfg.n_end < cfg.n_start:
        raise ConfigError("n-end", f"empty range {cfg.n_start}..{cfg.n_end}")
    if cfg.r < 1:
        raise ConfigError("r", f"must be >= 1, got {cfg.r}")
    if cfg.grid_points < 2:
        raise ConfigError("grid-points", f"must be >= 2, got {cfg.grid_points}")
    if not (cfg.tail_tol > 0 and math.isfinite(cfg.tail_tol)):
        raise ConfigError("tail-tol", f"must be positive, got {cfg.tail_tol}")
    if cfg.g not in _TEST_FUNCTIONS:
        raise ConfigError("g", f"unknown test function {cfg.g!r}")
    if not cfg.eps_prime > cfg.eps > 0:
        raise ConfigError("eps", f"need eps-prime > eps > 0, got {cfg.eps}, {cfg.eps_prime}")
    if cfg.command == "dwa-korovkin" and (cfg.n_start != 1 or cfg.n_step != 1):
        raise ConfigError("n-start", "dwa-korovkin needs the full range 1..N (n-start 1, n-step 1)")
    alpha_of, a_label = parse_alpha_rule(cfg.alpha_rule)
    q_of, q_label = parse_q_rule(cfg.q_rule)
    cfg.schedule = ParamSchedule(alpha_of, q_of, r=cfg.r, label=f"{a_label}, {q_label}", tail_tol=cfg.tail_tol)
    # surface preset errors before any computation
    parse_scheme(cfg.scheme)
    parse_matrix(cfg.matrix)
    method = parse_pn(cfg.pn)
    parse_u_grid(cfg.u_grid, method.radius)


# --------------------------------------------------------------------------
# experiments


def _provenance(cfg: ExperimentConfig) -> dict[str, object]:
    return {
        "command": cfg.command,
        "n_range": f"{cfg.n_start}..{cfg.n_end} step {cfg.n_step}",
        "r": cfg.r,
        "alpha_rule": cfg.alpha_rule,
        "q_rule": cfg.q_rule,
        "grid_points": cfg.grid_points,
        "tail_tol": cfg.tail_tol,
    }


def run_moments(cfg: ExperimentConfig) -> ConvergenceReport:
    xs = uniform_grid(cfg.grid_points)
    rows = []
    for n in cfg.ns:
        params = cfg.schedule.params(n)
        a, q = params.alpha1, params.q
        qn = q_integer(n, q)
        (m0, e0), (m1, e1), (m2, e2) = apply_grid_many([E0, E1, E2], xs, params)
        upper = q * (xs * a) ** 2 + xs * a / qn
        dev = 2 * xs * xs * (1 - a) + xs * a / qn
        for i, x in enumerate(xs):
            rows.append({
                "n": n, "x": x, "m0": m0[i], "m1": m1[i], "m2": m2[i],
                "err0": e0[i], "err1": e1[i], "err2": e2[i],
                "m0_residual": abs(m0[i] - 1.0),
                "m1_residual": abs(m1[i] - x * a),
                "m2_upper_bound": upper[i],
                "m2_upper_excess": m2[i] - upper[i],
                "m2_deviation_bound": dev[i],
                "m2_deviation_excess": abs(m2[i] - x * x) - dev[i],
            })
    cols = list(rows[0])
    report = ConvergenceReport(
        title=f"moments of R, schedule {cfg.schedule.label}, r={cfg.r}",
        index_name="n", columns=cols, rows=rows, settings=_provenance(cfg),
    )

    def worst(key):
        return max(r[key] for r in rows)

    report.verdicts = {
        "normalization": Verdict(worst("m0_residual") <= MOMENT_TOL, MOMENT_TOL,
                                 f"max |m0 - 1| = {worst('m0_residual'):.3g}"),
        "first_moment": Verdict(worst("m1_residual") <= MOMENT_TOL, MOMENT_TOL,
                                f"max |m1 - x alpha| = {worst('m1_residual'):.3g}"),
        "second_moment_upper": Verdict(worst("m2_upper_excess") <= MOMENT_TOL, MOMENT_TOL,
                                       f"max m2 - (q (x alpha)^2 + x alpha/[n]) = {worst('m2_upper_excess'):.3g}"),
        "second_moment_deviation": Verdict(worst("m2_deviation_excess") <= MOMENT_TOL, MOMENT_TOL,
                                           f"max |m2 - x^2| - bound = {worst('m2_deviation_excess'):.3g}"),
    }
    report.notes.append("err0..err2 are certified truncation bounds of m0..m2")
    return report


def run_normalization(cfg: ExperimentConfig) -> ConvergenceReport:
    """prefactor(x) * sum_{p <= P} h_p x**p against 1, with P the certified degree at max x."""
    xs = uniform_grid(cfg.grid_points)
    rows = []
    for n in cfg.ns:
        params = cfg.schedule.params(n)
        P = evaluate(E0, float(xs.max()), params).terms
        lh = LHParams(betas=(n,) * cfg.r, z=params.alphas, q=params.q)
        h = np.array([lh_coefficient(p, lh) for p in range(P + 1)])
        for x in xs:
            series = float(np.dot(h, float(x) ** np.arange(P + 1)))
            res = abs(prefactor(float(x), n, params.alphas, params.q) * series - 1.0)
            rows.append({"n": n, "x": x, "terms": P, "residual": res})
    report = ConvergenceReport(
        title=f"generating identity, schedule {cfg.schedule.label}, r={cfg.r}",
        index_name="n", columns=["n", "x", "terms", "residual"], rows=rows, settings=_provenance(cfg),
    )
    worst = max(r["residual"] for r in rows)
    report.verdicts = {
        "normalization": Verdict(worst <= MOMENT_TOL, MOMENT_TOL, f"max residual = {worst:.3g}"),
    }
    report.notes.append("the omitted part of the series is at most tail_tol at the largest x")
    return report


def run_dwa(cfg: ExperimentConfig) -> ConvergenceReport:
    report = dwA_korovkin_report(
        OperatorFamily(cfg.schedule), parse_matrix(cfg.matrix), parse_scheme(cfg.scheme),
        _TEST_FUNCTIONS[cfg.g], cfg.eps, cfg.eps_prime, cfg.ns, uniform_grid(cfg.grid_points),
    )
    report.settings.update(_provenance(cfg), matrix=cfg.matrix, scheme=cfg.scheme)
    return report


def _psum(cfg: ExperimentConfig, perturbed: bool, threshold: float) -> tuple[ConvergenceReport, OperatorFamily]:
    method = parse_pn(cfg.pn)
    family = OperatorFamily(cfg.schedule, perturbed=perturbed)
    report = psummability_korovkin_report(
        family, method, _TEST_FUNCTIONS[cfg.g], parse_u_grid(cfg.u_grid, method.radius),
        n_cap=cfg.n_end, grid=uniform_grid(cfg.grid_points), threshold=threshold,
    )
    report.settings.update(_provenance(cfg), pn=cfg.pn, u_grid_rule=cfg.u_grid)
    return report, family


def run_psum(cfg: ExperimentConfig) -> ConvergenceReport:
    return _psum(cfg, perturbed=False, threshold=1e-3)[0]


def run_counterexample(cfg: ExperimentConfig) -> ConvergenceReport:
    report, family = _psum(cfg, perturbed=True, threshold=COUNTEREXAMPLE_TOL)
    xs = uniform_grid(cfg.grid_points)
    squares = [n for n in range(max(cfg.n_start, 1), cfg.n_end + 1) if is_perfect_square(n) and n > 1]
    if squares:
        res = min(family.residual(n, E0, xs)[0] for n in squares)
        report.verdicts["classical_premise_fails"] = Verdict(
            res >= 1.0 - 1e-6, 1e-6,
            f"min over squares n in {squares[0]}..{squares[-1]} of ||H_n(1) - 1|| = {res:.10g}",
        )
    return report


def run_regularity(cfg: ExperimentConfig) -> ConvergenceReport:
    A, scheme = parse_matrix(cfg.matrix), parse_scheme(cfg.scheme)
    rows = []
    for n in cfg.ns:
        v1, v2, v3 = dw_regularity_residuals(A, scheme, n)
        rows.append({"n": n, "V1": v1, "V2": v2, "V3": v3})
    report = ConvergenceReport(
        title=f"deferred weighted regularity, matrix {cfg.matrix}, scheme {cfg.scheme}",
        index_name="n", columns=["n", "V1", "V2", "V3"], rows=rows,
        settings={**_provenance(cfg), "matrix": cfg.matrix, "scheme": cfg.scheme},
    )
    v1 = [r["V1"] for r in rows]
    v2 = [r["V2"] for r in rows]
    v3 = [r["V3"] for r in rows]
    half = v2[len(v2) // 2:]
    report.verdicts = {
        "V1_bounded": Verdict(all(math.isfinite(v) for v in v1), None, f"max V1 = {max(v1):.17g}"),
        "V2_decay": Verdict(all(b <= a for a, b in zip(half, half[1:])) and v2[-1] <= v2[0], 0.0,
                            f"V2 from {v2[0]:.3g} to {v2[-1]:.3g}"),
        "V3_small": Verdict(v3[-1] <= 1e-12, 1e-12, f"V3 at n={rows[-1]['n']}: {v3[-1]:.3g}"),
    }
    report.notes.append("V2 probes the columns k = 1..32")
    return report


RUNNERS = {
    "moments": run_moments,
    "normalization": run_normalization,
    "dwa-korovkin": run_dwa,
    "psum-korovkin": run_psum,
    "counterexample": run_counterexample,
    "regularity": run_regularity,
}


def run_experiment(cfg: ExperimentConfig, stdout=None) -> int:
    """Run ``cfg`` and write its outputs; returns the exit status (0 or 1)."""
    report = RUNNERS[cfg.command](cfg)
    table, text = report.to_csv(), report.to_text()
    if cfg.out:
        base = cfg.out[:-4] if cfg.out.endswith(".csv") else cfg.out
        Path(base + ".csv").write_text(table)
        Path(base + ".txt").write_text(text)
    else:
        out = stdout or sys.stdout
        out.write(table)
        out.write("\n")
        out.write(text)
    return 0 if report.passed else 1


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = build_config(argv)
        return run_experiment(cfg)
    except ConfigError as exc:
        print(f"configuration error in field {exc}", file=sys.stderr)
        return 2
    except ParameterDomainError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
