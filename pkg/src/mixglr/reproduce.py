"""Regenerate the published tables and the data behind the published figures.

Every function returns plain rows (lists of dicts) so the CLI can write them
as CSV and the plotting module can draw them.
"""

from __future__ import annotations

import math

import numpy as np

from .asymptotics import corrected_ess_under_hi, performance_loss, sprt_ess
from .design import CORRECTED, design, make_prior, reference_values, reference_weights
from .models import exponential_suite, gaussian_suite
from .renewal import renewal_constants
from .sequential import MILRT, WGLRT
from .simulate import IMPORTANCE, SimPlan, run_mc

TABLE_TOL = 0.005
ESS_REL_TOL = 0.03
PRIOR_SERIES = ("uniform", "kl", "l", "hat")
FIGURE_GRID = np.linspace(0.5, 8.0, 40)


def table_suite():
    thetas = reference_values()["parameter_table"]["thetas"]
    return exponential_suite(thetas)


def table_constants_rows(tol: float = TABLE_TOL):
    """Formula values next to the printed parameter table, one row per cell."""
    ref = reference_values()["parameter_table"]
    suite = exponential_suite(ref["thetas"])
    c = renewal_constants(suite)
    d = design(c, "kl", CORRECTED, 1e-3, 1e-2)
    formula = {"I": c.I, "kappa": c.kappa, "gamma": c.gamma, "q1": d.q1.q, "q0": d.q0.q}
    rows = []
    for k, ref_row in enumerate(ref["rows"]):
        for name in ("I", "kappa", "gamma", "q1", "q0"):
            cell = ref_row[name]
            value = float(formula[name][k])
            delta = value - cell["value"]
            rows.append({
                "theta": ref_row["theta"],
                "quantity": name,
                "formula": value,
                "printed": cell["value"],
                "delta": delta,
                "match": abs(delta) <= tol,
                "documented": "caveat" in cell,
            })
    return rows


def _weights(kind, constants):
    if kind == "reference":
        return reference_weights()
    if kind == "formula":
        return None
    raise ValueError(f"weights must be 'reference' or 'formula', got {kind!r}")


def table_ess_rows(alphas=None, beta: float | None = None, replications: int = 100_000,
                   is_replications: int = 100_000, seed: int = 0, weights: str = "reference",
                   workers: int = 1):
    """Simulated type-I ratios and expected sample sizes with printed values alongside.

    One row per ``(alpha, test, quantity)``.  ``match`` asks whether the
    simulation lands within ``max(3 s.e., 3%)`` of the printed number.
    """
    ref = reference_values()["ess_table"]
    beta = ref["beta"] if beta is None else beta
    printed = {r["alpha"]: r for r in ref["rows"]}
    alphas = list(printed) if alphas is None else list(alphas)
    suite = table_suite()
    c = renewal_constants(suite)
    rows = []
    for a_idx, alpha in enumerate(alphas):
        d = design(c, ref["prior"], CORRECTED, alpha, beta, weights=_weights(weights, c))
        pr = printed.get(alpha)
        for t_idx, kind in enumerate((MILRT, WGLRT)):
            cfg = d.config(kind)
            base = seed + 1000 * a_idx + 100 * t_idx
            rep = run_mc(SimPlan(suite, cfg, 0, is_replications, base, estimator=IMPORTANCE, workers=workers))
            ratio, se = rep.type1_estimate / alpha, rep.type1_stderr / alpha
            p = pr[f"ratio_{kind}"] if pr else math.nan
            rows.append(_row(alpha, kind, "type1_ratio", 0, ratio, se, p, 1.0))
            for i in range(1, c.K + 1):
                rep = run_mc(SimPlan(suite, cfg, i, replications, base + i, workers=workers))
                p = pr[f"ess_{kind}"][i - 1] if pr else math.nan
                pred = float(corrected_ess_under_hi(alpha, c, d.q1, i))
                rows.append(_row(alpha, kind, "ess", i, rep.ess_mean, rep.ess_stderr, p, pred))
    return rows


def _row(alpha, kind, quantity, i, est, se, printed, predicted):
    tol = max(3 * se, ESS_REL_TOL * abs(printed)) if quantity == "ess" else 3 * se
    return {
        "alpha": alpha, "test": kind, "quantity": quantity, "i": i,
        "estimate": est, "stderr": se, "printed": printed, "predicted": predicted,
        "match": bool(np.isfinite(printed) and abs(est - printed) <= tol),
    }


def loss_suite(family: str, theta: float, K: int = 10, strong: float = 4.0):
    thetas = [strong] * (K // 2) + [theta] * (K - K // 2)
    return (exponential_suite if family == "exponential" else gaussian_suite)(thetas)


def figure_loss_rows(family: str = "exponential", alpha: float = 1e-4, grid=FIGURE_GRID, K: int = 10):
    """``J_1`` and ``J_K`` for each prior over a grid of weak-group signal strengths.

    Long format: ``x`` is the signal strength of the last ``K/2`` channels,
    the first ``K/2`` having strength 4.
    """
    rows = []
    for theta in grid:
        c = renewal_constants(loss_suite(family, float(theta), K))
        for kind in PRIOR_SERIES:
            J = performance_loss(make_prior(kind, c), c, alpha)
            rows.append({"x": float(theta), "series": f"J1_{kind}", "value": float(J[0])})
            rows.append({"x": float(theta), "series": f"JK_{kind}", "value": float(J[-1])})
    return rows


def figure_ess_rows(ess_rows, alpha_curve=None, beta: float | None = None, weights: str = "reference"):
    """Simulated ESS against simulated type-I error, plus the two asymptotic curves.

    ``ess_rows`` are the rows of :func:`table_ess_rows`.  Series names are
    ``E{i}_{test}`` (simulated), ``E{i}_approx`` (corrected prediction) and
    ``E{i}_sprt`` (the SPRT tailored to alternative ``i``).
    """
    ref = reference_values()["ess_table"]
    beta = ref["beta"] if beta is None else beta
    c = renewal_constants(table_suite())
    ratio = {(r["alpha"], r["test"]): r["estimate"] for r in ess_rows if r["quantity"] == "type1_ratio"}
    rows = []
    for r in ess_rows:
        if r["quantity"] == "ess":
            x = r["alpha"] * ratio[(r["alpha"], r["test"])]
            rows.append({"x": x, "series": f"E{r['i']}_{r['test']}", "value": r["estimate"]})
    alpha_curve = np.logspace(-2, -5, 13) if alpha_curve is None else alpha_curve
    for alpha in alpha_curve:
        d = design(c, ref["prior"], CORRECTED, float(alpha), beta, weights=_weights(weights, c))
        for i in range(1, c.K + 1):
            rows.append({"x": float(alpha), "series": f"E{i}_approx",
                         "value": float(corrected_ess_under_hi(float(alpha), c, d.q1, i))})
            rows.append({"x": float(alpha), "series": f"E{i}_sprt",
                         "value": float(sprt_ess(c, i, float(alpha), beta)[0])})
    return rows
