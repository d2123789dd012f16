"""Command-line entry point.

Subcommands: ``constants``, ``design``, ``approximate``, ``simulate`` and
``reproduce``.  Settings come from ``--config path.json`` (keys as in
:class:`ExperimentConfig`) and are overridden by explicit flags.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    c_penalty,
    error_approximations,
    gaussian_cluster,
    minimax_value,
    performance_loss,
    sprt_ess,
    test_ess_under_h0,
    test_ess_under_hi,
)
from .design import CONSERVATIVE, CORRECTED, Design, design, make_prior, reference_weights
from .errors import ConfigError, DesignError, DomainError, MixGLRError, NumericError
from .models import suite_from_dict
from .renewal import order_alternatives, renewal_constants
from .sequential import KINDS, MILRT
from .simulate import DIRECT, IMPORTANCE, SimPlan, run_mc

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_MISMATCH = 0, 2, 3, 4


@dataclass
class ExperimentConfig:
    model: dict | None = None
    prior_kind: str = "kl"
    threshold_rule: str = CORRECTED
    alpha_grid: list | None = None  # None: 1e-3, or the published grid for ``reproduce``
    beta: float = 1e-2
    replications: int = 10_000
    seed: int = 0
    outputs: str = "."

    def __post_init__(self):
        if self.alpha_grid is not None and not self.alpha_grid:
            raise ConfigError("alpha_grid must be non-empty")
        for a in self.alpha_grid or ():
            if not 0.0 < float(a) < 1.0:
                raise ConfigError(f"alpha {a} outside (0, 1)")
        if not 0.0 < float(self.beta) < 1.0:
            raise ConfigError(f"beta {self.beta} outside (0, 1)")
        if self.threshold_rule not in (CONSERVATIVE, CORRECTED):
            raise ConfigError(f"unknown threshold rule {self.threshold_rule!r}")

    @property
    def alpha(self) -> float:
        return float(self.alpha_grid[0]) if self.alpha_grid else 1e-3

    def digest(self) -> str:
        """Hash of everything that affects results (the output directory does not)."""
        doc = asdict(self)
        doc.pop("outputs")
        text = json.dumps(doc, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def build_config(args) -> ExperimentConfig:
    base = _read_json(args.config) if getattr(args, "config", None) else {}
    unknown = set(base) - set(ExperimentConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if getattr(args, "model", None):
        base["model"] = _read_json(args.model)
    for flag, key in (("prior", "prior_kind"), ("rule", "threshold_rule"), ("beta", "beta"),
                      ("reps", "replications"), ("seed", "seed"), ("outputs", "outputs")):
        v = getattr(args, flag, None)
        if v is not None:
            base[key] = v
    if getattr(args, "alpha", None):
        base["alpha_grid"] = list(args.alpha)
    return ExperimentConfig(**base)


def _suite(cfg):
    if cfg.model is None:
        raise ConfigError("no model given (use --model or a config with a 'model' key)")
    return suite_from_dict(cfg.model)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(rows, header, cfg, out=None):
    buf = io.StringIO()
    buf.write(f"# mixglr {__version__} config_sha256={cfg.digest()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[h]) for h in header])
    _emit(buf.getvalue(), out)


def _emit(text, out):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n"


# ------------------------------------------------------------ subcommands

def cmd_constants(args, cfg):
    c = renewal_constants(_suite(cfg), rng=cfg.seed)
    header = ["i", "theta", "I", "I0", "gamma", "gamma0", "kappa", "kappa0", "L"]
    write_csv(list(c.rows()), header, cfg, args.out)


def _design(args, cfg, constants):
    if getattr(args, "design", None):
        return Design.from_dict(_read_json(args.design))
    weights = reference_weights() if args.weights == "reference" else None
    return design(constants, cfg.prior_kind, cfg.threshold_rule, cfg.alpha, cfg.beta,
                  weights=weights)


def cmd_design(args, cfg):
    c = renewal_constants(_suite(cfg), rng=cfg.seed)
    d = _design(args, cfg, c)
    doc = d.to_dict() | {"rule": cfg.threshold_rule, "alpha": cfg.alpha, "beta": cfg.beta}
    _emit(_json(doc), args.out)


def approximation_rows(cfg, suite, constants, d: Design):
    alpha, beta = cfg.alpha, cfg.beta
    rows = []

    def add(q, h, v, rc):
        rows.append({"quantity": q, "hypothesis": h, "value": float(v), "remainder_class": rc})

    for i in range(1, constants.K + 1):
        a = test_ess_under_hi(d.log_b, constants, d.q1, i)
        add("ess", i, a.value, a.remainder_class)
        a = sprt_ess(constants, i, alpha, beta)[0]
        add("sprt_ess", i, a.value, a.remainder_class)
    _, r = order_alternatives(constants)
    cluster = gaussian_cluster(suite, constants) if r > 1 else None
    a = test_ess_under_h0(d.log_a, constants, d.q0, cluster)
    add("ess", 0, a.value, a.remainder_class)
    err = error_approximations(d.log_b, d.log_a, d.q0, d.q1, constants)
    add("type1_exact_bound", 0, err["type1_exact_bound"], "exact")
    add("type1_corrected", 0, err["type1_corrected"], "o1")
    for i in range(1, constants.K + 1):
        add("type2_exact_bound", i, err["type2_exact_bound"][i - 1], "exact")
        if err["type2_corrected"] is not None:
            add("type2_corrected", i, err["type2_corrected"][i - 1], "o1")
    if d.p is not None:
        C = c_penalty(d.p, constants)
        J = performance_loss(d.p, constants, alpha)
        for i in range(1, constants.K + 1):
            add("c_penalty", i, C[i - 1], "exact")
            add("performance_loss", i, J[i - 1], "o1")
    add("minimax_value", 0, minimax_value(alpha, constants), "o1")
    return rows


def cmd_approximate(args, cfg):
    suite = _suite(cfg)
    c = renewal_constants(suite, rng=cfg.seed)
    d = _design(args, cfg, c)
    rows = approximation_rows(cfg, suite, c, d)
    write_csv(rows, ["quantity", "hypothesis", "value", "remainder_class"], cfg, args.out)


def _truth(text):
    if text == "weighted":
        return text
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"--truth must be an index or 'weighted', got {text!r}") from None


def cmd_simulate(args, cfg):
    suite = _suite(cfg)
    c = renewal_constants(suite, rng=cfg.seed)
    d = _design(args, cfg, c)
    truth = _truth(args.truth)
    prior = d.p if d.p is not None else make_prior(cfg.prior_kind, c)
    plan = SimPlan(suite, d.config(args.test), truth, cfg.replications, cfg.seed,
                   max_steps=args.max_steps, estimator=args.estimator,
                   prior=prior if truth == "weighted" else None, workers=args.workers)
    rep = run_mc(plan, constants=c if args.estimator == DIRECT else None, keep_paths=bool(args.paths_csv))
    doc = rep.to_dict() | {"test": args.test, "truth": truth, "seed": cfg.seed,
                           "config_sha256": cfg.digest(), "version": __version__}
    _emit(_json(doc), args.out)
    if args.paths_csv:
        rows = [{"T": int(t), "d": int(x)} for t, x in zip(rep.paths.T, rep.paths.d)]
        write_csv(rows, ["T", "d"], cfg, args.paths_csv)


def cmd_reproduce(args, cfg):
    from . import plotting, reproduce

    out = Path(cfg.outputs)
    out.mkdir(parents=True, exist_ok=True)
    mismatch = False
    what = args.what
    if what in ("constants", "all"):
        rows = reproduce.table_constants_rows()
        write_csv(rows, ["theta", "quantity", "formula", "printed", "delta", "match", "documented"],
                  cfg, out / "table_constants.csv")
        mismatch |= any(not r["match"] and not r["documented"] for r in rows)
    if what in ("figures", "all"):
        for fam, name in (("exponential", "figure1"), ("gaussian", "figure2")):
            rows = reproduce.figure_loss_rows(fam, alpha=float(args.loss_alpha))
            write_csv(rows, ["x", "series", "value"], cfg, out / f"{name}.csv")
            if not args.no_plots:
                plotting.plot_loss(rows, out / f"{name}.png", f"performance loss, {fam} channels")
    if what in ("ess", "figures", "all"):
        alphas = None if cfg.alpha_grid is None else [float(a) for a in cfg.alpha_grid]
        rows = reproduce.table_ess_rows(alphas, cfg.beta,
                                        cfg.replications, args.is_reps, cfg.seed, args.weights,
                                        workers=args.workers)
        write_csv(rows, ["alpha", "test", "quantity", "i", "estimate", "stderr", "printed", "predicted", "match"],
                  cfg, out / "table_ess.csv")
        mismatch |= any(not r["match"] for r in rows)
        frows = reproduce.figure_ess_rows(rows, weights=args.weights)
        write_csv(frows, ["x", "series", "value"], cfg, out / "figure3.csv")
        if not args.no_plots:
            plotting.plot_ess(frows, out / "figure3.png", "expected sample size vs type-I error")
    if args.strict and mismatch:
        print("reproduction mismatch beyond tolerance", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


# ------------------------------------------------------------ parser

def build_parser():
    p = argparse.ArgumentParser(prog="mixglr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"mixglr {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        sp.add_argument("--config", help="experiment config JSON")
        if model:
            sp.add_argument("--model", help="model suite JSON")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output file (default stdout)")

    def design_flags(sp):
        sp.add_argument("--design", help="design JSON (skips prior/threshold computation)")
        sp.add_argument("--prior", help="uniform, kl, l or hat")
        sp.add_argument("--rule", choices=(CONSERVATIVE, CORRECTED))
        sp.add_argument("--alpha", type=float, nargs="+")
        sp.add_argument("--beta", type=float)
        sp.add_argument("--weights", choices=("prior", "reference"), default="prior",
                        help="'reference' uses the published weight table")

    sp = sub.add_parser("constants", help="renewal constants per alternative (CSV)")
    common(sp)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("design", help="weights and thresholds (JSON)")
    common(sp)
    design_flags(sp)
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("approximate", help="closed-form approximations (CSV)")
    common(sp)
    design_flags(sp)
    sp.set_defaults(func=cmd_approximate)

    sp = sub.add_parser("simulate", help="Monte Carlo report (JSON)")
    common(sp)
    design_flags(sp)
    sp.add_argument("--test", choices=KINDS[1:], default=MILRT)
    sp.add_argument("--truth", default="0", help="0, an alternative index, or 'weighted'")
    sp.add_argument("--reps", type=int)
    sp.add_argument("--estimator", choices=(DIRECT, IMPORTANCE), default=DIRECT)
    sp.add_argument("--max-steps", type=int, default=10**6)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--paths-csv", help="write per-replication (T, d) here")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("reproduce", help="published tables and figure data (CSV + PNG)")
    common(sp, model=False)
    sp.add_argument("what", choices=("constants", "ess", "figures", "all"))
    sp.add_argument("--outputs", help="output directory")
    sp.add_argument("--alpha", type=float, nargs="+")
    sp.add_argument("--beta", type=float)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--is-reps", type=int, default=100_000)
    sp.add_argument("--weights", choices=("reference", "formula"), default="reference")
    sp.add_argument("--loss-alpha", type=float, default=1e-4)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--no-plots", action="store_true")
    sp.add_argument("--strict", action="store_true", help="exit 4 on undocumented mismatches")
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        code = args.func(args, cfg)
    except (ConfigError, DesignError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MixGLRError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
