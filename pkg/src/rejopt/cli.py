"""Command line interface.

Subcommands: ``fit`` (dataset + config -> coefficients and per-row
decisions), ``predict`` (model + dataset -> decisions including the reject
outcome), ``tune`` (cross-validated penalty level), ``verify`` (run a named
scenario suite and check its assertions), ``report`` (render a records table
into summary, series, and figures).

Exit codes: 0 success, 1 failed verification assertion, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from .experiments import (
    builtin_scenarios,
    cross_validate_rn,
    get_scenario,
    run_concentration_experiment,
    run_oracle_experiment,
    ScenarioConfig,
)
from .losses import CostModel
from .model import Coefficients, Dictionary, classify
from .reporting import emit_report, parse_records, records_to_csv
from .risk import Dataset, empirical_phi_risk, empirical_reject_risk
from .solver import SolveConfig, solve
from .experiments import summarize_records


class UsageError(Exception):
    pass


def _load_yaml(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"{path} must contain a mapping")
    return doc


def _load_fit_config(path: str):
    doc = _load_yaml(path)
    try:
        cost = doc["cost"]
        cm = CostModel(d=float(cost["d"]), tau=float(cost["tau"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad cost model in {path}: {exc}") from exc
    dict_entry = doc.get("dictionary")
    if isinstance(dict_entry, str):
        dpath = Path(dict_entry)
        if not dpath.is_absolute():
            dpath = Path(path).parent / dpath
        dictionary = Dictionary.load(dpath)
    elif isinstance(dict_entry, dict):
        dictionary = Dictionary.from_yaml(yaml.safe_dump(dict_entry))
    else:
        raise UsageError("config needs a 'dictionary' path or inline mapping")
    solver_doc = doc.get("solver", {}) or {}
    cv_doc = doc.get("cv", {}) or {}
    seed = int(doc.get("seed", 0))
    return cm, dictionary, solver_doc, cv_doc, seed


def _write_decisions(path: Path, data: Dataset, dictionary: Dictionary,
                     lam: Coefficients, cm: CostModel) -> None:
    scores = dictionary.evaluate_matrix(data.x) @ lam.as_array()
    cols = [f"x{i}" for i in range(data.dim)] + ["y", "score", "decision"]
    lines = [",".join(cols)]
    for xi, yi, s in zip(data.x, data.y, scores):
        decision = int(classify(float(s), cm))
        feats = ",".join(repr(float(v)) for v in xi)
        lines.append(f"{feats},{int(yi)},{s!r},{decision}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _cmd_fit(args) -> int:
    cm, dictionary, solver_doc, cv_doc, cfg_seed = _load_fit_config(args.config)
    seed = args.seed if args.seed is not None else cfg_seed
    data = Dataset.load(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rn_entry = solver_doc.get("r_n")
    c_lambda = solver_doc.get("c_lambda")
    c_lambda = float(c_lambda) if c_lambda is not None else None
    if rn_entry is None or rn_entry == "cv":
        cv = cross_validate_rn(
            data, dictionary, cm,
            folds=int(cv_doc.get("folds", 5)),
            seed=seed, c_lambda=c_lambda,
        )
        r_n = cv.r_n
    else:
        r_n = float(rn_entry)
    cfg = SolveConfig(
        r_n=r_n,
        c_lambda=c_lambda,
        tol=float(solver_doc.get("tol", 1e-8)),
        max_iter=int(solver_doc.get("max_iter", 4000)),
        seed=seed,
    )
    result = solve(data, dictionary, cm, cfg)

    model_doc = {
        "cost": {"d": cm.d, "tau": cm.tau},
        "r_n": r_n,
        "c_lambda": c_lambda,
        "dictionary": yaml.safe_load(dictionary.to_yaml()),
        "coefficients": list(result.lam_hat.values),
    }
    (out / "model.yaml").write_text(yaml.safe_dump(model_doc, sort_keys=False), encoding="utf-8")
    _write_decisions(out / "decisions.csv", data, dictionary, result.lam_hat, cm)
    summary = {
        "n": data.n,
        "r_n": r_n,
        "objective": result.objective,
        "gap_bound": result.gap_bound,
        "converged": result.converged,
        "iterations": result.iterations,
        "l1": result.lam_hat.l1_norm(),
        "support_size": result.lam_hat.l0_count(),
        "empirical_phi_risk": empirical_phi_risk(data, dictionary, result.lam_hat, cm),
        "empirical_reject_risk": empirical_reject_risk(data, dictionary, result.lam_hat, cm),
        "dataset_digest": data.digest(),
        "seed": seed,
    }
    (out / "fit_summary.yaml").write_text(yaml.safe_dump(summary, sort_keys=True), encoding="utf-8")
    print(f"fit: n={data.n} r_n={r_n:.6g} objective={result.objective:.6g} "
          f"support={result.lam_hat.l0_count()} converged={result.converged}")
    return 0


def _cmd_predict(args) -> int:
    doc = _load_yaml(args.model)
    try:
        cm = CostModel(d=float(doc["cost"]["d"]), tau=float(doc["cost"]["tau"]))
        dictionary = Dictionary.from_yaml(yaml.safe_dump(doc["dictionary"]))
        lam = Coefficients(values=tuple(float(v) for v in doc["coefficients"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad model file {args.model}: {exc}") from exc
    data = Dataset.load(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_decisions(out / "decisions.csv", data, dictionary, lam, cm)
    summary = {
        "n": data.n,
        "empirical_phi_risk": empirical_phi_risk(data, dictionary, lam, cm),
        "empirical_reject_risk": empirical_reject_risk(data, dictionary, lam, cm),
        "reject_fraction": float(np.mean(
            np.abs(dictionary.evaluate_matrix(data.x) @ lam.as_array()) <= cm.tau
        )),
    }
    (out / "predict_summary.yaml").write_text(yaml.safe_dump(summary, sort_keys=True), encoding="utf-8")
    print(f"predict: n={data.n} reject_fraction={summary['reject_fraction']:.3f}")
    return 0


def _cmd_tune(args) -> int:
    cm, dictionary, solver_doc, cv_doc, cfg_seed = _load_fit_config(args.config)
    seed = args.seed if args.seed is not None else cfg_seed
    data = Dataset.load(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    c_lambda = solver_doc.get("c_lambda")
    c_lambda = float(c_lambda) if c_lambda is not None else None
    cv = cross_validate_rn(
        data, dictionary, cm,
        folds=int(cv_doc.get("folds", 5)),
        seed=seed, c_lambda=c_lambda,
    )
    doc = {
        "chosen_r_n": cv.r_n,
        "grid": [float(v) for v in cv.grid],
        "cv_reject_risks": [float(v) for v in cv.cv_risks],
        "folds": int(cv_doc.get("folds", 5)),
        "seed": seed,
    }
    (out / "tuning.yaml").write_text(yaml.safe_dump(doc, sort_keys=True), encoding="utf-8")
    lines = ["r_n,cv_reject_risk"]
    lines += [f"{float(rn)!r},{float(risk)!r}" for rn, risk in zip(cv.grid, cv.cv_risks)]
    (out / "cv_curve.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 5))
    ax.semilogx(cv.grid, cv.cv_risks, "o-")
    ax.axvline(cv.r_n, color="k", ls="--", lw=1)
    ax.set_xlabel("penalty level r_n")
    ax.set_ylabel("cross-validated reject risk")
    fig.savefig(out / "cv_curve.png", dpi=120, metadata={"Software": None})
    plt.close(fig)
    print(f"tune: chosen r_n = {cv.r_n:.6g}")
    return 0


def _run_one_scenario(config: ScenarioConfig, args, out: Path) -> tuple[bool, list[str]]:
    replicates = args.replicates if args.replicates is not None else None
    sizes = tuple(args.sample_size) if args.sample_size else None
    if args.seed is not None:
        config = ScenarioConfig.from_dict({**config.to_dict(), "seed": args.seed})
    result = run_oracle_experiment(config, sample_sizes=sizes, replicates=replicates)
    conc = None
    reps_used = replicates if replicates is not None else config.replicates
    if reps_used >= 100:
        conc = run_concentration_experiment(
            config,
            n=sizes[0] if sizes else None,
            replicates=reps_used,
        )
    emit_report(result.records, out, prefix=config.name, summary=result.summary,
                concentration=conc)

    ok = True
    lines: list[str] = []

    def check(label: str, passed: bool) -> None:
        nonlocal ok
        ok = ok and passed
        lines.append(f"[{'PASS' if passed else 'FAIL'}] {config.name}: {label}")

    for n, entry in result.summary["by_n"].items():
        check(
            f"n={n} surrogate oracle inequality pass rate "
            f"{entry['surrogate_pass_rate']:.3f} >= {config.min_pass_rate}",
            entry["surrogate_pass_rate"] >= config.min_pass_rate,
        )
        check(
            f"n={n} reject-loss oracle inequality pass rate "
            f"{entry['reject_pass_rate']:.3f} >= {config.min_pass_rate}",
            entry["reject_pass_rate"] >= config.min_pass_rate,
        )
    check(
        "deviation samples within [0, 2 C_phi C_F]",
        all(0.0 <= r.rhat_lb <= r.rhat_cap + 1e-9 for r in result.records),
    )
    if conc is not None:
        check(f"mean deviation {conc.sample_mean:.4f} <= bound {conc.mean_bound:.4f}",
              conc.mean_ok)
        check("empirical tail below sub-Gaussian bound", conc.curve_ok)
    return ok, lines


def _cmd_verify(args) -> int:
    if args.config:
        doc = _load_yaml(args.config)
        try:
            configs = (ScenarioConfig.from_dict(doc),)
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"bad scenario config {args.config}: {exc}") from exc
    elif args.scenario:
        try:
            configs = get_scenario(args.scenario)
        except KeyError as exc:
            raise UsageError(str(exc)) from exc
    else:
        raise UsageError("verify needs --scenario or --config")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    all_ok = True
    for config in configs:
        ok, lines = _run_one_scenario(config, args, out)
        all_ok = all_ok and ok
        for line in lines:
            print(line)
    return 0 if all_ok else 1


def _cmd_report(args) -> int:
    try:
        text = Path(args.records).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {args.records}: {exc}") from exc
    records = parse_records(text)
    out = Path(args.out)
    written = emit_report(records, out, prefix=args.prefix,
                          summary=summarize_records(records))
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rejopt",
        description="Reject-option classification with l1-penalized risk minimization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit coefficients on a dataset")
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--config", required=True)
    p_fit.add_argument("--out", required=True)
    p_fit.add_argument("--seed", type=int, default=None)
    p_fit.set_defaults(func=_cmd_fit)

    p_pred = sub.add_parser("predict", help="apply a fitted model to a dataset")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--data", required=True)
    p_pred.add_argument("--out", required=True)
    p_pred.set_defaults(func=_cmd_predict)

    p_tune = sub.add_parser("tune", help="cross-validate the penalty level")
    p_tune.add_argument("--data", required=True)
    p_tune.add_argument("--config", required=True)
    p_tune.add_argument("--out", required=True)
    p_tune.add_argument("--seed", type=int, default=None)
    p_tune.set_defaults(func=_cmd_tune)

    p_ver = sub.add_parser("verify", help="run a named scenario suite")
    p_ver.add_argument("--scenario", choices=sorted(builtin_scenarios()), default=None)
    p_ver.add_argument("--config", default=None, help="custom scenario config (YAML)")
    p_ver.add_argument("--out", required=True)
    p_ver.add_argument("--replicates", type=int, default=None)
    p_ver.add_argument("--seed", type=int, default=None)
    p_ver.add_argument("--sample-size", type=int, action="append", default=None)
    p_ver.set_defaults(func=_cmd_verify)

    p_rep = sub.add_parser("report", help="render a records table")
    p_rep.add_argument("--records", required=True)
    p_rep.add_argument("--out", required=True)
    p_rep.add_argument("--prefix", default="experiment")
    p_rep.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
