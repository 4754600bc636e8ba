"""Command-line interface.

Every command reads an optional JSON config (``--config``) and lets flags
override it field by field.  Exit status is 0 on success, 2 for an
invalid configuration and 1 for a failure while running; failures also
print a JSON error record on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import traceback
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import pipeline
from .classifier import repeated_eval, select_hidden
from .data import Dataset, SplitSpec, load_csv, make_folds, split
from .network import WIDTH_GRID, SceHyperparams, save_model

SCHEMA_VERSION = 1
log = logging.getLogger("sce")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    data: str | None = None
    train_path: str | None = None
    validation_path: str | None = None
    test_path: str | None = None
    label_col: str = "label"
    delimiter: str = ","
    missing_policy: str = "fail"
    split: dict | None = None
    seed: int = 0
    out: str = "sce-run"
    jobs: int | None = None
    top_k: int | None = None
    repeats: int = 20
    standardize: bool = True
    hyper: dict = field(default_factory=lambda: SceHyperparams().to_dict())
    grid: dict | None = None
    cv_folds: int | None = None
    lambdas: list = field(default_factory=lambda: list(pipeline.ANALYSIS_LAMBDAS))
    runs: int = 2
    eval_hidden: list = field(default_factory=lambda: list(WIDTH_GRID))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown config field")
        if d.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError("schema_version", f"unsupported version {d['schema_version']!r}")
        return cls(**d)

    def hyperparams(self) -> SceHyperparams:
        try:
            return SceHyperparams.from_dict({**self.hyper, "seed": self.seed})
        except (TypeError, ValueError) as exc:
            raise ConfigError("hyper", str(exc)) from None

    def split_spec(self) -> SplitSpec:
        s = {"train": 0.7, "validation": 0.1, "test": 0.2, "stratified": True, **(self.split or {})}
        try:
            return SplitSpec(seed=self.seed, **s)
        except (TypeError, ValueError) as exc:
            raise ConfigError("split", str(exc)) from None

    def validate(self) -> None:
        explicit = self.train_path is not None
        if self.data is None and not explicit:
            raise ConfigError("data", "missing dataset path (give --data or train_path)")
        if self.data is not None and explicit:
            raise ConfigError("data", "give either a dataset with a split or explicit train/validation/test paths")
        if explicit and self.split is not None:
            raise ConfigError("split", "split spec cannot be combined with explicit paths")
        for name in ("data", "train_path", "validation_path", "test_path"):
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise ConfigError(name, f"file not found: {p}")
        if self.missing_policy not in ("fail", "mean_impute"):
            raise ConfigError("missing_policy", "must be 'fail' or 'mean_impute'")
        if self.repeats < 1:
            raise ConfigError("repeats", "must be >= 1")
        if self.top_k is not None and self.top_k < 1:
            raise ConfigError("top_k", "must be >= 1")
        if self.runs < 2:
            raise ConfigError("runs", "must be >= 2")
        if self.cv_folds is not None and self.cv_folds < 2:
            raise ConfigError("cv_folds", "must be >= 2")
        if not self.eval_hidden:
            raise ConfigError("eval_hidden", "must be non-empty")
        self.hyperparams()
        if not explicit:
            self.split_spec()
        if self.grid is not None:
            self.sweep_grid()

    def sweep_grid(self) -> pipeline.SweepGrid:
        h = self.hyperparams()
        g = {"lams": [h.lam], "hidden_layers": [h.hidden_layers], "hidden_widths": [h.hidden_width],
             "iterations": [h.scg_iterations], "centers": [h.centers_per_class]}
        g.update(self.grid or {})
        g.update(seed=self.seed, top_k=self.top_k)
        try:
            return pipeline.SweepGrid.from_dict(g)
        except (TypeError, ValueError) as exc:
            raise ConfigError("grid", str(exc)) from None

    def load_parts(self) -> tuple[Dataset, Dataset | None, Dataset | None]:
        kw = dict(label_column=self.label_col, missing_policy=self.missing_policy, delimiter=self.delimiter)
        if self.data is not None:
            tr, va, te = split(load_csv(self.data, **kw), self.split_spec())
            return tr, (va if va.n_samples else None), (te if te.n_samples else None)
        parts = [load_csv(p, **kw) if p else None for p in (self.train_path, self.validation_path, self.test_path)]
        base = parts[0]
        for p in parts[1:]:
            if p is not None and (p.feature_names != base.feature_names):
                raise ConfigError("validation_path", "feature columns differ from the training file")
        return tuple(_align_classes(base, p) if p is not None else None for p in parts)  # type: ignore


def _align_classes(base: Dataset, other: Dataset) -> Dataset:
    # map class names of a separately loaded file onto the training file's indices
    if other is base:
        return other
    index = {c: i for i, c in enumerate(base.class_names)}
    missing = [c for c in other.class_names if c not in index]
    if missing:
        raise ConfigError("test_path", f"classes not present in training file: {missing}")
    labels = np.array([index[other.class_names[j]] for j in other.labels])
    return Dataset(other.features, labels, other.feature_names, base.class_names)


# --- argument handling -------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--data", help="CSV with features and a label column")
    p.add_argument("--train", dest="train_path")
    p.add_argument("--validation", dest="validation_path")
    p.add_argument("--test", dest="test_path")
    p.add_argument("--label-col", dest="label_col", help="label column name or zero-based index")
    p.add_argument("--delimiter")
    p.add_argument("--impute", dest="missing_policy", action="store_const", const="mean_impute",
                   help="mean-impute missing cells instead of failing")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="worker processes (default: logical cores)")
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--lambda", dest="lam", type=float, nargs="+")
    p.add_argument("--centers", type=int, nargs="+")
    p.add_argument("--hidden", type=int, nargs="+")
    p.add_argument("--layers", type=int, nargs="+")
    p.add_argument("--iters", type=int, nargs="+")
    p.add_argument("--no-standardize", dest="standardize", action="store_false", default=None)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sce", description="Sparse centroid-encoder feature selection")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("select", "train once and write the feature ranking"),
                        ("sweep", "hyperparameter sweep on a validation split or by k-fold CV"),
                        ("evaluate", "select features and score them with repeated classifiers"),
                        ("analyze-lambda", "costs, accuracy and sparsity across lambda values"),
                        ("stability", "selected-set overlap across seeds")]:
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "sweep":
            p.add_argument("--cv-folds", dest="cv_folds", type=int)
        if name == "stability":
            p.add_argument("--runs", type=int)
        if name == "analyze-lambda":
            p.add_argument("--lambdas", type=float, nargs="+")
    return parser


_HYPER_FLAGS = {"lam": ("lam", "lams"), "centers": ("centers_per_class", "centers"),
                "hidden": ("hidden_width", "hidden_widths"), "layers": ("hidden_layers", "hidden_layers"),
                "iters": ("scg_iterations", "iterations")}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", f"cannot read config file: {exc}") from None
        if not isinstance(base, dict):
            raise ConfigError("config", "config file must hold a JSON object")
    cfg = RunConfig.from_dict(base)
    for name in ("data", "train_path", "validation_path", "test_path", "label_col", "delimiter",
                 "missing_policy", "seed", "out", "jobs", "top_k", "repeats", "standardize",
                 "cv_folds", "runs", "lambdas"):
        val = getattr(args, name, None)
        if val is not None:
            setattr(cfg, name, val)
    hyper = dict(cfg.hyper)
    grid = dict(cfg.grid) if cfg.grid is not None else None
    for flag, (hkey, gkey) in _HYPER_FLAGS.items():
        vals = getattr(args, flag, None)
        if vals is None:
            continue
        if args.command == "sweep":
            grid = grid if grid is not None else {}
            grid[gkey] = list(vals)
        elif len(vals) != 1:
            raise ConfigError(hkey, f"--{flag} takes one value for '{args.command}'")
        hyper[hkey] = vals[0]
    cfg.hyper, cfg.grid = hyper, grid
    cfg.validate()
    return cfg


# --- outputs -----------------------------------------------------------------

def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _prepare_out(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", cfg.to_dict())
    return out


def _print_top(ranking, names, n=10) -> None:
    print(f"selected features: {ranking.n_selected}")
    print("rank  index  |weight|  name")
    for r, d in enumerate(ranking.order[:n].tolist()):
        print(f"{r:>4}  {d:>5}  {ranking.sorted_abs[r]:.6f}  {names[d]}")


def _write_selection(out: Path, train: Dataset, model, ranking, record) -> None:
    ranking.write_csv(out / "ranking.csv", train.feature_names)
    extra = {"standardization": record.standardization.to_dict() if record.standardization else None,
             "feature_names": list(train.feature_names)}
    save_model(out / "model.json", model, record.hyper, extra)
    _write_json(out / "run.json", record.to_dict())


def cmd_select(cfg: RunConfig) -> int:
    train, _, _ = cfg.load_parts()
    out = _prepare_out(cfg)
    model, ranking, rec = pipeline.train_sce(train, cfg.hyperparams(), cfg.standardize)
    _write_selection(out, train, model, ranking, rec)
    _print_top(ranking, train.feature_names)
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    train, val, _ = cfg.load_parts()
    out = _prepare_out(cfg)
    grid = cfg.sweep_grid()
    jobs = cfg.jobs or pipeline.default_jobs()
    if cfg.cv_folds:
        best, summary = pipeline.cv_sweep(train, make_folds(train, cfg.cv_folds, cfg.seed), grid,
                                          cfg.standardize, jobs)
        _write_json(out / "sweep.json", {"mode": "cv", "folds": cfg.cv_folds, "grid": grid.to_dict(),
                                          "points": summary, "best": best.to_dict()})
    else:
        if val is None:
            raise ConfigError("split", "sweep needs a validation part (or use --cv-folds)")
        best, recs = pipeline.sweep(train, val, grid, cfg.standardize, jobs)
        _write_json(out / "sweep.json", {"mode": "validation", "grid": grid.to_dict(),
                                          "points": [r.to_dict(include_time=False) for r in recs],
                                          "best": best.to_dict()})
    _write_json(out / "best.json", best.to_dict())
    print("best hyperparameters: " + json.dumps(best.to_dict(), sort_keys=True))
    return 0


def cmd_evaluate(cfg: RunConfig) -> int:
    train, val, test = cfg.load_parts()
    if test is None:
        raise ConfigError("split", "evaluate needs a test part")
    out = _prepare_out(cfg)
    model, ranking, rec = pipeline.train_sce(train, cfg.hyperparams(), cfg.standardize)
    _write_selection(out, train, model, ranking, rec)
    cols = pipeline.features_for(ranking, cfg.top_k)
    if cols.size == 0:
        raise RuntimeError("no features selected; lower lambda or pass --top-k")
    if cfg.standardize:
        _, (train, val, test) = pipeline.standardize_parts(train, val, test)
    clf_seed = cfg.seed
    if val is not None:
        hidden, scores = select_hidden(train, val, cols, cfg.eval_hidden, seed=clf_seed)
    else:
        hidden, scores = cfg.eval_hidden[0], {}
    report = repeated_eval(train, test, cols, hidden, cfg.repeats, seed=clf_seed, validation=val)
    report.config.update({"hidden_scores": {str(k): v for k, v in scores.items()},
                          "top_k": cfg.top_k, "sce": rec.hyper.to_dict()})
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    print(f"features: {report.n_selected}  classifier hidden units: {hidden}")
    print("repeat  seed  accuracy")
    for i, (s, a) in enumerate(zip(report.seeds, report.accuracies)):
        print(f"{i:>6}  {s:>4}  {a:.4f}")
    print(f"mean {report.mean:.4f}  std {report.std:.4f}")
    return 0


def cmd_analyze(cfg: RunConfig) -> int:
    train, val, _ = cfg.load_parts()
    if val is None:
        raise ConfigError("split", "analyze-lambda needs a validation part")
    out = _prepare_out(cfg)
    rows, recs = pipeline.analyze_lambda(train, val, cfg.lambdas, cfg.hyperparams(), cfg.standardize,
                                         cfg.top_k, jobs=cfg.jobs or pipeline.default_jobs())
    with open(out / "lambda.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=pipeline.LAMBDA_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    _write_json(out / "runs.json", [r.to_dict(include_time=False) for r in recs])
    print("lambda  centroid_cost  l1_norm  val_acc  selected")
    for r in rows:
        print(f"{r['lambda']:<7g} {r['centroid_cost']:.6f}  {r['l1_cost']:.4f}  "
              f"{r['validation_accuracy']:.4f}  {r['selected_count']}")
    return 0


def cmd_stability(cfg: RunConfig) -> int:
    train, _, _ = cfg.load_parts()
    out = _prepare_out(cfg)
    rep = pipeline.stability_report(train, cfg.hyperparams(), cfg.runs, standardize=cfg.standardize,
                                    jobs=cfg.jobs or pipeline.default_jobs())
    _write_json(out / "stability.json", rep.to_dict())
    print("seeds: " + ", ".join(map(str, rep.seeds)))
    print("selected counts: " + ", ".join(str(len(s)) for s in rep.selected))
    for p in rep.pairs:
        print(f"runs {p['runs'][0]}-{p['runs'][1]}: shared {p['intersection']} of {p['union']}, "
              f"jaccard {p['jaccard']:.3f}")
    return 0


COMMANDS = {"select": cmd_select, "sweep": cmd_sweep, "evaluate": cmd_evaluate,
            "analyze-lambda": cmd_analyze, "stability": cmd_stability}


def _error(status: int, kind: str, message: str, field_name: str | None = None, out: str | None = None) -> int:
    record = {"status": status, "error": kind, "message": message}
    if field_name:
        record["field"] = field_name
    print(json.dumps(record), file=sys.stderr)
    if out:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            _write_json(Path(out) / "error.json", record)
        except OSError:
            pass
    return status


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        return _error(2, "config", str(exc), exc.field)
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        return _error(2, "config", str(exc), exc.field, cfg.out)
    except Exception as exc:  # noqa: BLE001 - report any runtime failure as a record
        log.debug("%s", traceback.format_exc())
        return _error(1, type(exc).__name__, str(exc), out=cfg.out)


if __name__ == "__main__":
    sys.exit(main())
