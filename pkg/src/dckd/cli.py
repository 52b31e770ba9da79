"""Command-line experiment driver.

Config files are flat ``key = value`` lines; ``#`` starts a comment. Keys:

    name, out_dir, dataset (blobs|idx), blobs_classes, blobs_per_class, blobs_dim,
    blobs_spread, blobs_seed, idx_images, idx_labels, idx_val_images, idx_val_labels,
    idx_limit, val_fraction, teacher_sizes, student_sizes, beta_ce, beta_kd, beta_col,
    t_kd, t_kld, method, direction, simultaneous, num_students, epochs, teacher_epochs,
    batch_size, lr0, lr_min, momentum, weight_decay, t0, tmult, seed, seeds, arms,
    ablate_directions, ablate_methods, ablate_students, accum_classes, gradcheck_cases

Lists are comma separated. Every subcommand writes to
``<out_dir>/<name>-<subcommand>/`` with manifest.txt, record.csv, summary.json and
checkpoints/ where applicable.

CSV outputs:
    record.csv      epoch, lr, s<k>_<term>, s<k>_top1, s<k>_top5, mean_corr
    eval.csv        run, checkpoint, top1, top5
    metrics.csv     model, top1, top5, mean_corr, mean_entropy
    profiles.csv    model, class_index, temperature, p0..p<C-1>
    compare.csv     seed, arm, net, top1, mean_corr
    ablation.csv    direction, method, n, seed, net, top1
    ablation_summary.csv  comparison, n, variant, baseline, variant_mean_top1, baseline_mean_top1, delta
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from dckd import data, metrics
from dckd.checks import objective_gradcheck
from dckd.errors import ConfigError, DCKDError, DependencyError
from dckd.losses import CollectionMethod, KLDirection, LossWeights
from dckd.models import Model, read_checkpoint, save_checkpoint
from dckd.trainer import (DistillConfig, RunRecord, train_dckd, train_edckd, train_ensembled_student,
                          train_students, train_teacher, student_seeds, teacher_target)

log = logging.getLogger("dckd")

ARMS = ("baseline-ce", "kd-only", "dckd", "edckd", "ensembled")
SUBCOMMANDS = ("train-teacher", "train-dckd", "train-edckd", "train-ensembled", "eval", "metrics",
               "gradcheck", "compare", "ablate")


def _ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


def _strs(s: str) -> list[str]:
    return [v.strip() for v in s.split(",") if v.strip()]


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_int(s: str) -> int | None:
    return None if s.strip().lower() in ("", "none") else int(s)


def _opt_str(s: str) -> str | None:
    return None if s.strip().lower() in ("", "none") else s.strip()


@dataclass
class ExperimentConfig:
    name: str = "default"
    out_dir: str = "runs"
    dataset: str = "blobs"
    blobs_classes: int = 10
    blobs_per_class: int = 200
    blobs_dim: int = 2
    blobs_spread: float = 0.4
    blobs_seed: int | None = None
    idx_images: str | None = None
    idx_labels: str | None = None
    idx_val_images: str | None = None
    idx_val_labels: str | None = None
    idx_limit: int | None = None
    val_fraction: float = 0.2
    teacher_sizes: list = field(default_factory=lambda: [2, 64, 64, 10])
    student_sizes: list = field(default_factory=lambda: [2, 16, 10])
    beta_ce: float = 1.0
    beta_kd: float = 1.0
    beta_col: float = 0.5
    t_kd: float = 4.0
    t_kld: float = 2.0
    method: str = "logit_max"
    direction: str = "reverse"
    simultaneous: bool = True
    num_students: int = 3
    epochs: int = 90
    teacher_epochs: int | None = None
    batch_size: int = 64
    lr0: float = 0.05
    lr_min: float = 0.0
    momentum: float = 0.9
    weight_decay: float = 5e-4
    t0: int = 30
    tmult: int = 2
    seed: int = 7
    seeds: list = field(default_factory=lambda: [7, 8, 9])
    arms: list = field(default_factory=lambda: ["baseline-ce", "kd-only", "dckd"])
    ablate_directions: list = field(default_factory=lambda: ["reverse", "forward"])
    ablate_methods: list = field(default_factory=lambda: ["logit_max", "average"])
    ablate_students: list = field(default_factory=lambda: [3])
    accum_classes: list | None = None
    gradcheck_cases: int = 50

    def distill_config(self, seed: int | None = None, **overrides) -> DistillConfig:
        weights = LossWeights(self.beta_ce, self.beta_kd, self.beta_col, self.t_kd, self.t_kld)
        cfg = DistillConfig(weights=weights, method=self.method, direction=self.direction,
                            simultaneous=self.simultaneous, num_students=self.num_students,
                            epochs=self.epochs, batch_size=self.batch_size, lr0=self.lr0,
                            lr_min=self.lr_min, momentum=self.momentum, weight_decay=self.weight_decay,
                            t0=self.t0, tmult=self.tmult, seed=self.seed if seed is None else seed)
        return replace(cfg, **overrides)

    def teacher_config(self, seed: int | None = None) -> DistillConfig:
        epochs = self.epochs if self.teacher_epochs is None else self.teacher_epochs
        return self.distill_config(seed, epochs=epochs)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name} = {'none' if v is None else v}")
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


_PARSERS = {
    "blobs_seed": _opt_int, "idx_limit": _opt_int, "teacher_epochs": _opt_int,
    "idx_images": _opt_str, "idx_labels": _opt_str, "idx_val_images": _opt_str, "idx_val_labels": _opt_str,
    "teacher_sizes": _ints, "student_sizes": _ints, "seeds": _ints, "ablate_students": _ints,
    "arms": _strs, "ablate_directions": _strs, "ablate_methods": _strs,
    "accum_classes": lambda s: None if s.strip().lower() in ("", "none") else _ints(s),
    "simultaneous": _bool,
}


def _parser_for(f) -> callable:
    if f.name in _PARSERS:
        return _PARSERS[f.name]
    return {"int": int, "float": float, "str": str}[f.type]


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    known = {f.name: f for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _parser_for(known[key])(value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    cfg = ExperimentConfig(**values)
    validate(cfg)
    return cfg


def parse_config(path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(), str(path))


def validate(cfg: ExperimentConfig) -> None:
    def choice(key, value, valid):
        if value not in valid:
            raise ConfigError(f"{key} = {value!r}; valid values: {', '.join(valid)}")

    valid_methods = [m.value for m in CollectionMethod]
    valid_directions = [d.value for d in KLDirection]
    choice("method", cfg.method, valid_methods)
    choice("direction", cfg.direction, valid_directions)
    choice("dataset", cfg.dataset, ["blobs", "idx"])
    for d in cfg.ablate_directions:
        choice("ablate_directions", d, valid_directions)
    for m in cfg.ablate_methods:
        choice("ablate_methods", m, valid_methods)
    for a in cfg.arms:
        choice("arms", a, ARMS)
    if not cfg.seeds:
        raise ConfigError("seeds must be non-empty")
    if len(cfg.teacher_sizes) < 2 or len(cfg.student_sizes) < 2:
        raise ConfigError("teacher_sizes and student_sizes need at least two entries")
    if cfg.teacher_sizes[0] != cfg.student_sizes[0] or cfg.teacher_sizes[-1] != cfg.student_sizes[-1]:
        raise ConfigError("teacher and student sizes must share input and output dimensions")
    if cfg.dataset == "idx":
        for key in ("idx_images", "idx_labels"):
            if getattr(cfg, key) is None:
                raise ConfigError(f"dataset = idx requires {key}")
        for key in ("idx_images", "idx_labels", "idx_val_images", "idx_val_labels"):
            p = getattr(cfg, key)
            if p is not None and not Path(p).exists():
                raise ConfigError(f"{key}: file not found: {p}")
    try:
        cfg.distill_config()
    except DCKDError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- data and files

def load_splits(cfg: ExperimentConfig, seed: int) -> tuple[data.Dataset, data.Dataset]:
    if cfg.dataset == "blobs":
        ds = data.gen_blobs(cfg.blobs_classes, cfg.blobs_per_class, cfg.blobs_dim, cfg.blobs_spread,
                            seed if cfg.blobs_seed is None else cfg.blobs_seed)
        return data.train_val_split(ds, cfg.val_fraction, seed)
    c = cfg.student_sizes[-1]
    ds = data.load_idx(cfg.idx_images, cfg.idx_labels, cfg.idx_limit, num_classes=c)
    if cfg.idx_val_images:
        return ds, data.load_idx(cfg.idx_val_images, cfg.idx_val_labels, cfg.idx_limit, num_classes=c)
    return data.train_val_split(ds, cfg.val_fraction, seed)


class Run:
    """One subcommand's output directory and manifest bookkeeping."""

    def __init__(self, cfg: ExperimentConfig, subcommand: str):
        self.cfg = cfg
        self.subcommand = subcommand
        self.dir = run_dir(cfg, subcommand)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.artifacts: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.artifacts.append(p)
        return p

    def save_model(self, model: Model, name: str, epoch: int) -> None:
        save_checkpoint(model, self.path(f"checkpoints/{name}.ckpt"), epoch, self.cfg.hash())

    def save_record(self, record: RunRecord) -> None:
        record.to_csv(self.path("record.csv"))
        record.to_json(self.path("summary.json"))

    def write_csv(self, name: str, header: list[str], rows: list[list]) -> None:
        with open(self.path(name), "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])

    def write_json(self, name: str, obj) -> None:
        with open(self.path(name), "w") as f:
            json.dump(obj, f, indent=2, sort_keys=True, default=float)
            f.write("\n")

    def finish(self) -> None:
        lines = [f"subcommand = {self.subcommand}", f"seed = {self.cfg.seed}",
                 f"config_hash = {self.cfg.hash()}", "", "[config]", self.cfg.to_text(), "[artifacts]"]
        for p in sorted(set(self.artifacts)):
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            lines.append(f"{p.relative_to(self.dir)} sha256={digest}")
        (self.dir / "manifest.txt").write_text("\n".join(lines) + "\n")


def run_dir(cfg: ExperimentConfig, subcommand: str) -> Path:
    return Path(cfg.out_dir) / f"{cfg.name}-{subcommand}"


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise DependencyError(f"missing {path}; run '{producer}' first")
    return path


def load_teacher(cfg: ExperimentConfig) -> Model:
    p = _require(run_dir(cfg, "train-teacher") / "checkpoints" / "teacher.ckpt", "train-teacher")
    return read_checkpoint(p, cfg.teacher_sizes).model


def load_nets(cfg: ExperimentConfig, subcommand: str) -> list[Model]:
    ckdir = run_dir(cfg, subcommand) / "checkpoints"
    paths = [ckdir / f"net{i + 1}.ckpt" for i in range(cfg.num_students)]
    for p in paths:
        _require(p, subcommand)
    return [read_checkpoint(p, cfg.student_sizes).model for p in paths]


# ---------------------------------------------------------------- subcommands

def cmd_train_teacher(cfg: ExperimentConfig) -> int:
    train, val = load_splits(cfg, cfg.seed)
    run = Run(cfg, "train-teacher")
    teacher, record = train_teacher(train, val, cfg.teacher_sizes, cfg.teacher_config())
    run.save_model(teacher, "teacher", record.summary["best_epoch"])
    run.save_record(record)
    run.finish()
    print(f"teacher top1={record.summary['top1']:.4f} top5={record.summary['top5']:.4f} "
          f"(best epoch {record.summary['best_epoch']})")
    return 0


def _save_nets(run: Run, students: list[Model], record: RunRecord, epochs: int) -> None:
    for i, m in enumerate(students):
        run.save_model(m, f"net{i + 1}", epochs)
    run.save_record(record)
    run.finish()
    print(" ".join(f"net{i + 1}={acc:.4f}" for i, acc in enumerate(record.summary["net_top1"])))


def cmd_train_dckd(cfg: ExperimentConfig) -> int:
    teacher = load_teacher(cfg)
    train, val = load_splits(cfg, cfg.seed)
    run = Run(cfg, "train-dckd")
    students, record = train_dckd(teacher, cfg.student_sizes, cfg.distill_config(), train, val)
    _save_nets(run, students, record, cfg.epochs)
    return 0


def cmd_train_edckd(cfg: ExperimentConfig) -> int:
    frozen = load_nets(cfg, "train-dckd")
    train, val = load_splits(cfg, cfg.seed)
    run = Run(cfg, "train-edckd")
    students, record = train_edckd(frozen, cfg.student_sizes, cfg.distill_config(), train, val)
    _save_nets(run, students, record, cfg.epochs)
    return 0


def cmd_train_ensembled(cfg: ExperimentConfig) -> int:
    frozen = load_nets(cfg, "train-dckd")
    train, val = load_splits(cfg, cfg.seed)
    run = Run(cfg, "train-ensembled")
    student, record = train_ensembled_student(frozen, cfg.student_sizes, cfg.distill_config(), train, val)
    run.save_model(student, "student", cfg.epochs)
    run.save_record(record)
    run.finish()
    print(f"ensembled student top1={record.summary['net_top1'][0]:.4f}")
    return 0


def cmd_eval(cfg: ExperimentConfig) -> int:
    _, val = load_splits(cfg, cfg.seed)
    rows = []
    for sub in ("train-teacher", "train-dckd", "train-edckd", "train-ensembled"):
        ckdir = run_dir(cfg, sub) / "checkpoints"
        for p in sorted(ckdir.glob("*.ckpt")) if ckdir.exists() else []:
            ev = metrics.evaluate(read_checkpoint(p).model, val)
            rows.append([sub, p.stem, ev["top1"], ev["top5"]])
    if not rows:
        raise DependencyError(f"no checkpoints under {cfg.out_dir}/{cfg.name}-*; run a train-* subcommand first")
    run = Run(cfg, "eval")
    run.write_csv("eval.csv", ["run", "checkpoint", "top1", "top5"], rows)
    run.write_json("summary.json", {f"{r[0]}/{r[1]}": {"top1": r[2], "top5": r[3]} for r in rows})
    run.finish()
    for r in rows:
        print(f"{r[0]:16s} {r[1]:8s} top1={r[2]:.4f} top5={r[3]:.4f}")
    return 0


def cmd_metrics(cfg: ExperimentConfig) -> int:
    teacher = load_teacher(cfg)
    nets = load_nets(cfg, "train-dckd")
    _, val = load_splits(cfg, cfg.seed)
    models = [("teacher", teacher)] + [(f"net{i + 1}", m) for i, m in enumerate(nets)]
    classes = cfg.accum_classes if cfg.accum_classes is not None else sorted(set(val.labels.tolist()))
    table, profiles = [], []
    for name, m in models:
        ev = metrics.evaluate(m, val)
        table.append([name, ev["top1"], ev["top5"], metrics.mean_correlation_number(m, val, 4.0, 0.1),
                      metrics.mean_entropy(m, val, 4.0)])
        for c in classes:
            prof = metrics.class_accumulation(m, val, c, 4.0)
            profiles.append([name, c, prof.temperature] + prof.profile.tolist())
    run = Run(cfg, "metrics")
    run.write_csv("metrics.csv", ["model", "top1", "top5", "mean_corr", "mean_entropy"], table)
    num_classes = cfg.student_sizes[-1]
    run.write_csv("profiles.csv", ["model", "class_index", "temperature"] + [f"p{c}" for c in range(num_classes)],
                  profiles)
    run.write_json("summary.json", {r[0]: dict(zip(["top1", "top5", "mean_corr", "mean_entropy"], r[1:]))
                                    for r in table})
    run.finish()
    for r in table:
        print(f"{r[0]:8s} top1={r[1]:.4f} mean_corr={r[3]:.4f} entropy(T=4)={r[4]:.4f}")
    return 0


def cmd_gradcheck(cfg: ExperimentConfig) -> int:
    worst, details = objective_gradcheck(cfg.gradcheck_cases, cfg.seed)
    run = Run(cfg, "gradcheck")
    run.write_json("summary.json", {"max_relative_error": worst, "cases": details})
    run.finish()
    print(f"max relative error over {len(details)} cases: {worst:.3e}")
    return 0 if worst < 1e-4 else 1


def run_arms(cfg: ExperimentConfig, seed: int, arms) -> list[dict]:
    """Train the requested arms on one seed; one row per (arm, net)."""
    train, val = load_splits(cfg, seed)
    dcfg = cfg.distill_config(seed)
    teacher, trec = train_teacher(train, val, cfg.teacher_sizes, cfg.teacher_config(seed))
    rows = [dict(seed=seed, arm="teacher", net=1, top1=trec.summary["top1"], mean_corr=trec.summary["mean_corr"])]

    def add(arm, record):
        for net, i in enumerate(record.summary["ranking"], 1):
            s = record.summary["students"][i]
            rows.append(dict(seed=seed, arm=arm, net=net, top1=s["top1"], mean_corr=s["mean_corr"]))

    seeds = student_seeds(dcfg)
    if "baseline-ce" in arms:
        _, rec = train_students(cfg.student_sizes, seeds, replace(dcfg.weights, beta_kd=0.0, beta_col=0.0),
                                dcfg, train, val)
        add("baseline-ce", rec)
    if "kd-only" in arms:
        _, rec = train_students(cfg.student_sizes, seeds, replace(dcfg.weights, beta_col=0.0), dcfg,
                                train, val, teacher_target(teacher))
        add("kd-only", rec)
    if {"dckd", "edckd", "ensembled"} & set(arms):
        dckd_students, rec = train_dckd(teacher, cfg.student_sizes, dcfg, train, val)
        add("dckd", rec)
        if "edckd" in arms:
            add("edckd", train_edckd(dckd_students, cfg.student_sizes, dcfg, train, val)[1])
        if "ensembled" in arms:
            add("ensembled", train_ensembled_student(dckd_students, cfg.student_sizes, dcfg, train, val)[1])
    return rows


def cmd_compare(cfg: ExperimentConfig) -> int:
    rows = []
    for seed in cfg.seeds:
        rows += run_arms(cfg, seed, cfg.arms)
    run = Run(cfg, "compare")
    keys = ["seed", "arm", "net", "top1", "mean_corr"]
    run.write_csv("compare.csv", keys, [[r[k] for k in keys] for r in rows])
    summary = {}
    for arm in ["teacher"] + list(cfg.arms):
        sel = [r for r in rows if r["arm"] == arm]
        if sel:
            summary[arm] = {"mean_top1": float(np.mean([r["top1"] for r in sel])),
                            "mean_corr": float(np.mean([r["mean_corr"] for r in sel]))}
    run.write_json("summary.json", summary)
    run.finish()
    for arm, s in summary.items():
        print(f"{arm:12s} mean top1={s['mean_top1']:.4f} mean corr={s['mean_corr']:.4f}")
    return 0


def ablation_rows(cfg: ExperimentConfig) -> list[dict]:
    rows = []
    for seed in cfg.seeds:
        train, val = load_splits(cfg, seed)
        teacher, _ = train_teacher(train, val, cfg.teacher_sizes, cfg.teacher_config(seed))
        for n in cfg.ablate_students:
            for direction in cfg.ablate_directions:
                for method in cfg.ablate_methods:
                    dcfg = cfg.distill_config(seed, num_students=n, direction=direction, method=method)
                    _, rec = train_dckd(teacher, cfg.student_sizes, dcfg, train, val)
                    for net, acc in enumerate(rec.summary["net_top1"], 1):
                        rows.append(dict(direction=direction, method=method, n=n, seed=seed, net=net, top1=acc))
    return rows


def ablation_summary(rows: list[dict]) -> list[list]:
    """Mean top-1 of each variant against the reverse/logit_max baseline at the same N."""
    def mean(direction, method, n):
        vals = [r["top1"] for r in rows if (r["direction"], r["method"], r["n"]) == (direction, method, n)]
        return float(np.mean(vals)) if vals else None

    out = []
    for n in sorted({r["n"] for r in rows}):
        base = mean("reverse", "logit_max", n)
        if base is None:
            continue
        variants = sorted({(r["direction"], r["method"]) for r in rows if r["n"] == n})
        for direction, method in variants:
            if (direction, method) == ("reverse", "logit_max"):
                continue
            if method == "logit_max":
                label = f"reverse-vs-{direction}"
            elif direction == "reverse":
                label = f"logit_max-vs-{method}"
            else:
                label = f"reverse+logit_max-vs-{direction}+{method}"
            v = mean(direction, method, n)
            out.append([label, n, f"{direction}/{method}", "reverse/logit_max", v, base, base - v])
    return out


def cmd_ablate(cfg: ExperimentConfig) -> int:
    rows = ablation_rows(cfg)
    run = Run(cfg, "ablate")
    keys = ["direction", "method", "n", "seed", "net", "top1"]
    run.write_csv("ablation.csv", keys, [[r[k] for k in keys] for r in rows])
    summary = ablation_summary(rows)
    header = ["comparison", "n", "variant", "baseline", "variant_mean_top1", "baseline_mean_top1", "delta"]
    run.write_csv("ablation_summary.csv", header, summary)
    run.write_json("summary.json", [dict(zip(header, s)) for s in summary])
    run.finish()
    for s in summary:
        print(f"{s[0]:40s} N={s[1]} baseline={s[5]:.4f} variant={s[4]:.4f} delta={s[6]:+.4f}")
    return 0


COMMANDS = {
    "train-teacher": cmd_train_teacher,
    "train-dckd": cmd_train_dckd,
    "train-edckd": cmd_train_edckd,
    "train-ensembled": cmd_train_ensembled,
    "eval": cmd_eval,
    "metrics": cmd_metrics,
    "gradcheck": cmd_gradcheck,
    "compare": cmd_compare,
    "ablate": cmd_ablate,
}


def run(subcommand: str, cfg: ExperimentConfig) -> int:
    return COMMANDS[subcommand](cfg)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="dckd", description="Multi-student distillation experiments with peer collections")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="flat key = value config file (defaults apply when omitted)")
    parser.add_argument("--out", help="root directory for run outputs (overrides out_dir)")
    parser.add_argument("--seed", type=int, help="overrides seed and seeds")
    parser.add_argument("--epochs", type=int, help="overrides epochs")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s")
    try:
        cfg = parse_config(args.config) if args.config else ExperimentConfig()
        if args.out is not None:
            cfg.out_dir = args.out
        if args.seed is not None:
            cfg.seed, cfg.seeds = args.seed, [args.seed]
        if args.epochs is not None:
            cfg.epochs = args.epochs
        validate(cfg)
        log.info("running %s with config hash %s", args.subcommand, cfg.hash())
        return run(args.subcommand, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DependencyError as exc:
        print(f"dependency error: {exc}", file=sys.stderr)
        return 3
    except DCKDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
