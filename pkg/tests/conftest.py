"""Shared fixture: every training arm on the blobs preset for seeds 7, 8, 9.

Built once per session; the acceptance suite and the preset examples both read it.
"""

import time
from dataclasses import dataclass, field, replace

import pytest

from dckd import trainer as tr
from dckd.data import blobs_preset, train_val_split

SEEDS = (7, 8, 9)
TEACHER_SIZES = [2, 64, 64, 10]
STUDENT_SIZES = [2, 16, 10]


@dataclass
class SeedRuns:
    seed: int
    train: object
    val: object
    teacher: object
    teacher_record: object
    ce: object
    kd: object
    dckd_students: list
    dckd: object
    edckd: object
    ensembled: object
    seconds: dict = field(default_factory=dict)


def run_seed(seed: int) -> SeedRuns:
    train, val = train_val_split(blobs_preset(seed), 0.2, seed)
    cfg = tr.DistillConfig(seed=seed)
    seeds = tr.student_seeds(cfg)
    clock = {}

    t = time.perf_counter()
    teacher, trec = tr.train_teacher(train, val, TEACHER_SIZES, cfg)
    clock["teacher"] = time.perf_counter() - t

    t = time.perf_counter()
    _, ce = tr.train_students(STUDENT_SIZES, seeds, replace(cfg.weights, beta_kd=0.0, beta_col=0.0), cfg, train, val)
    clock["ce"] = time.perf_counter() - t

    t = time.perf_counter()
    _, kd = tr.train_students(STUDENT_SIZES, seeds, replace(cfg.weights, beta_col=0.0), cfg, train, val,
                              tr.teacher_target(teacher))
    clock["kd"] = time.perf_counter() - t

    t = time.perf_counter()
    students, dckd = tr.train_dckd(teacher, STUDENT_SIZES, cfg, train, val)
    clock["dckd"] = time.perf_counter() - t

    _, edckd = tr.train_edckd(students, STUDENT_SIZES, cfg, train, val)
    _, ens = tr.train_ensembled_student(students, STUDENT_SIZES, cfg, train, val)
    return SeedRuns(seed, train, val, teacher, trec, ce, kd, students, dckd, edckd, ens, clock)


@pytest.fixture(scope="session")
def preset():
    return {seed: run_seed(seed) for seed in SEEDS}
