"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import time

import numpy as np
import pytest

from conftest import SEEDS, STUDENT_SIZES, TEACHER_SIZES
from dckd import autodiff as ad
from dckd import cli, losses
from dckd import trainer as tr
from dckd.autodiff import Tensor
from dckd.checks import objective_gradcheck
from dckd.losses import CollectionMethod as M
from dckd.metrics import correlation_number
from dckd.models import save_checkpoint


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail
    return emit


def softmax(z):
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def test_c01_gradient_fidelity(report):
    t = time.perf_counter()
    worst, details = objective_gradcheck(num_cases=50, seed=0, eps=1e-5)
    secs = time.perf_counter() - t
    assert len(details) == 50
    assert all(2 <= d["students"] <= 3 and 3 <= d["classes"] <= 10 and d["batch"] <= 8 for d in details)
    report(1, worst < 1e-4 and secs < 30, f"max relative error {worst:.2e} over 50 objectives in {secs:.1f}s")


def test_c02_kld_algebra(report):
    t = time.perf_counter()
    rng = np.random.default_rng(2)
    worst_identity, worst_self, min_other = 0.0, 0.0, np.inf
    for _ in range(1000):
        c = int(rng.integers(2, 11))
        u, v = rng.dirichlet(np.ones(c), size=(1,)), rng.dirichlet(np.ones(c), size=(1,))
        k = losses.kld(u, v).item()
        rhs = losses.cross_entropy_soft(u, Tensor(np.log(v)), 1.0).item() - losses.entropy(u).item()
        worst_identity = max(worst_identity, abs(k - rhs))
        worst_self = max(worst_self, abs(losses.kld(u, u).item()))
        if np.max(np.abs(u - v)) > 1e-6:
            min_other = min(min_other, k)
    secs = time.perf_counter() - t
    ok = worst_identity < 1e-9 and worst_self < 1e-6 and min_other > 0 and secs < 5
    report(2, ok, f"identity gap {worst_identity:.1e}, max kld(u,u) {worst_self:.1e}, "
                  f"min kld(u!=v) {min_other:.2e}, {secs:.2f}s")


def test_c03_collection_equivalence(report):
    t = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for i in range(200):
        n, c = (2, 3, 5)[i % 3], (3, 10, 100)[(i // 3) % 3]
        s = [Tensor(rng.normal(0, 3, (4, c))) for _ in range(n)]
        lhs = losses.collect(M.PROB_MAX, s).value
        rhs = softmax(losses.collect(M.LOGIT_MAX, [ad.log_softmax_rows(y) for y in s]).value)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    secs = time.perf_counter() - t
    report(3, worst < 1e-9 and secs < 5, f"max |ProbMax - softmax(LogitMax(log_softmax))| {worst:.1e}, {secs:.2f}s")


def test_c04_self_exclusion(report):
    rng = np.random.default_rng(4)
    identical = 0
    for _ in range(100):
        n, c = int(rng.integers(2, 6)), int(rng.integers(2, 12))
        s = [Tensor(rng.normal(size=(3, c))) for _ in range(n)]
        k = int(rng.integers(n))
        noisy = list(s)
        noisy[k] = Tensor(s[k].value + rng.normal(0, 5, (3, c)))
        identical += all(np.array_equal(losses.collect(m, s, k).value, losses.collect(m, noisy, k).value)
                         for m in M)
    report(4, identical == 100, f"{identical}/100 cases bit-identical for all three methods")


def test_c05_correlation_fixtures(report):
    k1 = correlation_number([0.6] + [0.05] * 8, 0.1)
    k2 = correlation_number([0.6, 0.4] + [0.0] * 8, 0.1)
    report(5, (k1, k2) == (1, 2), f"K(p1, 0.1) = {k1}, K(p2, 0.1) = {k2}")


def test_c06_scheduler(report):
    lr0, lr_min = 0.05, 0.001
    starts = [tr.cosine_warm_restart_lr(e, lr0, lr_min, 30, 2) for e in (0, 30, 90, 210, 450)]
    mid = tr.cosine_warm_restart_lr(15, lr0, lr_min, 30, 2)
    bounds = tr.restart_epochs(30, 2, 5)
    ok = all(s == lr0 for s in starts) and abs(mid - (lr0 + lr_min) / 2) < 1e-12 \
        and {210, 450, 930} <= set(bounds)
    report(6, ok, f"restart lrs {starts}, lr(15) - midpoint {mid - (lr0 + lr_min) / 2:.1e}, boundaries {bounds}")


@pytest.mark.slow
def test_c07_method_ordering(report, preset):
    mean_wins, net1_wins, lines = 0, 0, []
    for seed in SEEDS:
        r = preset[seed]
        dckd_mean, ce_mean = r.dckd.summary["mean_top1"], r.ce.summary["mean_top1"]
        net1, kd_mean = r.dckd.summary["net_top1"][0], r.kd.summary["mean_top1"]
        mean_wins += dckd_mean >= ce_mean
        net1_wins += net1 >= kd_mean - 0.005
        lines.append(f"seed {seed}: dckd mean {dckd_mean:.4f} vs ce mean {ce_mean:.4f}, "
                     f"net1 {net1:.4f} vs kd-only {kd_mean:.4f}")
    secs = sum(sum(preset[s].seconds.values()) for s in SEEDS)
    ok = mean_wins >= 2 and net1_wins >= 2 and secs < 600
    report(7, ok, f"mean wins {mean_wins}/3, net1 wins {net1_wins}/3, {secs:.0f}s; " + "; ".join(lines))


@pytest.mark.slow
def test_c08_correlation_accumulation(report, preset):
    wins, lines = 0, []
    for seed in SEEDS:
        student, teacher = preset[seed].dckd.summary["mean_corr"], preset[seed].teacher_record.summary["mean_corr"]
        wins += student >= teacher
        lines.append(f"seed {seed}: {student:.4f} vs {teacher:.4f}")
    report(8, wins >= 2, f"students >= teacher on {wins}/3 seeds; " + "; ".join(lines))


@pytest.mark.slow
def test_c09_ablation(report, tmp_path):
    cfg = cli.ExperimentConfig(out_dir=str(tmp_path), name="acc")
    assert cfg.ablate_students == [3] and cfg.seeds == list(SEEDS)
    t = time.perf_counter()
    rows = cli.ablation_rows(cfg)
    summary = cli.ablation_summary(rows)
    secs = time.perf_counter() - t
    labels = {(s[0], s[1]) for s in summary}
    ok = len(rows) == 2 * 2 * 1 * 3 * 3 and {("reverse-vs-forward", 3), ("logit_max-vs-average", 3)} <= labels
    shown = "; ".join(f"{s[0]} N={s[1]} delta {s[6]:+.4f}" for s in summary)
    report(9, ok, f"{len(rows)} rows in {secs:.0f}s; {shown}")


@pytest.mark.slow
def test_c10_determinism(report, preset, tmp_path):
    first = preset[7]
    cfg = tr.DistillConfig(seed=7)
    teacher, trec = tr.train_teacher(first.train, first.val, TEACHER_SIZES, cfg)
    students, rec = tr.train_dckd(teacher, STUDENT_SIZES, cfg, first.train, first.val)
    same_records = rec.rows == first.dckd.rows and rec.summary == first.dckd.summary \
        and trec.rows == first.teacher_record.rows
    same_bytes = True
    for i, (a, b) in enumerate(zip([first.teacher] + first.dckd_students, [teacher] + students)):
        pa, pb = tmp_path / f"a{i}.ckpt", tmp_path / f"b{i}.ckpt"
        save_checkpoint(a, pa, cfg.epochs)
        save_checkpoint(b, pb, cfg.epochs)
        same_bytes &= pa.read_bytes() == pb.read_bytes()
    for r in (rec, first.dckd):
        r.to_csv(tmp_path / f"{id(r)}.csv")
    same_csv = (tmp_path / f"{id(rec)}.csv").read_bytes() == (tmp_path / f"{id(first.dckd)}.csv").read_bytes()
    report(10, same_records and same_bytes and same_csv,
           f"records identical: {same_records and same_csv}, checkpoints byte-identical: {same_bytes}")
