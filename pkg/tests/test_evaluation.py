import pytest

from scenebm.errors import DataError, UsageError
from scenebm.evaluation import (
    EvalConfig,
    evaluate,
    evaluate_rectification,
    report_csv_rows,
)


def test_eval_config_validates_tasks():
    with pytest.raises(UsageError):
        EvalConfig(tasks=())
    with pytest.raises(UsageError):
        EvalConfig(tasks=(9,))


def test_evaluate_emits_micro_and_macro(planted_suite):
    rows = evaluate(
        planted_suite["model"], planted_suite["vocab"],
        planted_suite["split"].test[:30],
        EvalConfig(tasks=(1, 3), gibbs_steps=8, seed=2),
    )
    by_task = {(r.task, r.aggregation) for r in rows}
    assert ("relations", "micro") in by_task
    assert ("relations", "macro") in by_task
    assert ("extra-objects", "micro") in by_task


def test_theta_sweep_adds_rows(planted_suite):
    rows = evaluate(
        planted_suite["model"], planted_suite["vocab"],
        planted_suite["split"].test[:15],
        EvalConfig(tasks=(2,), theta=0.5, theta_sweep=(0.3, 0.7),
                   gibbs_steps=6, seed=2),
    )
    thetas = sorted({r.theta for r in rows})
    assert thetas == [0.3, 0.5, 0.7]
    csv = report_csv_rows(rows)
    assert len(csv) == 1 + 3  # header plus one micro row per theta


def test_counts_add_up_to_universe(planted_suite):
    vocab = planted_suite["vocab"]
    rows = evaluate(
        planted_suite["model"], vocab, planted_suite["split"].test[:20],
        EvalConfig(tasks=(2,), gibbs_steps=6, seed=4),
    )
    micro = next(r for r in rows if r.aggregation == "micro")
    usable = [
        s for s in planted_suite["split"].test[:20] if len(s.objects) > 1
    ]
    assert micro.counts.total() == vocab.n_objects * len(usable)


def test_evaluate_needs_scenes(planted_suite):
    with pytest.raises(DataError):
        evaluate(planted_suite["model"], planted_suite["vocab"], [],
                 EvalConfig(tasks=(1,)))


def test_rectification_report(planted_suite):
    report = evaluate_rectification(
        planted_suite["model"], planted_suite["vocab"],
        planted_suite["split"].test[:40], gibbs_steps=10, seed=3,
    )
    assert report.scenes > 0
    assert 0.0 <= report.ap_before.value <= 1.0
    assert 0.0 <= report.ap_after.value <= 1.0
