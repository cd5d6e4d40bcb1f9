import math
import random

import numpy as np
import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from oracles import loop_bce, pairwise_auc, two_pass_std
from procap.errors import UndefinedAUCError
from procap.harness import (
    MetricsReport,
    SeedResult,
    accuracy,
    aggregate_runs,
    auc_roc,
    bce_loss,
    bce_loss_torch,
    binary_cross_entropy,
    binary_cross_entropy_torch,
    one_hot,
)


@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 1)), min_size=2, max_size=40))
def test_auc_matches_pairwise_oracle(pairs):
    scores = [s / 5 for s, _ in pairs]
    labels = [y for _, y in pairs]
    if len(set(labels)) < 2:
        with pytest.raises(UndefinedAUCError):
            auc_roc(scores, labels)
    else:
        assert auc_roc(scores, labels) == pairwise_auc(scores, labels)


def test_auc_known_values():
    assert auc_roc([0.1, 0.9], [0, 1]) == 1.0
    assert auc_roc([0.9, 0.1], [0, 1]) == 0.0
    assert auc_roc([0.5, 0.5], [0, 1]) == 0.5


def test_accuracy():
    assert accuracy([1, 0, 1, 1], [1, 1, 1, 0]) == 0.5
    with pytest.raises(ValueError):
        accuracy([1], [1, 0])
    with pytest.raises(ValueError):
        accuracy([], [])


def test_bce_analytic_values():
    assert bce_loss((1.0, 1e-12), (1, 0)) == pytest.approx(0.0, abs=1e-9)
    assert bce_loss((0.5, 0.5), (1, 0)) == pytest.approx(math.log(2), abs=1e-9)
    assert bce_loss((0.0, 0.3), (1, 0)) == pytest.approx(-math.log(1e-12))  # clamped, finite


def test_bce_batch_and_torch_twin():
    rng = np.random.default_rng(0)
    s = rng.uniform(0.01, 0.99, size=(17, 2))
    y = one_hot(rng.integers(0, 2, size=17))
    assert bce_loss(s, y) == pytest.approx(loop_bce(s, y), abs=1e-9)
    assert float(bce_loss_torch(torch.tensor(s), torch.tensor(y))) == pytest.approx(bce_loss(s, y), abs=1e-12)
    assert float(binary_cross_entropy_torch(torch.tensor(s), torch.tensor(y))) == pytest.approx(
        binary_cross_entropy(s, y), abs=1e-12)


def test_full_bce_penalises_wrong_class_score():
    # the literal loss ignores s1 when y0 = 1; the full form does not
    assert bce_loss((0.9, 0.99), (1, 0)) == bce_loss((0.9, 0.01), (1, 0))
    assert binary_cross_entropy((0.9, 0.99), (1, 0)) > binary_cross_entropy((0.9, 0.01), (1, 0))


def test_aggregate_population_std(tmp_path):
    rng = random.Random(0)
    results = [SeedResult(i, rng.random(), rng.random()) for i in range(7)]
    rep = aggregate_runs(results, "fp", {"a": 1})
    mean, std = two_pass_std([r.auc for r in results])
    assert abs(rep.mean_auc - mean) < 1e-12 and abs(rep.std_auc - std) < 1e-12
    assert rep.std_kind == "population"
    assert MetricsReport.load(rep.save(tmp_path / "m.json")) == rep
    with pytest.raises(ValueError):
        aggregate_runs([])
