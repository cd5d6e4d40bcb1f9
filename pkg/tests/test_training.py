import pytest
import torch

from procap.dataset import MemeRecord
from procap.errors import ConfigError, MissingCaptionError, NonFiniteLossError
from procap.harness import RunConfig, TrainedModel, choose_demos, evaluate, prepare_inputs, run_seeds, train
from procap.probing import DecodeParams, ProCap, load_procaps, select_bank
from procap.tokenization import WordTokenizer

FAST = dict(learning_rate=1e-2, batch_size=16, epochs=4, seeds=(0, 1))


def procaps_for(records, cache, config):
    return load_procaps([r.id for r in records], config.bank, config.decode_params, cache)


@pytest.mark.parametrize("head", ["encoder", "prompt"])
def test_train_learns_desk_corpus(head, desk_sets, desk_cache):
    train_set, test_set = desk_sets
    cfg = RunConfig(head, "desk", epochs=10, **{k: v for k, v in FAST.items() if k != "epochs"})
    pcs = procaps_for(list(train_set) + list(test_set), desk_cache, cfg)
    model = train(cfg, train_set, pcs, seed=0)
    assert model.train_accuracy >= 0.9
    assert len(model.loss_history) == 10 and model.loss_history[-1] < model.loss_history[0]
    scores, preds = evaluate(model, test_set, pcs)
    assert len(scores) == len(test_set) and set(preds) <= {0, 1}


def test_training_is_reproducible_and_checkpoints_round_trip(desk_sets, desk_cache, tmp_path):
    train_set, test_set = desk_sets
    cfg = RunConfig("prompt", "desk", **FAST)
    pcs = procaps_for(list(train_set) + list(test_set), desk_cache, cfg)
    a = run_seeds(cfg, train_set, test_set, pcs, checkpoint_dir=tmp_path)
    b = run_seeds(cfg, train_set, test_set, pcs)
    assert a.to_json() == b.to_json()
    back = TrainedModel.load(tmp_path / "seed_1")
    assert back.config == cfg and back.seed == 1
    fresh = train(cfg, train_set, pcs, seed=1)
    assert evaluate(back, test_set, pcs) == evaluate(fresh, test_set, pcs)


def test_missing_caption_is_reported(desk_sets):
    with pytest.raises(MissingCaptionError, match="train000"):
        train(RunConfig(**FAST), desk_sets[0], {})


def test_prepare_inputs_applies_budgets_and_tags():
    cfg = RunConfig(use_tags=True, joint_budget=7)
    rec = MemeRecord("m", "x.png", "one two three four five", 0, "train", ("tagged",))
    pc = ProCap("m", {"content": "a b c d e f"})
    texts, caps = prepare_inputs([rec], {"m": pc}, WordTokenizer(), cfg)
    assert texts == ["one two three four five"] and caps == ["a. tagged"]
    # a budget of one token cannot hold "word." so the content answer is dropped
    _, caps = prepare_inputs([rec], {"m": pc}, WordTokenizer(), cfg.replace(joint_budget=6))
    assert caps == ["tagged"]


def test_choose_demos_needs_both_classes():
    recs = [MemeRecord(str(i), "x", "t", 0, "train") for i in range(3)]
    with pytest.raises(ConfigError):
        choose_demos(recs, ["c"] * 3, ["t"] * 3, 0)
    recs.append(MemeRecord("h", "x", "t", 1, "train"))
    d0, d1 = choose_demos(recs, ["c"] * 4, ["t"] * 4, 0)
    assert d0.label == 0 and d1.meme_id == "h"


def test_non_finite_loss(desk_sets, desk_cache, monkeypatch):
    from procap.harness import training

    cfg = RunConfig(**FAST)
    pcs = procaps_for(desk_sets[0], desk_cache, cfg)
    monkeypatch.setitem(training.LOSSES, "bce", lambda s, y: torch.tensor(float("nan"), requires_grad=True))
    with pytest.raises(NonFiniteLossError, match="epoch 0"):
        train(cfg, desk_sets[0], pcs)
