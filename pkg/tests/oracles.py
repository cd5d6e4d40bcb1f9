"""Straight-line numpy reimplementations used as test oracles."""

import itertools
import math
import re

import numpy as np

_TOKEN = re.compile(r"\[(?:MASK|SEP|CLS|PAD|UNK)\]|\w+|[^\w\s]")


def ids_of(tokenizer, text):
    vocab = {w: i for i, w in enumerate(tokenizer.itos)}
    toks = [t if t.startswith("[") and t.endswith("]") and len(t) > 2 else t.lower() for t in _TOKEN.findall(text)]
    return [vocab.get(t, vocab["[UNK]"]) for t in toks]


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def encoder_oracle(head, tokenizer, text, caption):
    """s = sigmoid(W^T r + b) with r the mean word embedding of "T C"."""
    E = head.encoder.embed.weight.detach().numpy()
    W = head.linear.weight.detach().numpy().T
    b = head.linear.bias.detach().numpy()
    joined = " ".join(p for p in (text.strip(), caption.strip()) if p)
    ids = ids_of(tokenizer, joined)
    r = E[ids].mean(axis=0) if ids else np.zeros(E.shape[1])
    return sigmoid(W.T @ r + b)


def envelope_text(text, caption, demo0, demo1, template="It was [MASK].", words=("good", "bad")):
    def block(t, c, tail):
        return " ".join(p for p in (t.strip(), c.strip(), tail) if p)

    return " [SEP] ".join([block(text, caption, template),
                           block(demo0[0], demo0[1], template.replace("[MASK]", words[0])),
                           block(demo1[0], demo1[1], template.replace("[MASK]", words[1]))])


def prompt_oracle(lm, tokenizer, envelope):
    """(s0, s1): sigmoid of the label-word logits at the single mask position."""
    ids = ids_of(tokenizer, envelope)
    mask_pos = [i for i, t in enumerate(ids) if t == tokenizer.itos.index("[MASK]")]
    assert len(mask_pos) == 1
    E = lm.embed.weight.detach().numpy()
    Wm, bm = lm.mix.weight.detach().numpy(), lm.mix.bias.detach().numpy()
    Wo, bo = lm.out.weight.detach().numpy(), lm.out.bias.detach().numpy()
    h = E[ids]
    ctx = h.mean(axis=0)
    z = np.tanh(h[mask_pos[0]] + Wm @ ctx + bm)
    logits = Wo @ z + bo
    good, bad = tokenizer.itos.index("good"), tokenizer.itos.index("bad")
    return sigmoid(logits[good]), sigmoid(logits[bad])


def pairwise_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


def loop_bce(s, y):
    total = 0.0
    for (s0, s1), (y0, y1) in zip(s, y):
        total += -(y0 * math.log(max(s0, 1e-12)) + y1 * math.log(max(s1, 1e-12)))
    return total / len(s)


def two_pass_std(values):
    n = len(values)
    mean = sum(values) / n
    return mean, math.sqrt(sum((v - mean) ** 2 for v in values) / n)
