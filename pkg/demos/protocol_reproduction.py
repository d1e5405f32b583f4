"""Run the four evaluation protocols at desk scale and print a summary table.

    python3 demos/protocol_reproduction.py [--seed 0] [--size 5000]

Setup matches the acceptance run: synthetic grammar, d2=16 LSTM, dev split.
Takes about half a minute on one CPU.
"""

import argparse
import time

import numpy as np

from cdlstm.corpus import gen_synthetic_corpus, train_logistic_ngram
from cdlstm.evaluation import (
    compositionality_search,
    dissent_search,
    extract_negations,
    make_scorers,
    negation_ks,
    phrase_embedding_neighbors,
    phrase_embeddings,
    reference_interactions,
    score_negations,
    train_unigram_logistic,
    unigram_correlation,
)
from cdlstm.lstm import TrainConfig, dataset_loss, train_lstm
from cdlstm.render import fmt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--size", type=int, default=5000)
    args = ap.parse_args()

    t0 = time.perf_counter()
    corpus = gen_synthetic_corpus(seed=args.seed, size=args.size)
    dev = corpus["dev"]
    model = train_lstm(corpus["train"], dev, TrainConfig(seed=args.seed, hidden_dim=16))
    print(f"LSTM dev accuracy {fmt(dataset_loss(model, dev)[1])}")

    scorers = make_scorers(model)
    uni = train_unigram_logistic(corpus["train"])
    ngram = train_logistic_ngram(corpus["train"])
    rows = {m: {} for m in scorers}
    for m, s in scorers.items():
        rows[m]["unigram r"] = unigram_correlation(model, uni, dev, s).r
    dissent = dissent_search(dev, ngram, scorers)
    comp = compositionality_search(dev, scorers)
    negs = score_negations(model, extract_negations(dev), dev)
    for m in scorers:
        rows[m]["dissent KS"] = dissent.ks(m)
        rows[m]["composition KS"] = comp.ks(m)
        rows[m]["negation KS"] = negation_ks(negs, m) if m in ("cd", "loo") else float("nan")

    cols = ["unigram r", "dissent KS", "composition KS", "negation KS"]
    print(f"\n{'method':<22}" + "".join(f"{c:>16}" for c in cols))
    for m, r in rows.items():
        print(f"{m:<22}" + "".join(f"{fmt(r[c]) if np.isfinite(r[c]) else 'n/a':>16}" for c in cols))
    print(f"\ndissent phrases {dissent.counts()}, compositional phrases {comp.counts()}, negations {len(negs)}")

    ref = reference_interactions(model, dev)
    pos = [i.interactions["cd"] for i in negs if i.direction == "positive"]
    neg = [i.interactions["cd"] for i in negs if i.direction == "negative"]
    lo, hi = np.percentile(ref, [5, 95])
    print(f"CD negation interactions: positive median {fmt(np.median(pos))}, negative median {fmt(np.median(neg))}; "
          f"reference 5-95% range [{fmt(lo)}, {fmt(hi)}]")  # fmt: skip

    table = phrase_embeddings(model, corpus["train"][:2000] + dev)
    for q in ("not good", "awful"):
        nb = phrase_embedding_neighbors(model, table, q, k=5, exclude_self=True)
        print(f"neighbors of {q!r}: " + ", ".join(p for p, _ in nb))
    print(f"\ntotal {time.perf_counter() - t0:.0f}s")


if __name__ == "__main__":
    main()
