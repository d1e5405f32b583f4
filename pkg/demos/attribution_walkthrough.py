"""Train a small LSTM on the synthetic grammar and compare attributions.

    python3 demos/attribution_walkthrough.py [--html out.html]

Shows word-level heat maps for every method on a few constructions, then
CD phrase scores for spans of a negated sentence.
"""

import argparse
from pathlib import Path

from cdlstm.baselines import word_scores
from cdlstm.cd import cd_span_scores
from cdlstm.corpus import gen_synthetic_corpus
from cdlstm.evaluation import bucket_edges
from cdlstm.lstm import TrainConfig, dataset_loss, train_lstm
from cdlstm.render import fmt, render_ansi, render_html

SENTENCES = (
    "it used to be my favorite .",
    "the plot was not good .",
    "the acting was nice but the story was really awful .",
)
METHODS = ("cd", "loo", "grad_input", "integrated_gradients", "cell_decomp")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=2000)
    ap.add_argument("--html", help="also write the heat maps to this HTML file")
    args = ap.parse_args()

    corpus = gen_synthetic_corpus(seed=0, size=args.size)
    model = train_lstm(corpus["train"], corpus["dev"], TrainConfig(seed=0, hidden_dim=16))
    print(f"dev accuracy {fmt(dataset_loss(model, corpus['dev'])[1])}\n")

    pages = []
    for text in SENTENCES:
        tokens = text.split()
        rows = {m: word_scores(model, tokens, m).scores for m in METHODS}
        edges = {m: bucket_edges(r) for m, r in rows.items()}
        print(f"p(positive) = {fmt(model.predict_proba(tokens)[1])}")
        print(render_ansi(tokens, rows, edges))
        print()
        pages.append(render_html(tokens, rows, edges, title=text))

    tokens = "the plot was not good .".split()
    spans = [(4, 4), (5, 5), (4, 5), (1, 6)]
    scores = cd_span_scores(model.params, model.embed(tokens), spans)
    print("CD phrase scores (positive minus negative logit):")
    for (q, r), s in zip(spans, scores):
        print(f"  {q}:{r}  {' '.join(tokens[q - 1 : r]):<24} {fmt(s)}")
    # the words alone point one way, the phrase the other: CD captures the interaction
    if args.html:
        Path(args.html).write_text("\n".join(pages), encoding="utf-8")
        print(f"\nHTML written to {args.html}")


if __name__ == "__main__":
    main()
