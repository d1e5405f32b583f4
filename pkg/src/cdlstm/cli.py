"""Command-line entry point: ``cdlstm {generate,train,attribute,eval,neighbors}``.

Exit codes: 0 success, 2 usage or input error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .baselines import DEFAULT_IG_STEPS, METHODS, canonical_method, loo_phrase_score, word_scores
from .cd import PhraseSpan, cd_decompose
from .corpus import gen_synthetic_corpus, load_corpus_dir, load_embeddings, save_corpus_dir, train_logistic_ngram
from .corpus.treebank import TreeParseError
from .evaluation import (
    bucket_edges,
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
from .lstm import TrainConfig, TrainingDiverged, dataset_loss, train_lstm
from .modelfile import ModelFileError, load_model, save_model
from .render import fmt, render_ansi, render_html

METHOD_CHOICES = ("cd", "loo", "grad", "ig", "cell", "all")
REPORT_SCHEMA = "cdlstm-report/1"


class UsageError(Exception):
    """Bad flags or unreadable inputs (exit code 2)."""


def _methods(choice: str) -> list[str]:
    return list(METHODS) if choice == "all" else [canonical_method(choice)]


def _need_file(path, what: str) -> Path:
    if path is None:
        raise UsageError(f"--{what} is required")
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} path not found: {p}")
    return p


def _load_model(path):
    p = _need_file(path, "model")
    try:
        return load_model(p)
    except ModelFileError as exc:
        raise UsageError(f"cannot read model {p}: {exc}") from None


def _load_data(path) -> dict:
    p = _need_file(path, "data")
    try:
        return load_corpus_dir(p)
    except (FileNotFoundError, TreeParseError, ValueError) as exc:
        raise UsageError(f"cannot read corpus {p}: {exc}") from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)


def _write(out_dir, name: str, text: str) -> Path:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    path = d / name
    path.write_text(text, encoding="utf-8")
    return path


def _clean(v):
    """JSON-safe floats: non-finite values become null."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (float, np.floating)):
        return float(v) if np.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    corpus = gen_synthetic_corpus(args.seed, args.size)
    save_corpus_dir(args.out, corpus)
    print(f"wrote {', '.join(f'{k}={len(v)}' for k, v in corpus.items())} reviews to {args.out}")
    return 0


def cmd_train(args) -> int:
    data = _load_data(args.data)
    if "train" not in data or "dev" not in data:
        raise UsageError(f"corpus {args.data} needs train and dev splits")
    pretrained = None
    if args.glove:
        pretrained = load_embeddings(_need_file(args.glove, "glove"), args.embed_dim)
    cfg = TrainConfig(
        seed=args.seed,
        max_epochs=args.epochs,
        patience=args.patience,
        hidden_dim=args.hidden_dim,
        embed_dim=args.embed_dim,
        batch_size=args.batch_size,
    )
    history: list = []
    model = train_lstm(data["train"], data["dev"], cfg, pretrained=pretrained, history=history)
    out = Path(args.out)
    model_path = Path(args.model) if args.model else out / "model.bin"
    model_path.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, model_path)
    best = min(history, key=lambda r: (r["valid_loss"], r["epoch"]))
    stopped = history[-1]["epoch"]
    for r in history[1:]:
        print(f"epoch {r['epoch']}  train_loss {fmt(r['train_loss'])}  valid_loss {fmt(r['valid_loss'])}  valid_acc {fmt(r['valid_acc'])}")
    valid_loss, valid_acc = dataset_loss(model, data["dev"])
    print(f"best epoch {best['epoch']} (stopped after epoch {stopped})")
    print(f"validation accuracy {fmt(valid_acc)}")
    log = {"config": vars(cfg), "history": history, "best_epoch": best["epoch"], "stopped_epoch": stopped,
           "valid_loss": valid_loss, "valid_accuracy": valid_acc, "model": str(model_path)}  # fmt: skip
    _write(out, "train_log.json", _dump(_clean(log)))
    print(f"model written to {model_path}")
    return 0


def _tokens(args) -> list[str]:
    if args.text is not None and args.input is not None:
        raise UsageError("give either --text or --input, not both")
    if args.input is not None:
        text = _need_file(args.input, "input").read_text(encoding="utf-8")
    elif args.text is not None:
        text = args.text
    else:
        raise UsageError("attribute needs --text or --input")
    tokens = text.split()
    if not tokens:
        raise UsageError("empty input sentence")
    return tokens


def cmd_attribute(args) -> int:
    model = _load_model(args.model)
    tokens = _tokens(args)
    T = len(tokens)
    try:
        spans = [PhraseSpan.parse(s).check(T) for s in args.span]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    methods = _methods(args.method)
    xs = model.embed(tokens)
    rows, reports = {}, {}
    for m in methods:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rep = word_scores(model, tokens, m, ig_steps=args.ig_steps, xs=xs)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        rows[m] = rep.scores
        reports[m] = rep.to_dict()
    span_rows = []
    for sp in spans:
        entry = {"span": str(sp), "text": " ".join(tokens[sp.slice()]), "scores": {}}
        for m in methods:
            if m == "cd":
                res = cd_decompose(model.params, xs, sp)
                entry["cd"] = {
                    "beta_logits": res.beta_logits.tolist(),
                    "gamma_logits": res.gamma_logits.tolist(),
                    "bias_logits": res.bias_logits.tolist(),
                }
                entry["scores"][m] = res.scalar_score if model.params.n_classes == 2 else None
            elif m == "loo":
                entry["scores"][m] = loo_phrase_score(model.params, xs, sp)
            else:
                entry["scores"][m] = float(np.sum(rows[m][sp.slice()]))
        span_rows.append(entry)
    edges = {m: bucket_edges(r) for m, r in rows.items()}
    report = {
        "schema": REPORT_SCHEMA,
        "command": "attribute",
        "tokens": tokens,
        "probabilities": model.predict_proba(tokens).tolist(),
        "methods": reports,
        "spans": span_rows,
        "bucket_edges": {m: list(e) for m, e in edges.items()},
    }
    report = _clean(report)

    if args.render == "report":
        print(_dump(report))
    elif args.render == "html":
        path = _write(args.out or ".", "heatmap.html", render_html(tokens, rows, edges))
        print(f"heat map written to {path}")
    else:
        print(render_ansi(tokens, rows, edges))
    if args.render != "report":
        width = max(len(m) for m in methods)
        for m in methods:
            print(f"{m:<{width}}  " + " ".join(fmt(v) for v in rows[m]))
        for e in span_rows:
            print(f"span {e['span']} ({e['text']}): " + ", ".join(f"{m} {fmt(v) if v is not None else 'n/a'}" for m, v in e["scores"].items()))
    if args.out:
        _write(args.out, "attribution.json", _dump(report))
    return 0


def run_evaluation(model, data: dict, methods, ig_steps: int = DEFAULT_IG_STEPS, split: str = "dev", mode_dissent="phrase") -> dict:
    """All protocols the corpus supports; returns the structured report."""
    if split not in data:
        raise UsageError(f"corpus has no {split!r} split")
    reviews = data[split]
    scorers = make_scorers(model, methods, ig_steps)
    has_trees = all(r.tree is not None for r in reviews)
    report: dict = {
        "schema": REPORT_SCHEMA,
        "command": "eval",
        "split": split,
        "n_reviews": len(reviews),
        "methods": list(scorers),
        "ig_steps": ig_steps,
        "accuracy": dataset_loss(model, reviews)[1],
    }
    train = data.get("train")
    if train:
        uni = train_unigram_logistic(train)
        sec = {"status": "ok", "pearson": {}, "points": {}}
        for name, sc in scorers.items():
            u = unigram_correlation(model, uni, reviews, sc)
            sec["pearson"][name] = u.r
            sec["points"][name] = u.to_dict()["points"]
        report["unigram_correlation"] = sec
        ngram = train_logistic_ngram(train)
        d = dissent_search(reviews, ngram, scorers, mode=mode_dissent)
        report["dissent"] = {"status": "ok", **d.to_dict()}
    else:
        notice = {"status": "skipped", "reason": "corpus has no train split to fit the logistic reference models"}
        report["unigram_correlation"] = dict(notice)
        report["dissent"] = dict(notice)
    if has_trees:
        c = compositionality_search(reviews, scorers)
        report["compositionality"] = {"status": "ok", **c.to_dict()}
        inter = [m for m in ("cd", "loo") if m in scorers]
        negs = score_negations(model, extract_negations(reviews), reviews, inter)
        ref = reference_interactions(model, reviews, "cd") if "cd" in scorers else np.zeros(0)
        report["negation"] = {
            "status": "ok",
            "mode": "phrase",
            "counts": {d: sum(i.direction == d for i in negs) for d in ("positive", "negative")},
            "ks": {m: negation_ks(negs, m) for m in inter},
            "reference_cd": {"n": int(ref.size), "values": ref.tolist()},
            "instances": [i.to_dict() for i in negs],
        }
    else:
        notice = {"status": "skipped", "reason": "corpus has no parse trees"}
        report["compositionality"] = dict(notice)
        report["negation"] = dict(notice)
    return _clean(report)


def cmd_eval(args) -> int:
    model = _load_model(args.model)
    data = _load_data(args.data)
    report = run_evaluation(model, data, _methods(args.method), args.ig_steps, args.split)
    out = args.out or "."
    path = _write(out, "report.json", _dump(report))
    print(f"accuracy on {args.split}: {fmt(report['accuracy'])}")
    for sec in ("unigram_correlation", "dissent", "compositionality", "negation"):
        s = report[sec]
        if s["status"] != "ok":
            print(f"{sec}: skipped ({s['reason']})")
            continue
        stat = s["pearson"] if sec == "unigram_correlation" else s["ks"]
        label = "pearson r" if sec == "unigram_correlation" else "KS"
        vals = ", ".join(f"{m} {fmt(v) if v is not None else 'n/a'}" for m, v in stat.items())
        extra = f" counts {s['counts']}" if "counts" in s else ""
        print(f"{sec}: {label} {vals}{extra}")
    print(f"report written to {path}")
    return 0


def cmd_neighbors(args) -> int:
    model = _load_model(args.model)
    data = _load_data(args.data)
    reviews = [r for split in ("train", "dev") for r in data.get(split, [])]
    if not reviews:
        raise UsageError("corpus needs a train or dev split")
    if args.max_reviews:
        reviews = reviews[: args.max_reviews]
    if not args.query:
        raise UsageError("neighbors needs at least one --query")
    table = phrase_embeddings(model, reviews, args.max_len)
    result = {}
    for q in args.query:
        if not q.split():
            raise UsageError("empty query")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            nb = phrase_embedding_neighbors(model, table, q, args.k, exclude_self=True)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        result[q] = nb
        print(f"query: {q}")
        for rank, (p, s) in enumerate(nb, 1):
            print(f"  {rank:>2}  {fmt(s):>10}  {p}")
    if args.out:
        _write(args.out, "neighbors.json", _dump({"schema": REPORT_SCHEMA, "command": "neighbors", "k": args.k,
               "neighbors": {q: [{"phrase": p, "cosine": s} for p, s in nb] for q, nb in result.items()}}))  # fmt: skip
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cdlstm", description="Contextual decomposition for LSTM sentiment classifiers.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, model=True, data=False):
        if model:
            p.add_argument("--model", help="model file (binary, or text with a .txt suffix)")
        if data:
            p.add_argument("--data", help="corpus directory with train/dev/test files")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("generate", help="write a synthetic treebank corpus")
    common(p, model=False)
    p.add_argument("--size", type=int, default=5000, help="training reviews (dev and test get a fifth each)")
    p.set_defaults(func=cmd_generate, out_required=True)

    p = sub.add_parser("train", help="train an LSTM classifier")
    common(p, data=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--hidden-dim", type=int, default=16)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--glove", help="pretrained embeddings in GloVe text format (dimension --embed-dim)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attribute", help="score the words (and spans) of one sentence")
    common(p)
    p.add_argument("--text", help="sentence, whitespace tokenized")
    p.add_argument("--input", help="file holding the sentence")
    p.add_argument("--method", choices=METHOD_CHOICES, default="cd")
    p.add_argument("--span", action="append", default=[], help="phrase span q:r (1-based, inclusive); repeatable")
    p.add_argument("--ig-steps", type=int, default=DEFAULT_IG_STEPS)
    p.add_argument("--render", choices=("ansi", "html", "report"), default="ansi")
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("eval", help="run the evaluation protocols")
    common(p, data=True)
    p.add_argument("--method", choices=METHOD_CHOICES, default="all")
    p.add_argument("--split", default="dev")
    p.add_argument("--ig-steps", type=int, default=DEFAULT_IG_STEPS)
    p.add_argument("--render", choices=("report",), default="report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("neighbors", help="nearest phrases by averaged CD phrase vectors")
    common(p, data=True)
    p.add_argument("--query", action="append", default=[], help="query phrase; repeatable")
    p.add_argument("-k", "--k", type=int, default=5)
    p.add_argument("--max-len", type=int, default=5, help="longest parse-node phrase in the candidate table")
    p.add_argument("--max-reviews", type=int, default=0, help="cap on reviews used for the table (0 = all)")
    p.set_defaults(func=cmd_neighbors)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with code 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "out_required", False) and not args.out:
        print("cdlstm: error: --out is required", file=sys.stderr)
        return 2
    if getattr(args, "ig_steps", 1) < 1:
        print("cdlstm: error: --ig-steps must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cdlstm: error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"cdlstm: training diverged: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal error
        print(f"cdlstm: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
