"""Independent scalar transcription of the CD recursion for a one-unit LSTM.

Uses only ``math`` and ``itertools`` (no numpy, nothing from cdlstm) and
writes ``scalar_cd.json`` next to this file. Rerun with

    python3 tests/fixtures/derive_scalar_cd.py

Conventions transcribed here:
  * the linearization averages telescoping differences over orderings, with
    the empty partial sum valued at 0 (so sigma's 0.5 lands on the first term);
  * when a bias is present only orderings that start with the bias are used;
  * gates: f, i, g split four ways (input, phrase, other, bias); the output
    gate is not split; tanh(c) is split two ways (phrase, other).
"""

import itertools
import json
import math
from pathlib import Path


def sig(z):
    return 1.0 / (1.0 + math.exp(-z))


def lin(values, f, bias=None):
    """Permutation-averaged telescoping split of f(sum(values))."""
    n = len(values)
    perms = [p for p in itertools.permutations(range(n)) if bias is None or p[0] == bias]
    out = [0.0] * n
    for p in perms:
        prev_sum = None
        acc = 0.0
        for k in p:
            acc += values[k]
            before = 0.0 if prev_sum is None else f(prev_sum)
            out[k] += f(acc) - before
            prev_sum = acc
    return [v / len(perms) for v in out]


PARAMS = {
    "Wo": 0.7, "Wf": -0.4, "Wi": 0.9, "Wg": 1.3,
    "Vo": -0.6, "Vf": 0.5, "Vi": -0.8, "Vg": 0.45,
    "bo": 0.1, "bf": 0.8, "bi": -0.3, "bg": 0.2,
    "Wsoft": [-1.1, 1.5], "bsoft": [0.05, -0.05],
}  # fmt: skip
XS = [0.8, -1.2]
SPANS = [(1, 1), (2, 2), (1, 2)]


def forward(p, xs):
    h = c = 0.0
    hs, cs = [], []
    for x in xs:
        o = sig(p["Wo"] * x + p["Vo"] * h + p["bo"])
        f = sig(p["Wf"] * x + p["Vf"] * h + p["bf"])
        i = sig(p["Wi"] * x + p["Vi"] * h + p["bi"])
        g = math.tanh(p["Wg"] * x + p["Vg"] * h + p["bg"])
        c = f * c + i * g
        h = o * math.tanh(c)
        hs.append(h)
        cs.append(c)
    return hs, cs


def decompose(p, xs, q, r):
    beta = gamma = bc = gc = 0.0
    trail = []
    for t, x in enumerate(xs, start=1):
        inside = q <= t <= r
        # term order: input, phrase, other, bias
        Lf = lin([p["Wf"] * x, p["Vf"] * beta, p["Vf"] * gamma, p["bf"]], sig, bias=3)
        Li = lin([p["Wi"] * x, p["Vi"] * beta, p["Vi"] * gamma, p["bi"]], sig, bias=3)
        Lg = lin([p["Wg"] * x, p["Vg"] * beta, p["Vg"] * gamma, p["bg"]], math.tanh, bias=3)
        fx, fb, fgm, fbias = Lf
        ix, ib, igm, ibias = Li
        gx, gb, ggm, gbias = Lg
        f_t = sum(Lf)
        i_t = sum(Li)
        g_t = sum(Lg)

        beta_f = (fb + fbias + (fx if inside else 0.0)) * bc
        gamma_f = f_t * gc + (fgm + (0.0 if inside else fx)) * bc

        x_terms = ix * (gx + gb + gbias) + (ibias + ib) * gx
        beta_u = ib * (gb + gbias) + ibias * gb + (x_terms if inside else 0.0)
        gamma_u = igm * g_t + i_t * ggm - igm * ggm + ibias * gbias + (0.0 if inside else x_terms)

        bc, gc = beta_f + beta_u, gamma_f + gamma_u
        o_t = sig(p["Wo"] * x + p["Vo"] * (beta + gamma) + p["bo"])
        Lb, Lr = lin([bc, gc], math.tanh)
        beta, gamma = o_t * Lb, o_t * Lr
        trail.append({"beta": beta, "gamma": gamma, "beta_c": bc, "gamma_c": gc})
    return trail


def main():
    hs, cs = forward(PARAMS, XS)
    cases = []
    for q, r in SPANS:
        trail = decompose(PARAMS, XS, q, r)
        bT = trail[-1]["beta"]
        cases.append({
            "span": [q, r],
            "trail": trail,
            "beta_logits": [w * bT for w in PARAMS["Wsoft"]],
            "scalar_score": PARAMS["Wsoft"][1] * bT - PARAMS["Wsoft"][0] * bT,
        })  # fmt: skip
    doc = {"params": PARAMS, "xs": XS, "h": hs, "c": cs, "cases": cases}
    path = Path(__file__).with_name("scalar_cd.json")
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
