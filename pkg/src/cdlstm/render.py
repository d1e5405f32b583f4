"""Heat maps of word scores: ANSI terminal output and static HTML."""

from __future__ import annotations

import html
from typing import Sequence

from .evaluation import LEGEND, bucket_edges, bucketize

# background colors for the five legend levels, very negative .. very positive
ANSI_BG = ("\x1b[48;5;160m", "\x1b[48;5;217m", "\x1b[48;5;252m", "\x1b[48;5;153m", "\x1b[48;5;27m")
ANSI_FG = ("\x1b[97m", "\x1b[30m", "\x1b[30m", "\x1b[30m", "\x1b[97m")
ANSI_RESET = "\x1b[0m"
HTML_COLORS = ("#c62828", "#f4a6a6", "#e0e0e0", "#a9cdf2", "#1e5aa8")
HTML_TEXT = ("#ffffff", "#000000", "#000000", "#000000", "#ffffff")


def fmt(x: float) -> str:
    """Six significant digits."""
    return f"{x:.6g}"


def ansi_row(tokens: Sequence[str], levels: Sequence[int]) -> str:
    return " ".join(f"{ANSI_BG[k]}{ANSI_FG[k]} {tok} {ANSI_RESET}" for tok, k in zip(tokens, levels))


def ansi_legend() -> str:
    return " ".join(f"{ANSI_BG[k]}{ANSI_FG[k]} {name} {ANSI_RESET}" for k, name in enumerate(LEGEND))


def render_ansi(tokens: Sequence[str], rows: dict[str, Sequence[float]], edges: dict | None = None) -> str:
    """One colored row per method, aligned by method name, then the legend.

    ``edges`` maps method to its (lo, hi) bucket edges; by default they
    come from that row's own scores.
    """
    edges = edges or {}
    width = max((len(m) for m in rows), default=0)
    lines = []
    for method, scores in rows.items():
        e = edges.get(method) or bucket_edges(scores)
        lines.append(f"{method:<{width}}  {ansi_row(tokens, bucketize(scores, e))}")
    lines.append(f"{'legend':<{width}}  {ansi_legend()}")
    return "\n".join(lines)


def _cell(tok: str, level: int, score: float) -> str:
    return (
        f'<td style="background:{HTML_COLORS[level]};color:{HTML_TEXT[level]};'
        f'padding:2px 6px;font-family:monospace" title="{html.escape(fmt(score))}">{html.escape(tok)}</td>'
    )


def render_html(tokens: Sequence[str], rows: dict[str, Sequence[float]], edges: dict | None = None, title: str = "Attribution heat map") -> str:
    """A self-contained static page (inline styles, no scripts)."""
    edges = edges or {}
    body = []
    for method, scores in rows.items():
        e = edges.get(method) or bucket_edges(scores)
        cells = "".join(_cell(t, k, s) for t, k, s in zip(tokens, bucketize(scores, e), scores))
        body.append(
            f'<tr><th style="text-align:left;padding-right:12px;font-family:sans-serif">{html.escape(method)}</th>{cells}</tr>'
        )
    legend = "".join(
        f'<td style="background:{HTML_COLORS[k]};color:{HTML_TEXT[k]};padding:2px 6px;font-family:sans-serif">{name}</td>'
        for k, name in enumerate(LEGEND)
    )
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
        f"<title>{html.escape(title)}</title></head><body>\n"
        f'<h1 style="font-family:sans-serif;font-size:1.2em">{html.escape(title)}</h1>\n'
        f'<table style="border-collapse:separate;border-spacing:2px">\n{chr(10).join(body)}\n</table>\n'
        f'<table style="margin-top:8px;border-spacing:2px"><tr><th style="font-family:sans-serif;padding-right:12px">legend</th>{legend}</tr></table>\n'
        "</body></html>\n"
    )
