"""Model files: a versioned little-endian binary format and an equivalent text form.

Binary layout (all integers unsigned 32-bit little-endian unless noted)::

    magic         6 bytes  b"CDLSTM"
    version       u32      currently 1
    d1, d2, C     u32 x 3
    vocab_size    u32
    oov_seed      u64
    vocab         vocab_size x (u32 byte length, UTF-8 bytes)
    arrays        embeddings, Wo, Wf, Wi, Wg, Vo, Vf, Vi, Vg, bo, bf, bi, bg, Wsoft, bsoft
                  each: u32 ndim, ndim x u32 dims, row-major float64 ('<f8')

Text layout, one item per line::

    cdlstm-model 1
    d1 <int>
    d2 <int>
    classes <int>
    vocab_size <int>
    oov_seed <int>
    vocab
    <token>            (vocab_size lines)
    <name> <dims...>   (then one line per matrix row, values separated by spaces)
    ...

Text floats use ``repr`` so a text round trip is bit-exact as well.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .lstm import PARAM_NAMES, LstmModel, LstmParams, param_shapes

MAGIC = b"CDLSTM"
TEXT_MAGIC = "cdlstm-model"
VERSION = 1
ARRAY_ORDER = ("embeddings",) + PARAM_NAMES
TEXT_SUFFIXES = (".txt", ".model.txt")


class ModelFileError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"model file field {field!r}: {message}")
        self.field = field


def _expected(d1: int, d2: int, C: int, V: int) -> dict[str, tuple[int, ...]]:
    return {"embeddings": (V, d1), **param_shapes(d1, d2, C)}


def _build(d1, d2, C, vocab, oov_seed, arrays) -> LstmModel:
    try:
        params = LstmParams(**{k: arrays[k] for k in PARAM_NAMES})
    except ValueError as exc:
        raise ModelFileError("params", str(exc)) from None
    return LstmModel(params, list(vocab), arrays["embeddings"], oov_seed)


# ---------------------------------------------------------------------------
# binary


def to_bytes(model: LstmModel) -> bytes:
    p = model.params
    out = [MAGIC, struct.pack("<IIIII", VERSION, p.d1, p.d2, p.n_classes, len(model.vocab)), struct.pack("<Q", model.oov_seed)]
    for tok in model.vocab:
        b = tok.encode("utf-8")
        out.append(struct.pack("<I", len(b)) + b)
    arrays = {"embeddings": model.embeddings, **p.as_dict()}
    for name in ARRAY_ORDER:
        a = np.ascontiguousarray(arrays[name], dtype="<f8")
        out.append(struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape))
        out.append(a.tobytes(order="C"))
    return b"".join(out)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, field: str) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFileError(field, f"file truncated (needed {n} bytes at offset {self.pos})")
        b = self.data[self.pos : self.pos + n]
        self.pos += n
        return b

    def unpack(self, fmt: str, field: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), field))


def from_bytes(data: bytes) -> LstmModel:
    rd = _Reader(data)
    if rd.take(len(MAGIC), "magic") != MAGIC:
        raise ModelFileError("magic", "not a cdlstm binary model file")
    (version,) = rd.unpack("<I", "version")
    if version != VERSION:
        raise ModelFileError("version", f"unsupported version {version} (expected {VERSION})")
    d1, d2, C, V = rd.unpack("<IIII", "header")
    for name, v in (("d1", d1), ("d2", d2), ("classes", C)):
        if v < 1:
            raise ModelFileError(name, "must be at least 1")
    (oov_seed,) = rd.unpack("<Q", "oov_seed")
    vocab = []
    for k in range(V):
        (n,) = rd.unpack("<I", f"vocab[{k}]")
        try:
            vocab.append(rd.take(n, f"vocab[{k}]").decode("utf-8"))
        except UnicodeDecodeError:
            raise ModelFileError(f"vocab[{k}]", "token is not valid UTF-8") from None
    expected = _expected(d1, d2, C, V)
    arrays = {}
    for name in ARRAY_ORDER:
        (ndim,) = rd.unpack("<I", name)
        shape = rd.unpack(f"<{ndim}I", name)
        if tuple(shape) != expected[name]:
            raise ModelFileError(name, f"declared shape {tuple(shape)} does not match header shape {expected[name]}")
        count = int(np.prod(shape)) if shape else 1
        raw = rd.take(8 * count, name)
        a = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
        if not np.all(np.isfinite(a)):
            raise ModelFileError(name, "contains non-finite values")
        arrays[name] = a
    if rd.pos != len(data):
        raise ModelFileError("trailer", f"{len(data) - rd.pos} unexpected bytes after the last array")
    return _build(d1, d2, C, vocab, oov_seed, arrays)


# ---------------------------------------------------------------------------
# text


def to_text(model: LstmModel) -> str:
    p = model.params
    lines = [
        f"{TEXT_MAGIC} {VERSION}",
        f"d1 {p.d1}",
        f"d2 {p.d2}",
        f"classes {p.n_classes}",
        f"vocab_size {len(model.vocab)}",
        f"oov_seed {model.oov_seed}",
        "vocab",
        *model.vocab,
    ]
    arrays = {"embeddings": model.embeddings, **p.as_dict()}
    for name in ARRAY_ORDER:
        a = np.asarray(arrays[name], dtype=np.float64)
        lines.append(" ".join([name, *map(str, a.shape)]))
        for row in a if a.ndim == 2 else [a]:
            lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> LstmModel:
    lines = text.splitlines()
    pos = 0

    def next_line(field: str) -> str:
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            raise ModelFileError(field, "unexpected end of file")
        line = lines[pos]
        pos += 1
        return line.strip()

    def keyed_int(key: str) -> int:
        parts = next_line(key).split()
        if len(parts) != 2 or parts[0] != key:
            raise ModelFileError(key, f"expected '{key} <int>', found {' '.join(parts)!r}")
        try:
            return int(parts[1])
        except ValueError:
            raise ModelFileError(key, f"{parts[1]!r} is not an integer") from None

    head = next_line("magic").split()
    if not head or head[0] != TEXT_MAGIC:
        raise ModelFileError("magic", f"first line must start with {TEXT_MAGIC!r}")
    if len(head) != 2 or head[1] != str(VERSION):
        raise ModelFileError("version", f"unsupported version {' '.join(head[1:])!r} (expected {VERSION})")
    d1, d2, C, V = (keyed_int(k) for k in ("d1", "d2", "classes", "vocab_size"))
    for name, v in (("d1", d1), ("d2", d2), ("classes", C)):
        if v < 1:
            raise ModelFileError(name, "must be at least 1")
    if V < 0:
        raise ModelFileError("vocab_size", "must be non-negative")
    oov_seed = keyed_int("oov_seed")
    if next_line("vocab") != "vocab":
        raise ModelFileError("vocab", "expected the 'vocab' marker line")
    vocab = [next_line(f"vocab[{k}]") for k in range(V)]
    for k, tok in enumerate(vocab):
        if len(tok.split()) != 1:
            raise ModelFileError(f"vocab[{k}]", f"token {tok!r} contains whitespace")
    expected = _expected(d1, d2, C, V)
    arrays = {}
    for name in ARRAY_ORDER:
        parts = next_line(name).split()
        if not parts or parts[0] != name:
            raise ModelFileError(name, f"expected the {name!r} header line, found {' '.join(parts[:1])!r}")
        try:
            shape = tuple(int(v) for v in parts[1:])
        except ValueError:
            raise ModelFileError(name, "shape entries must be integers") from None
        if shape != expected[name]:
            raise ModelFileError(name, f"declared shape {shape} does not match header shape {expected[name]}")
        rows = shape[0] if len(shape) == 2 else 1
        width = shape[1] if len(shape) == 2 else shape[0]
        data = []
        for k in range(rows):
            vals = next_line(f"{name}[{k}]").split()
            if len(vals) != width:
                raise ModelFileError(f"{name}[{k}]", f"expected {width} values, found {len(vals)}")
            try:
                data.append([float(v) for v in vals])
            except ValueError:
                raise ModelFileError(f"{name}[{k}]", "non-numeric value") from None
        a = np.array(data, dtype=np.float64).reshape(shape)
        if not np.all(np.isfinite(a)):
            raise ModelFileError(name, "contains non-finite values")
        arrays[name] = a
    if any(ln.strip() for ln in lines[pos:]):
        raise ModelFileError("trailer", "unexpected content after the last array")
    return _build(d1, d2, C, vocab, oov_seed, arrays)


# ---------------------------------------------------------------------------
# files


def _is_text_path(path) -> bool:
    return str(path).endswith(TEXT_SUFFIXES)


def save_model(model: LstmModel, path, fmt: str | None = None) -> None:
    """Write ``model``; ``fmt`` is "binary" or "text" (default: by suffix, ``.txt`` is text)."""
    fmt = fmt or ("text" if _is_text_path(path) else "binary")
    if fmt == "text":
        Path(path).write_text(to_text(model), encoding="utf-8")
    elif fmt == "binary":
        Path(path).write_bytes(to_bytes(model))
    else:
        raise ValueError(f"unknown model file format {fmt!r}")


def load_model(path) -> LstmModel:
    """Read a binary or text model file (detected from its first bytes)."""
    data = Path(path).read_bytes()
    if data.startswith(MAGIC):
        return from_bytes(data)
    if data.lstrip().startswith(TEXT_MAGIC.encode()):
        try:
            return from_text(data.decode("utf-8"))
        except UnicodeDecodeError:
            raise ModelFileError("encoding", "text model file is not valid UTF-8") from None
    raise ModelFileError("magic", f"{path} is not a cdlstm model file")


def save_params(params: LstmParams, path, fmt: str | None = None) -> None:
    """Write bare parameters (an empty vocabulary and embedding table)."""
    save_model(LstmModel(params, [], np.zeros((0, params.d1))), path, fmt)


def load_params(path) -> LstmParams:
    return load_model(path).params
