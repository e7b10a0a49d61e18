"""Line-based checkpoint files for box-search runs.

Layout (one record per line, floats written with ``repr`` so they round-trip
exactly)::

    wormcover-checkpoint 1
    threshold <float>
    epsilon_fp <float>
    min_box_width <float>
    domain <a1> <b1> ... <a5> <b5>
    constants <c1> ... <c5>
    iterations <int>
    retired <int>
    volume_sum <float>
    volume_comp <float>
    best_value <float>
    best_params <x1> <y1> <x2> <y2> <theta>
    elapsed <float>
    status <word>
    witness none | <a1> <b1> ... <a5> <b5>
    pending <count>
    box <depth> <a1> <b1> ... <a5> <b5>      (count lines, bottom of stack first)
    end <sha256 of every preceding line incl. newlines>

The file is written to a temporary sibling and renamed, so a crash mid-write
leaves the previous checkpoint intact.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

import numpy as np

from .bounds import LipschitzConstants

MAGIC = "wormcover-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    """Unreadable, truncated or inconsistent checkpoint file."""


def _flat(lo, hi) -> str:
    return " ".join(f"{float(a)!r} {float(b)!r}" for a, b in zip(lo, hi))


def checkpoint_save(state, path) -> Path:
    from .boxsearch import Box5  # noqa: F401  (import cycle guard)

    path = Path(path)
    lines = [
        f"{MAGIC} {VERSION}",
        f"threshold {state.threshold!r}",
        f"epsilon_fp {state.eps!r}",
        f"min_box_width {state.min_box_width!r}",
        f"domain {_flat(state.root.lo, state.root.hi)}",
        "constants " + " ".join(repr(float(c)) for c in state.consts.as_array()),
        f"iterations {state.iterations}",
        f"retired {state.retired}",
        f"volume_sum {state.volume_sum!r}",
        f"volume_comp {state.volume_comp!r}",
        f"best_value {state.best_value!r}",
        "best_params " + " ".join(repr(float(t)) for t in state.best_params),
        f"elapsed {state.elapsed!r}",
        f"status {state.status}",
        "witness " + ("none" if state.witness is None else _flat(state.witness.lo, state.witness.hi)),
        f"pending {state.pending}",
    ]
    for i in range(state.pending):
        lines.append(f"box {int(state.pending_depth[i])} "
                     f"{_flat(state.pending_lo[i], state.pending_hi[i])}")
    body = "".join(line + "\n" for line in lines)
    digest = hashlib.sha256(body.encode()).hexdigest()
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        fh.write(body)
        fh.write(f"end {digest}\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)
    return path


def _floats(tokens, n, what):
    if len(tokens) != n:
        raise CheckpointError(f"{what}: expected {n} numbers, got {len(tokens)}")
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise CheckpointError(f"{what}: {exc}") from None


def checkpoint_load(path):
    from .boxsearch import Box5, SearchState

    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    if not text.endswith("\n"):
        raise CheckpointError(f"{path}: truncated (no final newline)")
    lines = text.split("\n")[:-1]
    if not lines or not lines[0].startswith(MAGIC + " "):
        raise CheckpointError(f"{path}: not a wormcover checkpoint")
    if lines[0] != f"{MAGIC} {VERSION}":
        raise CheckpointError(f"{path}: unsupported checkpoint version {lines[0].split()[-1]!r}")
    last = lines[-1].split()
    if len(last) != 2 or last[0] != "end":
        raise CheckpointError(f"{path}: truncated (missing end record)")
    body = "".join(line + "\n" for line in lines[:-1])
    if hashlib.sha256(body.encode()).hexdigest() != last[1]:
        raise CheckpointError(f"{path}: checksum mismatch, file is corrupt")

    fields = {}
    boxes = []
    for lineno, line in enumerate(lines[1:-1], start=2):
        key, _, rest = line.partition(" ")
        if key == "box":
            boxes.append((lineno, rest.split()))
        elif key in fields:
            raise CheckpointError(f"{path}:{lineno}: duplicate field {key!r}")
        else:
            fields[key] = rest.split()
    need = ["threshold", "epsilon_fp", "min_box_width", "domain", "constants", "iterations",
            "retired", "volume_sum", "volume_comp", "best_value", "best_params", "elapsed",
            "status", "witness", "pending"]
    missing = [k for k in need if k not in fields]
    if missing:
        raise CheckpointError(f"{path}: missing fields {missing}")
    try:
        npend = int(fields["pending"][0])
        iterations = int(fields["iterations"][0])
        retired = int(fields["retired"][0])
    except (ValueError, IndexError) as exc:
        raise CheckpointError(f"{path}: bad counter: {exc}") from None
    if npend != len(boxes):
        raise CheckpointError(f"{path}: header promises {npend} boxes, found {len(boxes)}")

    dom = _floats(fields["domain"], 10, "domain")
    lo = np.zeros((npend, 5))
    hi = np.zeros((npend, 5))
    dep = np.zeros(npend, dtype=np.int64)
    for i, (lineno, toks) in enumerate(boxes):
        if len(toks) != 11:
            raise CheckpointError(f"{path}:{lineno}: box record needs 11 fields")
        try:
            dep[i] = int(toks[0])
        except ValueError:
            raise CheckpointError(f"{path}:{lineno}: bad depth {toks[0]!r}") from None
        v = _floats(toks[1:], 10, f"line {lineno}")
        lo[i] = v[0::2]
        hi[i] = v[1::2]
    wit = fields["witness"]
    witness = None
    if wit != ["none"]:
        w = _floats(wit, 10, "witness")
        witness = Box5(tuple(w[0::2]), tuple(w[1::2]))
    state = SearchState(
        root=Box5(tuple(dom[0::2]), tuple(dom[1::2])),
        threshold=_floats(fields["threshold"], 1, "threshold")[0],
        eps=_floats(fields["epsilon_fp"], 1, "epsilon_fp")[0],
        consts=LipschitzConstants(*_floats(fields["constants"], 5, "constants")),
        min_box_width=_floats(fields["min_box_width"], 1, "min_box_width")[0],
        pending_lo=lo, pending_hi=hi, pending_depth=dep,
        iterations=iterations, retired=retired,
        volume_sum=_floats(fields["volume_sum"], 1, "volume_sum")[0],
        volume_comp=_floats(fields["volume_comp"], 1, "volume_comp")[0],
        best_value=_floats(fields["best_value"], 1, "best_value")[0],
        best_params=tuple(_floats(fields["best_params"], 5, "best_params")),
        elapsed=_floats(fields["elapsed"], 1, "elapsed")[0],
        status=fields["status"][0] if fields["status"] else "running",
        witness=witness,
    )
    return state
