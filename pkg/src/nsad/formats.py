"""JSON formats for programs, networks and results.

Rationals are written as JSON integers when integral and as "p/q" strings
otherwise, so files round-trip exactly.  Output is canonical (sorted keys,
fixed separators): serialize -> parse -> serialize is byte-identical.

Program files hold ``{"p", "q", "nodes"}``.  A node is
``{"op": kind, "args": [...], "const": c}`` or ``{"sub": ref, "args": [...]}``.
Subprogram references resolve through a sidecar ``<stem>.subs.json`` that
maps each ref to a file name (by default ``<stem>.<ref>.json``) in the same
directory.  Sidecars are resolved recursively.
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

from .errors import FormatError
from .ops import Op, make_op, to_fraction
from .program import Node, Program, build_program
from .relunet import ReluNetwork


def rat(value):
    """JSON-friendly exact value."""
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        return value
    return rat(to_fraction(value))


def parse_rat(value) -> Fraction:
    try:
        return to_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as err:
        raise FormatError(f"not a rational: {value!r}") from err


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise FormatError(f"invalid JSON: {err}") from None


# ---------------------------------------------------------------- programs

def _op_json(op: Op) -> dict:
    out = {"op": op.kind}
    if op.const is not None:
        out["const"] = rat(op.const)
    if op.name is not None:
        out["name"] = op.name
    return out


def program_to_dicts(program: Program) -> tuple:
    """``(main, subs)``: the main dict and a ref -> dict map of every nested program (shared ones once)."""
    subs: dict = {}
    refs: dict = {}

    def encode(prog: Program) -> dict:
        nodes = []
        for node in prog.nodes:
            if node.op is not None:
                entry = _op_json(node.op)
            else:
                key = node.sub
                if key not in refs:
                    ref = node.sub.name or f"sub{len(refs) + 1}"
                    while ref in subs:
                        ref = f"{ref}_{len(refs) + 1}"
                    refs[key] = ref
                    subs[ref] = None  # reserve the name before recursing
                    subs[ref] = encode(node.sub)
                entry = {"sub": refs[key]}
            entry["args"] = list(node.args)
            nodes.append(entry)
        out = {"p": prog.p, "q": prog.q, "nodes": nodes}
        if prog.name:
            out["name"] = prog.name
        return out

    main = encode(program)
    return main, subs


def program_from_dicts(main: dict, subs: Optional[dict] = None, _cache=None) -> Program:
    subs = subs or {}
    cache = {} if _cache is None else _cache
    try:
        p, q, raw_nodes = int(main["p"]), int(main.get("q", 1)), main["nodes"]
    except (KeyError, TypeError, ValueError) as err:
        raise FormatError(f"program JSON needs p, q and nodes: {err}") from None
    nodes = []
    for n, raw in enumerate(raw_nodes, start=p + 1):
        if not isinstance(raw, dict) or "args" not in raw:
            raise FormatError(f"node {n}: expected an object with args")
        args = tuple(int(a) for a in raw["args"])
        if "sub" in raw:
            ref = raw["sub"]
            if ref not in cache:
                if ref not in subs:
                    raise FormatError(f"node {n}: unknown subprogram reference {ref!r}")
                cache[ref] = program_from_dicts(subs[ref], subs, cache)
            nodes.append(Node(args, sub=cache[ref]))
            continue
        kind = raw.get("op")
        if not isinstance(kind, str):
            raise FormatError(f"node {n}: missing op")
        const = parse_rat(raw["const"]) if "const" in raw else None
        try:
            op = make_op(kind, arity=len(args) if args else None, const=const, name=raw.get("name"))
        except (ValueError, KeyError) as err:
            raise FormatError(f"node {n}: {err}") from None
        nodes.append(Node(args, op=op))
    return build_program(nodes, p, q, main.get("name"))


def program_to_json(program: Program) -> str:
    main, subs = program_to_dicts(program)
    if subs:
        main = dict(main, subs=subs)
    return dumps(main)


def program_from_json(text: str) -> Program:
    """Single-document form: nested programs inlined under a top-level ``subs`` key."""
    main = loads(text)
    if not isinstance(main, dict):
        raise FormatError("program JSON must be an object")
    return program_from_dicts(main, main.get("subs"))


def save_program(program: Program, path: Union[str, Path]) -> list:
    """Write the program and, when nested, its sidecar plus one file per subprogram. Returns written paths."""
    path = Path(path)
    main, subs = program_to_dicts(program)
    written = [path]
    path.write_text(dumps(main) + "\n")
    if subs:
        stem = path.name[:-5] if path.name.endswith(".json") else path.name
        table = {ref: f"{stem}.{ref}.json" for ref in subs}
        side = path.with_name(f"{stem}.subs.json")
        side.write_text(dumps(table) + "\n")
        written.append(side)
        for ref, body in subs.items():
            target = path.with_name(table[ref])
            target.write_text(dumps(body) + "\n")
            written.append(target)
    return written


def load_program(path: Union[str, Path]) -> Program:
    path = Path(path)
    try:
        main = loads(path.read_text())
    except OSError as err:
        raise FormatError(f"cannot read {path}: {err}") from None
    if not isinstance(main, dict):
        raise FormatError("program JSON must be an object")
    subs = dict(main.get("subs") or {})
    stem = path.name[:-5] if path.name.endswith(".json") else path.name
    side = path.with_name(f"{stem}.subs.json")
    if side.exists():
        for ref, fname in loads(side.read_text()).items():
            subs[ref] = loads(path.with_name(fname).read_text())
    return program_from_dicts(main, subs)


# ---------------------------------------------------------------- networks

def net_to_dict(net: ReluNetwork) -> dict:
    return {
        "L": net.L,
        "mats": [[[rat(v) for v in row] for row in m] for m in net.mats],
        "masks": [[int(b) for b in mk] for mk in net.masks],
    }


def net_from_dict(obj: dict) -> ReluNetwork:
    try:
        mats = [[[parse_rat(v) for v in row] for row in m] for m in obj["mats"]]
        masks = [[int(b) for b in mk] for mk in obj["masks"]]
    except (KeyError, TypeError) as err:
        raise FormatError(f"network JSON needs mats and masks: {err}") from None
    if any(b not in (0, 1) for mk in masks for b in mk):
        raise FormatError("mask entries must be 0 or 1")
    if "L" in obj and int(obj["L"]) != len(mats):
        raise FormatError(f"L={obj['L']} but {len(mats)} matrices given")
    return ReluNetwork(tuple(mats), tuple(masks))


def net_to_json(net: ReluNetwork) -> str:
    return dumps(net_to_dict(net))


def load_net(path: Union[str, Path]) -> ReluNetwork:
    try:
        return net_from_dict(loads(Path(path).read_text()))
    except OSError as err:
        raise FormatError(f"cannot read {path}: {err}") from None


def parse_vector(text: str) -> list:
    """Comma-separated floats or rationals such as ``1,-2.5,3/7``; exact Fractions."""
    if text is None or not text.strip():
        return []
    return [parse_rat(tok.strip()) for tok in text.split(",")]
