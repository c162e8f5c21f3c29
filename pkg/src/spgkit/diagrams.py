"""Fixed-width two-row diagrams of doubled sets."""

from __future__ import annotations

from .core import SymbolUniverse, iter_bits, project_mask

CELL = 5


def _cell(text: str) -> str:
    return text.rjust(CELL)


def two_row(universe: SymbolUniverse, S: int, title: str, reference: int = 0,
            columns: int | None = None) -> str:
    """Render doubled set ``S``; cells of ``reference`` missing from S appear in brackets."""
    if not universe.is_doubled:
        raise ValueError("two-row diagrams need a doubled universe")
    base = universe.base()
    cols = columns if columns is not None else project_mask(S | reference)
    split = base.nA if base.is_bipartite else None
    order = list(iter_bits(cols))
    head, rows = [], {1: [], 2: []}
    for pos, i in enumerate(order):
        if split is not None and pos and order[pos - 1] < split <= i:
            head.append(" |")
            for r in rows:
                rows[r].append(" |")
        name = str(base.serialize_symbol(i))
        head.append(_cell(name))
        for r in (1, 2):
            bit = 1 << (2 * i + r - 1)
            if S & bit:
                rows[r].append(_cell(name))
            elif reference & bit:
                rows[r].append(_cell(f"[{name}]"))
            else:
                rows[r].append(_cell("."))
    lines = [title, "      " + "".join(head)]
    for r in (1, 2):
        lines.append(f"  {r}:  " + "".join(rows[r]))
    return "\n".join(lines)


def diagram_pipeline1(result) -> str:
    u = result.Z.universe
    blocks = []
    for r in result.records:
        blocks.append(two_row(u, r.I, f"I_{r.k} (layer {r.k}), U = {u.base().serialize_mask(r.U)}"))
        for a, R in sorted(r.resemblers().items()):
            where = result.Y.layer_of.get(R)
            tag = f"layer {where}, removed" if where else "absent"
            blocks.append(two_row(u, R, f"R_{r.k}^{a + 1} ({tag})", reference=r.I))
    return "\n\n".join(blocks) + "\n"


def diagram_pipeline2(result) -> str:
    u = result.Z.universe
    base = u.base()
    blocks = []
    for r in result.records:
        name = f"I_{r.j},{r.k}" + (" (end of section)" if not r.is_mid else "")
        blocks.append(two_row(u, r.I, f"{name}, U = {base.serialize_mask(r.U)}"))
        for kind, bit, R in r.resemblers():
            where = result.Y.layer_of.get(R)
            tag = f"layer {where}, removed" if where else "absent"
            label = base.serialize_symbol(bit)
            blocks.append(two_row(u, R, f"R_{r.j},{r.k}^{label} type {kind} ({tag})", reference=r.I))
    return "\n\n".join(blocks) + "\n"
