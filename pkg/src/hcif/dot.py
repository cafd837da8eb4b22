"""Graphviz export: one cluster per automaton and per hierarchy level."""

from __future__ import annotations

from .expr import FALSE, TRUE, format_expr
from .model import Automaton, Composition, Postfix


def _quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return '"' + escaped + '"'


class _Writer:
    def __init__(self):
        self.lines: list[str] = []
        self.counter = 0

    def fresh(self, prefix: str) -> str:
        self.counter += 1
        return f"{prefix}{self.counter}"

    def emit(self, depth: int, text: str) -> None:
        self.lines.append("  " * depth + text)

    def comp(self, p: Composition, depth: int) -> None:
        if isinstance(p, Automaton):
            self.automaton(p, depth)
        elif isinstance(p, Postfix):
            # an active substructure is drawn inside its parent's location
            self.automaton(p.parent, depth, active_sub=p.child)
        else:
            cid = self.fresh("cluster_par")
            sync = ", ".join(sorted(p.sync))
            self.emit(depth, f"subgraph {cid} {{")
            self.emit(depth + 1, f"label={_quote('||{' + sync + '}')}; style=dashed;")
            self.comp(p.left, depth + 1)
            self.comp(p.right, depth + 1)
            self.emit(depth, "}")

    def automaton(self, alpha: Automaton, depth: int, active_sub=None) -> None:
        cid = self.fresh("cluster_aut")
        self.emit(depth, f"subgraph {cid} {{")
        self.emit(depth + 1, f"label={_quote(alpha.name)}; style=rounded;")
        anchors: dict[str, tuple[str, str | None]] = {}
        for loc in alpha.locations:
            node = self.fresh("n")
            text = loc.name
            if loc.tcp != TRUE:
                text += "\n" + format_expr(loc.tcp)
            if loc.term != FALSE:
                text += "\nterm " + format_expr(loc.term)
            active = alpha.pinned == loc.name
            init = alpha.effective_init(loc.name)
            sub = loc.sub
            if active and active_sub is not None:
                sub = active_sub
            if sub is None:
                style = ", penwidth=2" if active else ""
                self.emit(depth + 1, f"{node} [label={_quote(text)}, shape=box, style=rounded{style}];")
                anchors[loc.name] = (node, None)
            else:
                lid = self.fresh("cluster_loc")
                self.emit(depth + 1, f"subgraph {lid} {{")
                self.emit(depth + 2, f"label={_quote(text)};")
                self.emit(depth + 2, f"{node} [shape=point, style=invis];")
                self.comp(sub, depth + 2)
                self.emit(depth + 1, "}")
                anchors[loc.name] = (node, lid)
            if init != FALSE:
                start = self.fresh("init")
                self.emit(depth + 1, f"{start} [shape=point];")
                attrs = [f"label={_quote('' if init == TRUE else format_expr(init))}"]
                if anchors[loc.name][1]:
                    attrs.append(f"lhead={anchors[loc.name][1]}")
                self.emit(depth + 1, f"{start} -> {node} [{', '.join(attrs)}];")
        for e in alpha.edges:
            src, src_cluster = anchors[e.source]
            dst, dst_cluster = anchors[e.target]
            text = f"{format_expr(e.guard)} : {e.action} : {format_expr(e.reset)}"
            attrs = [f"label={_quote(text)}"]
            if src_cluster:
                attrs.append(f"ltail={src_cluster}")
            if dst_cluster:
                attrs.append(f"lhead={dst_cluster}")
            self.emit(depth + 1, f"{src} -> {dst} [{', '.join(attrs)}];")
        self.emit(depth, "}")


def to_dot(p: Composition, name: str = "model") -> str:
    w = _Writer()
    w.emit(0, f"digraph {_quote(name)} {{")
    w.emit(1, "compound=true;")
    w.emit(1, 'node [fontname="Helvetica"]; edge [fontname="Helvetica"];')
    w.comp(p, 1)
    w.emit(0, "}")
    return "\n".join(w.lines) + "\n"
