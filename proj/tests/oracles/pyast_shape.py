"""Reference tree shapes computed with CPython's own `ast` module.

Maps `ast` nodes onto the toolkit's node taxonomy and prints the same
indented shape format as `pytree::dump_shape`, so the C++ parser can be
checked against the reference grammar implementation. Spans that `ast`
does not record (comprehension, withitem, match_case) print as "L?".

usage: pyast_shape.py FILE...        one "== path" header per file
       pyast_shape.py --counts FILE  per-label node counts as JSON
"""
import ast
import json
import sys
from collections import Counter

TRANSPARENT = (ast.expr_context, ast.operator, ast.boolop, ast.cmpop, ast.unaryop)
FIRST_CLASS = {
    "Module", "ClassDef", "FunctionDef", "AsyncFunctionDef", "Assign", "Attribute",
    "Name", "Call", "ImportFrom", "Import", "Constant",
}


class Node:
    def __init__(self, label, name, span, children):
        self.label, self.name, self.span, self.children = label, name, span, children


def span_of(node):
    if hasattr(node, "lineno") and node.lineno is not None:
        return (node.lineno, node.end_lineno)
    return None


def union(*spans):
    spans = [s for s in spans if s]
    if not spans:
        return None
    return (min(s[0] for s in spans), max(s[1] for s in spans))


def pin(nodes, span):
    for n in nodes:
        if n.label not in ("comprehension", "withitem", "match_case"):
            n.span = span
        pin(n.children, span)
    return nodes


def conv_params(args):
    positional = args.posonlyargs + args.args
    defaults = [None] * (len(positional) - len(args.defaults)) + list(args.defaults)
    out = []
    for a, d in zip(positional, defaults):
        out.append(conv_param(a, d))
    if args.vararg:
        out.append(conv_param(args.vararg, None))
    for a, d in zip(args.kwonlyargs, args.kw_defaults):
        out.append(conv_param(a, d))
    if args.kwarg:
        out.append(conv_param(args.kwarg, None))
    return out


def conv_param(a, default):
    children = []
    if a.annotation is not None:
        children += conv(a.annotation)
    if default is not None:
        children += conv(default)
    span = union(span_of(a), *[c.span for c in children])
    return Node("Parameter", a.arg, span, children)


def fstring_fields(joined):
    out = []
    for v in joined.values:
        if isinstance(v, ast.FormattedValue):
            out += conv(v.value)
            if v.format_spec is not None:
                out += fstring_fields(v.format_spec)
    return out


def seq(nodes):
    out = []
    for n in nodes:
        if n is not None:
            out += conv(n)
    return out


def conv(node):
    """Returns a list of mapped nodes (transparent nodes map to none)."""
    if isinstance(node, TRANSPARENT):
        return []
    label = type(node).__name__
    name = None
    span = span_of(node)
    if isinstance(node, ast.Module):
        children = seq(node.body)
        span = None
    elif isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
        name = node.name
        children = seq(node.decorator_list) + conv_params(node.args) + seq([node.returns]) + seq(node.body)
        if node.decorator_list:
            span = (node.decorator_list[0].lineno, span[1])
    elif isinstance(node, ast.ClassDef):
        name = node.name
        children = seq(node.decorator_list) + seq(node.bases) + seq(node.keywords) + seq(node.body)
        if node.decorator_list:
            span = (node.decorator_list[0].lineno, span[1])
    elif isinstance(node, ast.Lambda):
        children = conv_params(node.args) + conv(node.body)
    elif isinstance(node, ast.IfExp):
        children = seq([node.body, node.test, node.orelse])
    elif isinstance(node, ast.Dict):
        children = []
        for k, v in zip(node.keys, node.values):
            children += seq([k, v])
    elif isinstance(node, ast.MatchMapping):
        children = []
        for k, p in zip(node.keys, node.patterns):
            children += seq([k, p])
    elif isinstance(node, ast.JoinedStr):
        children = pin(fstring_fields(node), span)
    elif isinstance(node, ast.Name):
        name = node.id
        children = []
    elif isinstance(node, ast.Attribute):
        name = node.attr
        children = conv(node.value)
    elif isinstance(node, ast.keyword):
        name = node.arg
        children = conv(node.value)
    elif isinstance(node, (ast.Import, ast.ImportFrom)):
        children = []
    else:
        children = []
        for field in node._fields:
            value = getattr(node, field)
            if isinstance(value, ast.AST):
                children += conv(value)
            elif isinstance(value, list):
                children += seq([v for v in value if isinstance(v, ast.AST)])
    if label in ("comprehension", "withitem", "match_case"):
        span = None
    return [Node(label, name, span, children)]


def dump(node, depth, out):
    text = "  " * depth + node.label
    if node.name is not None:
        text += " " + node.name
    if node.span is None:
        text += " L?"
    else:
        text += " L%d-%d" % node.span
    out.append(text)
    for c in node.children:
        dump(c, depth + 1, out)


def shape(path):
    with open(path, "rb") as f:
        source = f.read()
    tree = ast.parse(source)
    root = conv(tree)[0]
    lines = source.decode("utf-8").count("\n")
    if source and not source.endswith(b"\n"):
        lines += 1
    last = max([lines, 1] + [c.span[1] for c in root.children if c.span])
    root.span = (1, last)
    return root


def main(argv):
    if argv and argv[0] == "--counts":
        counts = Counter()

        def visit(n):
            counts[n.label] += 1
            for c in n.children:
                visit(c)

        visit(shape(argv[1]))
        print(json.dumps(dict(sorted(counts.items())), indent=2))
        return
    for path in argv:
        out = []
        dump(shape(path), 0, out)
        print("== " + path)
        print("\n".join(out))


if __name__ == "__main__":
    main(sys.argv[1:])
