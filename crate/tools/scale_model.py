#!/usr/bin/env python3
"""Writes fixtures/suite200.fm, a synthetic 200-feature diagram, and prints
its exact variant count computed independently of the Rust code.

The count conditions on every feature that appears in a cross-tree
constraint and runs a tree recurrence with those features forced.

    python3 tools/scale_model.py [out.fm]
"""
import itertools
import random
import sys

AREAS = ["Editor", "Viewer", "Network", "Storage", "Print", "Help", "Locale",
         "Theme", "Plugins", "Access", "Search", "Sync"]
TARGET = 200


class Node:
    def __init__(self, name):
        self.name = name
        self.groups = []  # (kind, [(mandatory, Node)]) kind in and/or/alt


def build(rng):
    root = Node("Suite")
    count = 1
    names = iter(range(10_000))
    area_nodes = []
    members = []
    for area in AREAS:
        a = Node(area)
        members.append((area in ("Editor", "Viewer", "Locale"), a))
        area_nodes.append(a)
        count += 1
    root.groups.append(("and", members))
    frontier = list(area_nodes)
    while count < TARGET:
        parent = rng.choice(frontier)
        kind = rng.choices(["and", "or", "alt"], weights=[2, 1, 6])[0]
        size = min(rng.randint(2, 4), TARGET - count)
        if size < 2:
            kind = "and"
        group = []
        for _ in range(size):
            n = Node(f"{parent.name.rstrip('0123456789_')}{next(names)}")
            mandatory = kind == "and" and rng.random() < 0.7
            group.append((mandatory, n))
            frontier.append(n)
            count += 1
        parent.groups.append((kind, group))
    return root


def walk(n):
    yield n
    for _, g in n.groups:
        for _, c in g:
            yield from walk(c)


def render(n, depth, out, mandatory=None):
    pad = "  " * depth
    head = {None: "", True: "mandatory ", False: "optional "}[mandatory]
    if not n.groups:
        out.append(f"{pad}{head}{n.name}")
        return
    out.append(f"{pad}feature {n.name} {{" if depth == 0 else f"{pad}{head}{n.name} {{")
    for kind, g in n.groups:
        if kind == "and":
            for m, c in g:
                render(c, depth + 1, out, m)
        else:
            out.append(f"{pad}  {'or' if kind == 'or' else 'alternative'} {{")
            for _, c in g:
                render(c, depth + 2, out)
            out.append(f"{pad}  }}")
    out.append(f"{pad}}}")


def count(n, forced):
    """(configs with n selected, configs with n deselected) for n's subtree."""
    sel = 0 if forced.get(n.name) is False else 1
    unsel = 0 if forced.get(n.name) is True else 1
    for kind, g in n.groups:
        parts = [count(c, forced) for _, c in g]
        unsel *= all(u for _, u in parts)  # a forced-on descendant needs n on
        if kind == "and":
            v = 1
            for (m, _), (s, u) in zip(g, parts):
                v *= s if m else s + u
        elif kind == "or":
            every, none = 1, 1
            for s, u in parts:
                every *= s + u
                none *= u
            v = every - none
        else:
            v = 0
            for i, (s, _) in enumerate(parts):
                term = s
                for j, (_, u) in enumerate(parts):
                    if j != i:
                        term *= u
                v += term
        sel *= v
    return sel, 1 if unsel else 0


def main():
    rng = random.Random(20260317)
    root = build(rng)
    feats = list(walk(root))
    leaves = [f.name for f in feats if not f.groups]
    picks = rng.sample(leaves, 8)
    constraints = [("requires", picks[0], picks[1]), ("requires", picks[2], picks[3]),
                   ("excludes", picks[4], picks[5]), ("excludes", picks[6], picks[7])]
    involved = sorted({x for _, a, b in constraints for x in (a, b)})
    total = 0
    for values in itertools.product([False, True], repeat=len(involved)):
        forced = dict(zip(involved, values))
        ok = all((not forced[a] or forced[b]) if k == "requires" else not (forced[a] and forced[b])
                 for k, a, b in constraints)
        if ok:
            total += count(root, forced)[0]
    out = [f"# Synthetic {len(feats)}-feature diagram for scale checks.",
           f"# Generated by tools/scale_model.py; exact count {total}.", ""]
    render(root, 0, out)
    out.append("")
    for k, a, b in constraints:
        out.append(f"requires {a} -> {b}" if k == "requires" else f"excludes {a} {b}")
    path = sys.argv[1] if len(sys.argv) > 1 else "fixtures/suite200.fm"
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
    print(len(feats), total, f"{float(total):.3e}")


if __name__ == "__main__":
    main()
