"""Pure-Python traversal kernel.

Mirrors the compiled extension in ``_traversal.pyx`` operation for
operation; ``rulehop.traversal`` picks whichever is importable. Both
operate on the flat adjacency arrays built by the graph store:

* edges are identified by their index into ``head_idx``/``tail_idx``/
  ``rel_id``/``from_ord``/``to_ord``;
* ``out_edge``/``in_edge`` are CSR-ordered edge-index lists (sorted by
  relation id, neighbor index, valid_from, edge index) delimited by
  ``out_start``/``in_start``;
* ``pub_ord`` holds a node's publication ordinal (``NEVER_ORD`` when the
  node is visible at any date);
* ``edge_mask``/``node_mask`` are optional uint8 suppression overlays
  (1 = suppressed) used by counterfactual snapshots.

An edge is visible at ``as_of`` iff neither endpoint nor the edge itself
is suppressed, both endpoints' publication dates are <= as_of, and
``from_ord <= as_of <= to_ord`` (the last two checks only when
``check_time`` is set).
"""

from __future__ import annotations


def _edge_ok(adj, e: int, as_of: int, check_time: bool, edge_mask, node_mask) -> bool:
    if edge_mask is not None and edge_mask[e]:
        return False
    h = adj.head_idx[e]
    t = adj.tail_idx[e]
    if node_mask is not None and (node_mask[h] or node_mask[t]):
        return False
    if check_time:
        if adj.from_ord[e] > as_of or adj.to_ord[e] < as_of:
            return False
        if adj.pub_ord[h] > as_of or adj.pub_ord[t] > as_of:
            return False
    return True


def visible_out(adj, node: int, as_of: int, check_time: bool, edge_mask, node_mask) -> list[int]:
    out = []
    start = adj.out_start
    edges = adj.out_edge
    for k in range(start[node], start[node + 1]):
        e = edges[k]
        if _edge_ok(adj, e, as_of, check_time, edge_mask, node_mask):
            out.append(int(e))
    return out


def visible_in(adj, node: int, as_of: int, check_time: bool, edge_mask, node_mask) -> list[int]:
    out = []
    start = adj.in_start
    edges = adj.in_edge
    for k in range(start[node], start[node + 1]):
        e = edges[k]
        if _edge_ok(adj, e, as_of, check_time, edge_mask, node_mask):
            out.append(int(e))
    return out


def visible_degree(adj, node: int, as_of: int, check_time: bool, edge_mask, node_mask) -> int:
    count = 0
    for start, edges in ((adj.out_start, adj.out_edge), (adj.in_start, adj.in_edge)):
        for k in range(start[node], start[node + 1]):
            if _edge_ok(adj, edges[k], as_of, check_time, edge_mask, node_mask):
                count += 1
    return count


def rooted_relation_sequences(adj, root: int, as_of: int, max_len: int, edge_mask, node_mask) -> set:
    """Distinct relation-id sequences realized by simple forward paths from root.

    Sequences of length 1..max_len, every edge valid as-of; a node is never
    revisited within one path. Temporal checks are always on here: mining is
    as-of by definition.
    """
    found: set = set()
    if node_mask is not None and node_mask[root]:
        return found
    if adj.pub_ord[root] > as_of:
        return found
    start = adj.out_start
    edges = adj.out_edge
    seq: list[int] = []
    visited = {root}

    def _walk(node: int) -> None:
        for k in range(start[node], start[node + 1]):
            e = edges[k]
            if not _edge_ok(adj, e, as_of, True, edge_mask, node_mask):
                continue
            tail = int(adj.tail_idx[e])
            if tail in visited:
                continue
            seq.append(int(adj.rel_id[e]))
            found.add(tuple(seq))
            if len(seq) < max_len:
                visited.add(tail)
                _walk(tail)
                visited.remove(tail)
            seq.pop()

    _walk(root)
    return found
