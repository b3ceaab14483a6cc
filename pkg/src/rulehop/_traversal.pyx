# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled traversal kernel; semantics identical to ``_traversal_py``.

Memoryview bundles are cached per adjacency container (weakly keyed) so
the per-call overhead stays below the pure-Python attribute walk.
"""

import weakref

import numpy as np

cimport numpy as cnp

cnp.import_array()

_VIEWS: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()
_EMPTY_U8 = np.zeros(1, dtype=np.uint8)


cdef class _View:
    cdef const cnp.int32_t[::1] head_idx, tail_idx, rel_id, out_edge, in_edge
    cdef const cnp.int64_t[::1] from_ord, to_ord, pub_ord, out_start, in_start

    def __cinit__(self, adj):
        self.head_idx = adj.head_idx
        self.tail_idx = adj.tail_idx
        self.rel_id = adj.rel_id
        self.from_ord = adj.from_ord
        self.to_ord = adj.to_ord
        self.pub_ord = adj.pub_ord
        self.out_start = adj.out_start
        self.out_edge = adj.out_edge
        self.in_start = adj.in_start
        self.in_edge = adj.in_edge


cdef _View _view_of(adj):
    view = _VIEWS.get(adj)
    if view is None:
        view = _View(adj)
        _VIEWS[adj] = view
    return view


cdef inline bint _edge_ok(_View v,
                          Py_ssize_t e,
                          cnp.int64_t as_of,
                          bint check_time,
                          const cnp.uint8_t[::1] edge_mask,
                          bint has_edge_mask,
                          const cnp.uint8_t[::1] node_mask,
                          bint has_node_mask) noexcept nogil:
    cdef Py_ssize_t h, t
    if has_edge_mask and edge_mask[e]:
        return False
    h = v.head_idx[e]
    t = v.tail_idx[e]
    if has_node_mask and (node_mask[h] or node_mask[t]):
        return False
    if check_time:
        if v.from_ord[e] > as_of or v.to_ord[e] < as_of:
            return False
        if v.pub_ord[h] > as_of or v.pub_ord[t] > as_of:
            return False
    return True


def visible_out(adj, Py_ssize_t node, cnp.int64_t as_of, bint check_time, edge_mask, node_mask):
    cdef _View v = _view_of(adj)
    cdef bint has_em = edge_mask is not None
    cdef bint has_nm = node_mask is not None
    cdef const cnp.uint8_t[::1] em = edge_mask if has_em else _EMPTY_U8
    cdef const cnp.uint8_t[::1] nm = node_mask if has_nm else _EMPTY_U8
    cdef Py_ssize_t k, e
    out = []
    for k in range(v.out_start[node], v.out_start[node + 1]):
        e = v.out_edge[k]
        if _edge_ok(v, e, as_of, check_time, em, has_em, nm, has_nm):
            out.append(e)
    return out


def visible_in(adj, Py_ssize_t node, cnp.int64_t as_of, bint check_time, edge_mask, node_mask):
    cdef _View v = _view_of(adj)
    cdef bint has_em = edge_mask is not None
    cdef bint has_nm = node_mask is not None
    cdef const cnp.uint8_t[::1] em = edge_mask if has_em else _EMPTY_U8
    cdef const cnp.uint8_t[::1] nm = node_mask if has_nm else _EMPTY_U8
    cdef Py_ssize_t k, e
    out = []
    for k in range(v.in_start[node], v.in_start[node + 1]):
        e = v.in_edge[k]
        if _edge_ok(v, e, as_of, check_time, em, has_em, nm, has_nm):
            out.append(e)
    return out


def visible_degree(adj, Py_ssize_t node, cnp.int64_t as_of, bint check_time, edge_mask, node_mask):
    cdef _View v = _view_of(adj)
    cdef bint has_em = edge_mask is not None
    cdef bint has_nm = node_mask is not None
    cdef const cnp.uint8_t[::1] em = edge_mask if has_em else _EMPTY_U8
    cdef const cnp.uint8_t[::1] nm = node_mask if has_nm else _EMPTY_U8
    cdef Py_ssize_t k
    cdef long count = 0
    with nogil:
        for k in range(v.out_start[node], v.out_start[node + 1]):
            if _edge_ok(v, v.out_edge[k], as_of, check_time, em, has_em, nm, has_nm):
                count += 1
        for k in range(v.in_start[node], v.in_start[node + 1]):
            if _edge_ok(v, v.in_edge[k], as_of, check_time, em, has_em, nm, has_nm):
                count += 1
    return count


def rooted_relation_sequences(adj, Py_ssize_t root, cnp.int64_t as_of, int max_len, edge_mask, node_mask):
    """Distinct relation-id sequences of simple forward paths from root (length 1..max_len)."""
    cdef _View v = _view_of(adj)
    cdef bint has_em = edge_mask is not None
    cdef bint has_nm = node_mask is not None
    cdef const cnp.uint8_t[::1] em = edge_mask if has_em else _EMPTY_U8
    cdef const cnp.uint8_t[::1] nm = node_mask if has_nm else _EMPTY_U8

    found = set()
    if has_nm and nm[root]:
        return found
    if v.pub_ord[root] > as_of:
        return found
    if max_len < 1:
        return found

    cdef Py_ssize_t n_nodes = v.out_start.shape[0] - 1
    cdef cnp.uint8_t[::1] visited = np.zeros(n_nodes, dtype=np.uint8)
    # Per-depth DFS state: cursor into the CSR slice plus the node it walks.
    cdef cnp.int64_t[::1] cursor = np.zeros(max_len + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] stop = np.zeros(max_len + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] node_at = np.zeros(max_len + 1, dtype=np.int64)
    cdef cnp.int32_t[::1] seq = np.zeros(max_len, dtype=np.int32)
    cdef int depth = 0
    cdef Py_ssize_t e, tail, k

    visited[root] = 1
    node_at[0] = root
    cursor[0] = v.out_start[root]
    stop[0] = v.out_start[root + 1]

    while depth >= 0:
        if cursor[depth] >= stop[depth]:
            visited[node_at[depth]] = 0
            depth -= 1
            continue
        k = cursor[depth]
        cursor[depth] += 1
        e = v.out_edge[k]
        if not _edge_ok(v, e, as_of, True, em, has_em, nm, has_nm):
            continue
        tail = v.tail_idx[e]
        if visited[tail]:
            continue
        seq[depth] = v.rel_id[e]
        found.add(tuple([seq[i] for i in range(depth + 1)]))
        if depth + 1 < max_len:
            depth += 1
            visited[tail] = 1
            node_at[depth] = tail
            cursor[depth] = v.out_start[tail]
            stop[depth] = v.out_start[tail + 1]
    return found
