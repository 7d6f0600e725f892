"""Compiled CART kernels.

Trees are stored as parallel node arrays in pre-order.  ``feature[k] == -1``
marks a leaf whose payload lives in ``value[k]`` (class code in column 0 for
classifiers, mean x/y for 2D regressors).
"""

import numpy as np
from numba import njit

# Relative slack when comparing impurities, so that splits that are equal in
# exact arithmetic tie regardless of summation order.
IMPURITY_TOL = 1e-9


@njit(cache=True)
def _parent_gini(codes, idx, start, end, n_classes):
    counts = np.zeros(n_classes, dtype=np.float64)
    for i in range(start, end):
        counts[codes[idx[i]]] += 1.0
    n = end - start
    g = 1.0
    for c in range(n_classes):
        p = counts[c] / n
        g -= p * p
    return g, counts


@njit(cache=True)
def _parent_var(targets, idx, start, end):
    n = end - start
    mx = 0.0
    my = 0.0
    for i in range(start, end):
        mx += targets[idx[i], 0]
        my += targets[idx[i], 1]
    mx /= n
    my /= n
    v = 0.0
    for i in range(start, end):
        dx = targets[idx[i], 0] - mx
        dy = targets[idx[i], 1] - my
        v += dx * dx + dy * dy
    return v / n, mx, my


@njit(cache=True)
def _is_pure(codes, targets, idx, start, end, is_clf):
    a = idx[start]
    for i in range(start + 1, end):
        b = idx[i]
        if is_clf:
            if codes[b] != codes[a]:
                return False
        else:
            if targets[b, 0] != targets[a, 0] or targets[b, 1] != targets[a, 1]:
                return False
    return True


@njit(cache=True)
def _best_split(X, codes, targets, idx, start, end, feats, is_clf, n_classes, min_leaf, parent_imp, mx, my, tol):
    ns = end - start
    best_imp = np.inf
    best_f = -1
    best_thr = 0.0
    seg = idx[start:end]
    total = np.zeros(n_classes, dtype=np.float64)
    if is_clf:
        for i in range(ns):
            total[codes[seg[i]]] += 1.0
    sx_tot = 0.0
    sy_tot = 0.0
    sxx_tot = 0.0
    syy_tot = 0.0
    if not is_clf:
        for i in range(ns):
            dx = targets[seg[i], 0] - mx
            dy = targets[seg[i], 1] - my
            sx_tot += dx
            sy_tot += dy
            sxx_tot += dx * dx
            syy_tot += dy * dy
    left = np.zeros(n_classes, dtype=np.float64)
    vals = np.empty(ns, dtype=np.float64)
    for fi in range(feats.shape[0]):
        f = feats[fi]
        for i in range(ns):
            vals[i] = X[seg[i], f]
        order = np.argsort(vals, kind="mergesort")
        left[:] = 0.0
        sx = 0.0
        sy = 0.0
        sxx = 0.0
        syy = 0.0
        for i in range(ns - 1):
            s = seg[order[i]]
            if is_clf:
                left[codes[s]] += 1.0
            else:
                dx = targets[s, 0] - mx
                dy = targets[s, 1] - my
                sx += dx
                sy += dy
                sxx += dx * dx
                syy += dy * dy
            v = vals[order[i]]
            vn = vals[order[i + 1]]
            if v == vn:
                continue
            nl = i + 1
            nr = ns - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            if is_clf:
                gl = 1.0
                gr = 1.0
                for c in range(n_classes):
                    pl = left[c] / nl
                    pr = (total[c] - left[c]) / nr
                    gl -= pl * pl
                    gr -= pr * pr
                imp = (nl * gl + nr * gr) / ns
            else:
                sse_l = (sxx - sx * sx / nl) + (syy - sy * sy / nl)
                rx = sx_tot - sx
                ry = sy_tot - sy
                sse_r = ((sxx_tot - sxx) - rx * rx / nr) + ((syy_tot - syy) - ry * ry / nr)
                imp = (sse_l + sse_r) / ns
            if imp < best_imp - tol:
                best_imp = imp
                best_f = f
                thr = v + (vn - v) / 2.0
                if thr >= vn:
                    thr = v
                best_thr = thr
    return best_f, best_thr, best_imp


@njit(cache=True)
def fit_tree(X, codes, targets, is_clf, n_classes, sample_idx, feat_keys, n_feats, max_depth, min_leaf):
    """Grow one tree on rows ``sample_idx`` of ``X``.

    ``feat_keys[k]`` holds one uniform key per feature for node ``k``; the
    ``n_feats`` features with the smallest keys are the split candidates.
    """
    m = sample_idx.shape[0]
    p = X.shape[1]
    cap = 2 * m
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, 2), dtype=np.float64)

    idx = np.sort(sample_idx)
    # stack of (start, end, depth, parent, side)
    stack = np.empty((cap, 5), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = m
    stack[0, 2] = 0
    stack[0, 3] = -1
    stack[0, 4] = 0
    top = 1
    n_nodes = 0
    while top > 0:
        top -= 1
        start = stack[top, 0]
        end = stack[top, 1]
        depth = stack[top, 2]
        parent = stack[top, 3]
        side = stack[top, 4]
        k = n_nodes
        n_nodes += 1
        if parent >= 0:
            if side == 0:
                left[parent] = k
            else:
                right[parent] = k
        ns = end - start
        # leaf payload first, over the segment in ascending row order
        idx[start:end] = np.sort(idx[start:end])
        if is_clf:
            parent_imp, counts = _parent_gini(codes, idx, start, end, n_classes)
            best_c = 0
            for c in range(n_classes):
                if counts[c] > counts[best_c]:
                    best_c = c
            value[k, 0] = best_c
            mx = 0.0
            my = 0.0
        else:
            parent_imp, mx, my = _parent_var(targets, idx, start, end)
            sx = 0.0
            sy = 0.0
            for i in range(start, end):
                sx += targets[idx[i], 0]
                sy += targets[idx[i], 1]
            value[k, 0] = sx / ns
            value[k, 1] = sy / ns

        if _is_pure(codes, targets, idx, start, end, is_clf):
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue
        if ns < 2 * min_leaf:
            continue

        if n_feats >= p:
            feats = np.arange(p)
        else:
            feats = np.sort(np.argsort(feat_keys[k], kind="mergesort")[:n_feats])
        tol = IMPURITY_TOL * max(1.0, parent_imp)
        f, thr, imp = _best_split(
            X, codes, targets, idx, start, end, feats, is_clf, n_classes, min_leaf, parent_imp, mx, my, tol
        )
        if f < 0 or not (imp < parent_imp - tol):
            continue
        feature[k] = f
        threshold[k] = thr
        value[k, 0] = 0.0
        value[k, 1] = 0.0
        # partition: rows with X <= thr first, each side kept in row order
        seg = idx[start:end].copy()
        lo = start
        for i in range(ns):
            if X[seg[i], f] <= thr:
                idx[lo] = seg[i]
                lo += 1
        hi = lo
        for i in range(ns):
            if X[seg[i], f] > thr:
                idx[hi] = seg[i]
                hi += 1
        stack[top, 0] = lo
        stack[top, 1] = end
        stack[top, 2] = depth + 1
        stack[top, 3] = k
        stack[top, 4] = 1
        top += 1
        stack[top, 0] = start
        stack[top, 1] = lo
        stack[top, 2] = depth + 1
        stack[top, 3] = k
        stack[top, 4] = 0
        top += 1
    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
    )


@njit(cache=True)
def leaf_values(feature, threshold, left, right, value, roots, X):
    """Payload of the leaf reached by every row of ``X`` in every tree: ``(q, T, 2)``."""
    q = X.shape[0]
    t = roots.shape[0]
    out = np.empty((q, t, 2), dtype=np.float64)
    for r in range(q):
        for j in range(t):
            k = roots[j]
            while feature[k] >= 0:
                if X[r, feature[k]] <= threshold[k]:
                    k = left[k]
                else:
                    k = right[k]
            out[r, j, 0] = value[k, 0]
            out[r, j, 1] = value[k, 1]
    return out
