"""Independent brute-force helpers shared by the tests."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from stratmanip.geometry import admissible_many


def grid_components(scene, chart, shape, wrap_axes=()):
    """Connected components of admissible grid points of a chart (face connectivity).

    Returns ``(labels, count, axes)`` with components merged across wrapped axes.
    """
    axes = [np.linspace(chart.lo[k], chart.hi[k], n) for k, n in enumerate(shape)]
    G = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(shape))
    ok = admissible_many(scene, chart.embed_many(G)).reshape(shape)
    lab, count = ndimage.label(ok)
    parent = list(range(count + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for ax in wrap_axes:
        a = np.take(lab, 0, axis=ax)
        b = np.take(lab, -1, axis=ax)
        both = (a > 0) & (b > 0)
        for u, v in zip(a[both], b[both]):
            parent[find(int(u))] = find(int(v))
    roots = np.array([find(i) for i in range(count + 1)])
    lab = roots[lab]
    uniq = np.unique(lab[lab > 0])
    remap = np.zeros(count + 1, dtype=np.int64)
    remap[uniq] = np.arange(1, len(uniq) + 1)
    return remap[lab], len(uniq), axes


def robot_flood_fill(scene, placements, step):
    """Components of admissible robot positions on a grid with objects fixed.

    ``placements`` is an ``(n, 2)`` array. Returns ``(labels, xs, ys)``.
    """
    xmin, ymin, xmax, ymax = scene.workspace
    xs = np.arange(xmin, xmax + 1e-12, step)
    ys = np.arange(ymin, ymax + 1e-12, step)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    Q = np.empty((X.size, scene.dim))
    Q[:, 0] = X.ravel()
    Q[:, 1] = Y.ravel()
    Q[:, 2:] = np.asarray(placements, dtype=float).ravel()
    ok = admissible_many(scene, Q).reshape(X.shape)
    lab, _ = ndimage.label(ok)
    return lab, xs, ys


def label_at(lab, xs, ys, p):
    i = int(np.argmin(np.abs(xs - p[0])))
    j = int(np.argmin(np.abs(ys - p[1])))
    return int(lab[i, j])


def naive_facet_pairs(cx):
    """Facet adjacency by brute force over all cell pairs (grid units)."""
    ilo, ihi, full, wrap = cx.ilo, cx.ihi, cx.full, cx.chart.wrap
    out = []
    for a in range(len(ilo)):
        for b in range(a + 1, len(ilo)):
            touch = 0
            ok = True
            for k in range(len(full)):
                ov = min(ihi[a, k], ihi[b, k]) - max(ilo[a, k], ilo[b, k])
                if ov > 0:
                    continue
                seam = wrap[k] and (
                    (ihi[a, k] == full[k] and ilo[b, k] == 0) or (ihi[b, k] == full[k] and ilo[a, k] == 0)
                )
                if ov == 0 or seam:
                    touch += 1
                else:
                    ok = False
                    break
            if ok and touch == 1:
                out.append((a, b))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def random_leaf_paths(count, seed=0):
    """Random polylines of chart points inside open-space contact leaves.

    Yields ``(scene, leaf, points)``; every densely sampled point of each
    polyline is admissible.
    """
    from stratmanip.geometry import make_scene
    from stratmanip.strata import Chart, ContactSet, Leaf

    rng = np.random.default_rng(seed)
    made = 0
    while made < count:
        n = int(rng.integers(1, 3))
        scene = make_scene(
            (0, 0, 2, 2), 0.1, [(f"O{k + 1}", float(rng.choice([0.08, 0.1]))) for k in range(n)],
            [[[1.6, 1.6], [1.9, 1.6], [1.9, 1.9], [1.6, 1.9]]],
        )
        p = int(rng.integers(1, n + 1))
        cs = ContactSet(tuple(range(p)))
        leaf = Leaf.of(cs, {k: (1.75, 0.25 + 0.3 * k) for k in range(p, n)})
        chart = Chart(scene, cs, leaf)
        pts = []
        v = np.array([rng.uniform(0.5, 1.2), rng.uniform(0.5, 1.2)] + list(rng.uniform(0, 2 * np.pi, p)))
        pts.append(v)
        for _ in range(int(rng.integers(1, 4))):
            step = np.concatenate([rng.uniform(-0.3, 0.3, 2), rng.uniform(-1.5, 1.5, p)])
            pts.append(pts[-1] + step)
        dense = np.concatenate([a + np.linspace(0, 1, 200)[:, None] * (b - a) for a, b in zip(pts[:-1], pts[1:])])
        if not admissible_many(scene, chart.embed_many(dense)).all():
            continue
        made += 1
        yield scene, leaf, pts


def facet_pairs_bruteforce(cx, ids):
    """Facet-adjacent pairs among ``ids`` by vectorized all-pairs comparison."""
    ilo, ihi, full, wrap = cx.ilo[ids], cx.ihi[ids], cx.full, cx.chart.wrap
    out = []
    for a in range(len(ids)):
        lo = np.maximum(ilo[a], ilo[a + 1 :])
        hi = np.minimum(ihi[a], ihi[a + 1 :])
        ov = hi - lo
        seam = wrap & (((ihi[a] == full) & (ilo[a + 1 :] == 0)) | ((ihi[a + 1 :] == full) & (ilo[a] == 0)))
        touch = (ov == 0) | ((ov < 0) & seam)
        ok = np.all((ov > 0) | touch, axis=1) & (touch.sum(axis=1) == 1)
        out.extend((ids[a], ids[a + 1 + int(b)]) for b in np.nonzero(ok)[0])
    return out


def n1_partition_oracle(graph, step):
    """Partition of the GRASP cells of a one-object scene computed without the
    library's adjacency kernels or robot-leaf decompositions.

    Transfer adjacency comes from a brute-force facet test over the 3D contact
    chart; transit adjacency is decided on the product of robot and object
    positions by a dense robot-position flood fill at the witness placement.
    """
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    (cs,) = graph.kept
    cx = graph.classes[cs].complex
    index = {c: i for i, (_, c) in enumerate(graph.nodes)}
    free = np.array(sorted(index))
    edges = [(index[a], index[b]) for a, b in facet_pairs_bruteforce(cx, free)]
    boxes = np.array([graph.placement_box(nd) for nd in graph.nodes])
    scene = graph.scene
    fills = {}
    for i in range(len(graph.nodes)):
        for j in range(i + 1, len(graph.nodes)):
            b1, b2 = boxes[i], boxes[j]
            lo = np.maximum(b1[:, [0, 2]], b2[:, [0, 2]])
            hi = np.minimum(b1[:, [1, 3]], b2[:, [1, 3]])
            if np.any(lo > hi):
                continue
            n1, n2 = graph.nodes[i], graph.nodes[j]
            for w in graph._witness_candidates(n1, n2, (lo + hi) / 2):
                if np.any(w < lo - 1e-12) or np.any(w > hi + 1e-12):
                    continue
                key = tuple(np.round(w.ravel(), 12))
                if key not in fills:
                    fills[key] = robot_flood_fill(scene, w, step)
                lab, xs, ys = fills[key]
                labels = []
                for nd in (n1, n2):
                    found = 0
                    for r in graph._grasp_positions(nd, w):
                        u = r - w[0]
                        u = u / np.hypot(*u)
                        for delta in (graph.eps / 8, graph.eps / 4, graph.eps / 2):
                            found = label_at(lab, xs, ys, r + delta * u)
                            if found:
                                break
                        if found:
                            break
                    labels.append(found)
                if labels[0] and labels[0] == labels[1]:
                    edges.append((i, j))
                    break
    n = len(graph.nodes)
    e = np.array(edges, dtype=np.int64).reshape(-1, 2)
    _, lab = connected_components(coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n)), directed=False)
    return lab


def same_partition(a, b) -> bool:
    pairs = set(zip(np.asarray(a).tolist(), np.asarray(b).tolist()))
    return len(pairs) == len(set(np.asarray(a).tolist())) == len(set(np.asarray(b).tolist()))


def n1_scenes():
    """Five one-object scenes for the partition comparison."""
    from stratmanip.geometry import make_scene
    from stratmanip.scenes import corridor, open_scene, split_scene

    return {
        "open": open_scene(1).scene,
        "split": split_scene().scene,
        "box": make_scene(
            (0, 0, 1.0, 0.8), 0.1, [("O1", 0.1)], [[[0.4, 0.3], [0.6, 0.3], [0.6, 0.5], [0.4, 0.5]]]
        ),
        "ell": make_scene(
            (0, 0, 1.2, 1.0), 0.1, [("O1", 0.075)], [[[0.5, 0.4], [1.2, 0.4], [1.2, 1.0], [0.5, 1.0]]]
        ),
        "corridor_bay": corridor(True).scene,
    }
