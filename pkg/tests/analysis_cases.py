"""Hand-sized analysis instances with values worked out by hand, plus brute-force oracles.

Shared by the analysis unit tests and the acceptance suite.
"""
import math

import numpy as np

SQ2 = math.sqrt(2.0)

# (W, b, x, y, bias, expected margin)
MARGIN_CASES = [
    (np.eye(2), np.zeros(2), [2.0, 1.0], 0, "auto", 1 / SQ2),
    (np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]), np.array([0.5, 0.0, 0.0]), [0.0, 1.0], 1, "auto", 0.5 / SQ2),
    (np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]), np.array([0.5, 0.0, 0.0]), [0.0, 1.0], 1, "none", 1 / SQ2),
    (np.array([[2.0, 0.0], [0.0, 0.0]]), np.zeros(2), [-1.0, 3.0], 0, "auto", -1.0),
]

# (embeddings, labels, expected mean silhouette)
SILHOUETTE_CASES = [
    (np.array([[0.0], [1.0], [4.0], [5.0]]), np.array([0, 0, 1, 1]), (3.5 / 4.5 + 2.5 / 3.5) / 2),
    (np.array([[0.0, 0.0], [0.0, 2.0], [3.0, 0.0]]), np.array([0, 0, 1]),
     # singleton scores 0; points 0 and 1 have a = 2, b = 3 and sqrt(13)
     ((3 - 2) / 3 + (math.sqrt(13) - 2) / math.sqrt(13)) / 3),
    (np.array([[0.0], [2.0], [1.0], [3.0]]), np.array([0, 0, 1, 1]),
     # interleaved pairs: outer points have a = b = 2, inner ones a = 2, b = 1
     (0.0 - 0.5 - 0.5 + 0.0) / 4),
]

# (embeddings, labels, expected Davies-Bouldin index)
DB_CASES = [
    (np.array([[0.0], [2.0], [10.0], [12.0]]), np.array([0, 0, 1, 1]), 0.2),
    (np.array([[0.0], [2.0], [10.0], [12.0], [20.0], [24.0]]), np.array([0, 0, 1, 1, 2, 2]), (0.2 + 6 / 11) / 3),
    (np.array([[0.0, 0.0], [0.0, 2.0], [4.0, 1.0], [4.0, 1.0]]), np.array([0, 0, 1, 1]), 1 / 4),
]

# (W, class means, expected matrix, expected dominance)
PROTOTYPE_CASES = [
    (np.eye(2), np.array([[2.0, 1.0], [0.0, 3.0]]), np.array([[2.0, 0.0], [1.0, 3.0]]), 1.0),
    (np.eye(2), np.array([[0.0, 1.0], [1.0, 0.0]]), np.array([[0.0, 1.0], [1.0, 0.0]]), 0.0),
    # ties count as dominant (row 0); row 2 peaks off the diagonal
    (np.array([[1.0, 1.0], [1.0, -1.0], [1.0, 0.0]]), np.array([[1.0, 0.0], [2.0, -1.0], [0.0, 1.0]]),
     np.array([[1.0, 1.0, 1.0], [1.0, 3.0, -1.0], [1.0, 2.0, 0.0]]), 2 / 3),
]

# (W, embeddings, labels, pair, expected coords)
BOUNDARY_CASES = [
    (np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]), np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 0.0]]), np.array([0, 1]),
     (0, 1), np.array([[1.0, 1.0], [0.0, 0.0]])),
    (np.array([[0.0, 2.0], [0.0, 0.0]]), np.array([[3.0, 1.0], [1.0, 0.0]]), np.array([0, 1]), (0, 1),
     np.array([[1.0, 3.0], [0.0, 1.0]])),
    (np.array([[1.0, 1.0], [0.0, 0.0], [5.0, 5.0]]), np.array([[2.0, 0.0], [0.0, 0.0], [9.0, 9.0]]),
     np.array([0, 1, 2]), (0, 1), np.array([[SQ2, SQ2], [0.0, 0.0], [18 / SQ2, 0.0]])),
]

# (acts_v, acts_t, labels, expected overall r per neuron, expected per-label r, undefined labels per neuron)
NEURON_CASES = [
    (np.array([[1.0], [2.0], [3.0]]), np.array([[2.0], [4.0], [6.0]]), np.array([0, 0, 1]),
     [1.0], [{0: 1.0, 1: 0.0}], [[1]]),
    (np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [4.0, 5.0]]),
     np.array([[4.0, 1.0], [3.0, 2.0], [2.0, 3.0], [1.0, 4.0]]), np.array([0, 0, 1, 1]),
     [-1.0, 0.0], [{0: -1.0, 1: -1.0}, {0: 0.0, 1: 0.0}], [[], [0, 1]]),
    (np.array([[0.0], [1.0], [0.0], [1.0]]), np.array([[0.0], [0.0], [1.0], [1.0]]), np.array([0, 0, 1, 1]),
     [0.0], [{0: 0.0, 1: 0.0}], [[0, 1]]),
]


# --- brute-force oracles -------------------------------------------------------

def _dist(a, b):
    return math.sqrt(sum((float(p) - float(q)) ** 2 for p, q in zip(a, b)))


def oracle_silhouette(E, labels):
    n = len(labels)
    scores = []
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            scores.append(0.0)
            continue
        a = sum(_dist(E[i], E[j]) for j in own) / len(own)
        b = min(sum(_dist(E[i], E[j]) for j in range(n) if labels[j] == c) / sum(1 for j in range(n) if labels[j] == c)
                for c in set(labels.tolist()) if c != labels[i])
        scores.append(0.0 if max(a, b) == 0 else (b - a) / max(a, b))
    return sum(scores) / n


def oracle_davies_bouldin(E, labels):
    classes = sorted(set(labels.tolist()))
    cents, scat = {}, {}
    for c in classes:
        rows = [E[i] for i in range(len(labels)) if labels[i] == c]
        cents[c] = [sum(r[d] for r in rows) / len(rows) for d in range(len(rows[0]))]
        scat[c] = sum(_dist(r, cents[c]) for r in rows) / len(rows)
    worst = [max((scat[a] + scat[b]) / _dist(cents[a], cents[b]) for b in classes if b != a) for a in classes]
    return sum(worst) / len(classes)


def oracle_pearson(a, b):
    n = len(a)
    if n < 2:
        return 0.0
    ma, mb = sum(a) / n, sum(b) / n
    sab = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    saa = sum((x - ma) ** 2 for x in a)
    sbb = sum((y - mb) ** 2 for y in b)
    if saa == 0 or sbb == 0:
        return 0.0
    return sab / math.sqrt(saa * sbb)


def oracle_margin(W, b, x, y, use_bias):
    logits = [sum(W[k][d] * x[d] for d in range(len(x))) + b[k] for k in range(len(W))]
    j = max((k for k in range(len(W)) if k != y), key=lambda k: logits[k])
    diff = [W[y][d] - W[j][d] for d in range(len(x))]
    gap = sum(diff[d] * x[d] for d in range(len(x))) + ((b[y] - b[j]) if use_bias else 0.0)
    return gap / math.sqrt(sum(v * v for v in diff))


# --- exchange-rate grids ----------------------------------------------------------

SHOT_GRID = [0, 1, 3, 7, 15]


def planted_plane(a_img, a_txt, c):
    g = lambda n: math.log2(1 + n)
    return np.array([[i, t, a_img * g(i) + a_txt * g(t) + c] for i in SHOT_GRID for t in SHOT_GRID])
