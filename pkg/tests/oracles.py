"""Independent reference implementations used by the test suite.

Everything in here is written with explicit Python loops (or the obvious
closed-form expression) so that agreement with the package is meaningful:
none of these functions call into ``protorole``.
"""

from __future__ import annotations

import math


def sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def softplus(x: float) -> float:
    # log(1 + e^x), stable for large |x|
    return math.log1p(math.exp(-abs(x))) + max(x, 0.0)


def softmax(values):
    m = max(values)
    exps = [math.exp(v - m) for v in values]
    z = sum(exps)
    return [e / z for e in exps]


def matmul(a, b):
    """Triple-loop matrix product of lists-of-lists."""
    n, k = len(a), len(a[0])
    m = len(b[0])
    assert len(b) == k
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += a[i][t] * b[t][j]
            out[i][j] = s
    return out


def matvec(a, x):
    out = []
    for row in a:
        s = 0.0
        for w, v in zip(row, x):
            s += w * v
        out.append(s)
    return out


def lstm_cell(x, h_prev, c_prev, w_x, w_h, b):
    """One LSTM step, element by element.

    Weight rows are ordered [input, forget, output, candidate] blocks,
    matching the packed layout used by the package.
    """
    d = len(h_prev)
    gates = matvec(w_x, x)
    rec = matvec(w_h, h_prev)
    pre = [g + r + bb for g, r, bb in zip(gates, rec, b)]
    h, c = [], []
    for j in range(d):
        i_g = sigmoid(pre[j])
        f_g = sigmoid(pre[d + j])
        o_g = sigmoid(pre[2 * d + j])
        cand = math.tanh(pre[3 * d + j])
        c_j = f_g * c_prev[j] + i_g * cand
        h_j = o_g * math.tanh(c_j)
        c.append(c_j)
        h.append(h_j)
    return h, c


def bilstm_states(xs, fwd, bwd):
    """Full bidirectional pass; fwd/bwd are (w_x, w_h, b) triples."""
    d = len(fwd[2]) // 4
    h, c = [0.0] * d, [0.0] * d
    forward = []
    for x in xs:
        h, c = lstm_cell(x, h, c, *fwd)
        forward.append(h)
    h, c = [0.0] * d, [0.0] * d
    backward = [None] * len(xs)
    for t in range(len(xs) - 1, -1, -1):
        h, c = lstm_cell(xs[t], h, c, *bwd)
        backward[t] = h
    return [f + b for f, b in zip(forward, backward)]


def attention_weights(s, states, w_alpha, b_alpha):
    logits = []
    for h in states:
        proj = matvec(w_alpha, h)
        proj = [p + bb for p, bb in zip(proj, b_alpha)]
        logits.append(sum(si * pi for si, pi in zip(s, proj)))
    return softmax(logits)


def adam_scalar(x0, grads, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """Run Adam on a single scalar given a fixed gradient sequence."""
    x, m, v = x0, 0.0, 0.0
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        x -= lr * m_hat / (math.sqrt(v_hat) + eps)
    return x


def prf(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def pearson(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(xs, ys))
    vx = sum((a - mx) ** 2 for a in xs)
    vy = sum((b - my) ** 2 for b in ys)
    return cov / math.sqrt(vx * vy)


def finite_diff(f, xs, h=1e-6):
    """Central-difference gradient of f at the flat list xs."""
    grad = []
    for i in range(len(xs)):
        hi = list(xs)
        lo = list(xs)
        hi[i] += h
        lo[i] -= h
        grad.append((f(hi) - f(lo)) / (2.0 * h))
    return grad
