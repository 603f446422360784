"""Pure-Python SGD epoch kernels, the fallback for the compiled extension.

Same signatures and the same arithmetic, operation for operation, as
``_sgd.pyx``: small fixtures train to bit-identical parameters on either
backend. Orders of magnitude slower, so full-scale runs want the extension
(see benchmarks/bench_sgd.py).
"""

from math import sqrt


def bmf_epoch(uc, ic, vals, order, P, Q, bu, bi, mu, lr, reg):
    """One SGD pass of biased matrix factorization over ratings in ``order``."""
    f = P.shape[1]
    ucl, icl, vl = uc.tolist(), ic.tolist(), vals.tolist()
    Pl, Ql = P.tolist(), Q.tolist()
    bul, bil = bu.tolist(), bi.tolist()
    for k in order.tolist():
        u = ucl[k]
        i = icl[k]
        pu = Pl[u]
        qi = Ql[i]
        dot = 0.0
        for j in range(f):
            dot += pu[j] * qi[j]
        e = vl[k] - (mu + bul[u] + bil[i] + dot)
        bul[u] += lr * (e - reg * bul[u])
        bil[i] += lr * (e - reg * bil[i])
        for j in range(f):
            puj = pu[j]
            qij = qi[j]
            pu[j] = puj + lr * (e * qij - reg * puj)
            qi[j] = qij + lr * (e * puj - reg * qij)
    P[:] = Pl
    Q[:] = Ql
    bu[:] = bul
    bi[:] = bil


def svdpp_epoch(items_by_user, vals_by_user, uptr, user_order,
                P, Q, Y, bu, bi, mu, lr, reg):
    """One SGD pass of SVD++ with the per-user grouped update schedule."""
    f = P.shape[1]
    items = items_by_user.tolist()
    vals = vals_by_user.tolist()
    ptr = uptr.tolist()
    Pl, Ql, Yl = P.tolist(), Q.tolist(), Y.tolist()
    bul, bil = bu.tolist(), bi.tolist()

    for u in user_order.tolist():
        start, end = ptr[u], ptr[u + 1]
        if end == start:
            continue
        s = 1.0 / sqrt(float(end - start))
        pu = Pl[u]
        impl = [0.0] * f
        acc = [0.0] * f
        for t in range(start, end):
            yi = Yl[items[t]]
            for j in range(f):
                impl[j] += yi[j]
        for j in range(f):
            impl[j] *= s

        for t in range(start, end):
            i = items[t]
            qi = Ql[i]
            dot = 0.0
            for j in range(f):
                dot += qi[j] * (pu[j] + impl[j])
            e = vals[t] - (mu + bul[u] + bil[i] + dot)
            bul[u] += lr * (e - reg * bul[u])
            bil[i] += lr * (e - reg * bil[i])
            for j in range(f):
                qij = qi[j]
                qi[j] = qij + lr * (e * (pu[j] + impl[j]) - reg * qij)
                pu[j] = pu[j] + lr * (e * qij - reg * pu[j])
                acc[j] += e * qij

        for t in range(start, end):
            yi = Yl[items[t]]
            for j in range(f):
                yi[j] += lr * (s * acc[j] - reg * yi[j])

    P[:] = Pl
    Q[:] = Ql
    Y[:] = Yl
    bu[:] = bul
    bi[:] = bil
