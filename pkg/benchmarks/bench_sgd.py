"""Timing comparison of the SGD kernel backends.

Runs one BMF epoch and one SVD++ epoch over a synthetic rating matrix on
both the compiled extension and the pure-Python fallback, and prints the
per-epoch times and speedup. The pure-Python twin exists for installs
without a C toolchain; this shows what that costs.

    python3 benchmarks/bench_sgd.py [--users N] [--items N] [--ratings N]
"""

import argparse
import time

import numpy as np

from recaudit.kernels import available_backends, get_backend


def make_bmf_problem(rng, n_users, n_items, n_ratings, factors):
    uc = rng.integers(0, n_users, n_ratings).astype(np.int64)
    ic = rng.integers(0, n_items, n_ratings).astype(np.int64)
    vals = rng.integers(1, 6, n_ratings).astype(np.float64)
    order = rng.permutation(n_ratings).astype(np.int64)
    P = rng.normal(0, 0.1, (n_users, factors))
    Q = rng.normal(0, 0.1, (n_items, factors))
    return dict(uc=uc, ic=ic, vals=vals, order=order, P=P, Q=Q,
                bu=np.zeros(n_users), bi=np.zeros(n_items),
                mu=float(vals.mean()))


def make_svdpp_problem(rng, n_users, n_items, n_ratings, factors):
    per_user = np.full(n_users, n_ratings // n_users)
    items, vals, ptr = [], [], [0]
    for u in range(n_users):
        k = int(per_user[u])
        items.append(rng.choice(n_items, size=min(k, n_items), replace=False))
        vals.append(rng.integers(1, 6, len(items[-1])).astype(np.float64))
        ptr.append(ptr[-1] + len(items[-1]))
    return dict(items=np.concatenate(items).astype(np.int64),
                vals=np.concatenate(vals),
                ptr=np.array(ptr, dtype=np.int64),
                user_order=rng.permutation(n_users).astype(np.int64),
                P=rng.normal(0, 0.1, (n_users, factors)),
                Q=rng.normal(0, 0.1, (n_items, factors)),
                Y=rng.normal(0, 0.1, (n_items, factors)),
                bu=np.zeros(n_users), bi=np.zeros(n_items))


def time_epochs(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--users", type=int, default=2000)
    ap.add_argument("--items", type=int, default=1500)
    ap.add_argument("--ratings", type=int, default=100_000)
    ap.add_argument("--factors", type=int, default=50)
    ap.add_argument("--repeats", type=int, default=3)
    ns = ap.parse_args()

    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    print(f"problem: {ns.users} users, {ns.items} items, "
          f"{ns.ratings} ratings, {ns.factors} factors "
          f"(best of {ns.repeats})\n")

    rng = np.random.default_rng(7)
    bmf = make_bmf_problem(rng, ns.users, ns.items, ns.ratings, ns.factors)
    svdpp = make_svdpp_problem(rng, ns.users, ns.items, ns.ratings,
                               ns.factors)

    results = {}
    for name in backends:
        mod, _ = get_backend(name)
        state = {k: (v.copy() if isinstance(v, np.ndarray) else v)
                 for k, v in bmf.items()}
        t_bmf = time_epochs(
            mod.bmf_epoch,
            (state["uc"], state["ic"], state["vals"], state["order"],
             state["P"], state["Q"], state["bu"], state["bi"], state["mu"],
             0.005, 0.02),
            ns.repeats)
        state = {k: (v.copy() if isinstance(v, np.ndarray) else v)
                 for k, v in svdpp.items()}
        t_svdpp = time_epochs(
            mod.svdpp_epoch,
            (state["items"], state["vals"], state["ptr"],
             state["user_order"], state["P"], state["Q"], state["Y"],
             state["bu"], state["bi"], 3.5, 0.005, 0.02),
            ns.repeats)
        results[name] = (t_bmf, t_svdpp)
        print(f"{name:>9}:  bmf_epoch {t_bmf * 1e3:9.1f} ms   "
              f"svdpp_epoch {t_svdpp * 1e3:9.1f} ms")

    if len(results) == 2:
        c, p = results["compiled"], results["python"]
        print(f"\nspeedup:   bmf_epoch {p[0] / c[0]:9.1f}x   "
              f"svdpp_epoch {p[1] / c[1]:9.1f}x")


if __name__ == "__main__":
    main()
