"""Brute-force reference implementations used to cross-check the package.

Everything here works on plain Python structures: train ratings as a list of
(user, item, rating) triples, genre assignments as a dict of sets, top-n
lists as a dict of item lists. Explicit loops, no numpy, and no code shared
with the package, so agreement is meaningful. Slow on purpose.
"""

import math


def theta(train_rows, users):
    """item -> fraction of ``users`` who rated it in train_rows."""
    raters = {}
    for u, i, _r in train_rows:
        raters.setdefault(i, set()).add(u)
    return {i: len(s) / len(users) for i, s in raters.items()}


def profiles(train_rows):
    prof = {}
    for u, i, _r in train_rows:
        prof.setdefault(u, []).append(i)
    return prof


def item_dist(genres):
    return {g: 1.0 / len(genres) for g in genres}


def mean_dist(items, genres_by_item, vocab):
    """Average of per-item genre distributions; None when nothing usable."""
    usable = [i for i in items if i in genres_by_item]
    if not usable:
        return None
    out = {g: 0.0 for g in vocab}
    for i in usable:
        for g, w in item_dist(genres_by_item[i]).items():
            out[g] += w
    for g in vocab:
        out[g] /= len(usable)
    return out


def hellinger(p, q, vocab):
    total = 0.0
    for g in vocab:
        total += (math.sqrt(p.get(g, 0.0)) - math.sqrt(q.get(g, 0.0))) ** 2
    return math.sqrt(total / 2.0)


def user_mc(user, train_rows, lists, genres_by_item, vocab):
    p = mean_dist(profiles(train_rows)[user], genres_by_item, vocab)
    q = mean_dist(lists[user], genres_by_item, vocab)
    if p is None or q is None:
        return None
    return hellinger(p, q, vocab)


def group_mc(group, mc_by_user):
    vals = [mc_by_user[u] for u in group if u in mc_by_user]
    return sum(vals) / len(vals)


def avg_profile_pop(user, train_rows, th):
    items = profiles(train_rows)[user]
    return sum(th.get(i, 0.0) for i in items) / len(items)


def gap_p(group, train_rows, th):
    return sum(avg_profile_pop(u, train_rows, th) for u in group) / len(group)


def gap_q(group, lists, th):
    total = 0.0
    for u in group:
        lst = lists[u]
        total += sum(th.get(i, 0.0) for i in lst) / len(lst)
    return total / len(group)


def pl(gp, gq):
    return (gq - gp) / gp


def precision(lists, test_rows, n, threshold=None):
    """Mean over users with a list and >=1 test rating of |list ∩ relevant|/n."""
    relevant = {}
    for u, i, r in test_rows:
        if threshold is None or r >= threshold:
            relevant.setdefault(u, set()).add(i)
    test_users = {u for u, _i, _r in test_rows}
    per = {}
    for u, lst in lists.items():
        if u not in test_users:
            continue
        hits = sum(1 for i in lst if i in relevant.get(u, set()))
        per[u] = hits / n
    return sum(per.values()) / len(per), per


def top_n(scores, exclude, n):
    """Exhaustive selection: sort by (-score, item id), skip excluded."""
    eligible = [(s, i) for i, s in scores.items() if i not in exclude]
    eligible.sort(key=lambda t: (-t[0], t[1]))
    return [i for _s, i in eligible[:n]]


def times_recommended(lists):
    counts = {}
    for lst in lists.values():
        for i in lst:
            counts[i] = counts.get(i, 0) + 1
    return counts
