"""Brute-force reference implementations, written with plain loops.

They share no code with the package and are deliberately slow.
"""

import math


def sign_of(tag) -> int:
    value = getattr(tag, "value", tag)
    return {"nondecreasing": 1, "nonincreasing": -1, "none": 0}[value]


def better_than(xi, xj, tags) -> bool:
    strict = False
    for a, b, tag in zip(xi, xj, tags):
        s = sign_of(tag)
        if s == 0:
            if a != b:
                return False
        elif s * (a - b) < 0:
            return False
        elif s * (a - b) > 0:
            strict = True
    return strict


def resentment(p, X, a, tags) -> float:
    n = len(p)
    count = 0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            same = all(X[i][k] == X[j][k] for k in range(len(tags)))
            neighbour = better_than(X[i], X[j], tags) or (same and a[i] != a[j])
            if neighbour and p[i] < p[j]:
                count += 1
                break
    return count / n


def lipschitz(p, X, s) -> float:
    best = None
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            d = math.sqrt(sum(((X[i][k] - X[j][k]) / s[k]) ** 2 for k in range(len(s))))
            if d == 0:
                continue
            ratio = abs(p[i] - p[j]) / d
            best = ratio if best is None else max(best, ratio)
    return float("nan") if best is None else best
