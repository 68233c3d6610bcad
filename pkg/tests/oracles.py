"""Reference computations that do not go through the package's own linear algebra.

Ranks come from sympy, and Chevalley-Eilenberg differentials are written out
directly from the structure constants, so agreement with the library is a
genuine cross-check rather than a restatement.
"""

from fractions import Fraction
from itertools import combinations
from math import comb

import sympy


def sympy_rank(rows) -> int:
    if not rows or not rows[0]:
        return 0
    return sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) if isinstance(x, Fraction) else x
                          for x in r] for r in rows]).rank()


def _eval(omega: dict, args: list[int]):
    """Alternating cochain on basis indices (repeats give zero)."""
    if len(set(args)) != len(args):
        return 0
    order = sorted(range(len(args)), key=lambda i: args[i])
    sign = 1
    perm = list(order)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign * omega.get(tuple(sorted(args)), 0)


def ce_matrix(n: int, brackets: dict, k: int, action=None, module_dim: int = 1) -> list[list]:
    """Matrix of d: C^k → C^{k+1} for a Lie algebra with structure constants
    ``brackets[(i, j)] = {m: c}`` (both orders present) and optional matrices ``action[i]``."""
    src = [(I, b) for I in combinations(range(n), k) for b in range(module_dim)]
    tgt = [(J, b) for J in combinations(range(n), k + 1) for b in range(module_dim)]
    rows = [[0] * len(src) for _ in tgt]
    for col, (I, b) in enumerate(src):
        omega = {I: 1}
        for row, (J, c) in enumerate(tgt):
            total = 0
            xs = list(J)
            for i in range(k + 1):
                rest = xs[:i] + xs[i + 1:]
                if action is not None and c < module_dim:
                    total += (-1) ** i * action[xs[i]][c][b] * _eval(omega, rest)
            if c == b:
                for i in range(k + 1):
                    for j in range(i + 1, k + 1):
                        rest = xs[:i] + xs[i + 1:j] + xs[j + 1:]
                        for m, coeff in brackets.get((xs[i], xs[j]), {}).items():
                            total += (-1) ** (i + j) * coeff * _eval(omega, [m] + rest)
            rows[row][col] = total
    return rows


def ce_dims(n: int, brackets: dict, action=None, module_dim: int = 1) -> tuple[int, ...]:
    ranks = [sympy_rank(ce_matrix(n, brackets, k, action, module_dim)) if k < n else 0 for k in range(n + 1)]
    dims = []
    for k in range(n + 1):
        size = comb(n, k) * module_dim
        dims.append(size - ranks[k] - (ranks[k - 1] if k else 0))
    return tuple(dims)


def jacobi_holds(n: int, brackets: dict) -> bool:
    def br(u, v):
        out = [0] * n
        for i, a in enumerate(u):
            for j, b in enumerate(v):
                if a and b:
                    for m, c in brackets.get((i, j), {}).items():
                        out[m] += a * b * c
        return out

    e = [[int(i == j) for j in range(n)] for i in range(n)]
    for i, j, k in combinations(range(n), 3):
        s = [x + y + z for x, y, z in zip(br(e[i], br(e[j], e[k])), br(e[j], br(e[k], e[i])), br(e[k], br(e[i], e[j])))]
        if any(s):
            return False
    return True


def antisymmetric(n: int, brackets: dict) -> bool:
    for i in range(n):
        for j in range(n):
            a, b = brackets.get((i, j), {}), brackets.get((j, i), {})
            if any(a.get(m, 0) + b.get(m, 0) for m in set(a) | set(b)):
                return False
    return True


def random_bracket_table(rng, n: int, asymmetric: bool = False) -> dict:
    """Random sparse structure constants in {-1, 0, 1}; antisymmetric unless ``asymmetric``."""
    table: dict = {}
    for i in range(n):
        for j in range(i + 1, n):
            row = {m: rng.choice([-1, 1]) for m in range(n) if rng.random() < 0.3}
            table[(i, j)] = row
            table[(j, i)] = {m: -c for m, c in row.items()}
    if asymmetric and n >= 2:
        i, j = sorted(rng.sample(range(n), 2))
        m = rng.randrange(n)
        table[(j, i)] = dict(table[(j, i)])
        table[(j, i)][m] = table[(j, i)].get(m, 0) + 1
    return table
