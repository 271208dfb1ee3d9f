"""Independent brute-force oracles for the exact counters.

These enumerate subsets directly from the definitions (pairwise strict
separation, strict-ball coverage) without touching the library's search
code, so they can arbitrate the exact modes.
"""

from __future__ import annotations

from fractions import Fraction


def orbit_points(sys, n: int, x: int) -> list[int]:
    """x, f_1(x), f_1^2(x), ... up to n-1 steps, via the raw rule."""
    out = [x]
    cur = x
    for k in range(1, n):
        cur = sys.maps.rule(k, cur)
        out.append(cur)
    return out


def brute_bowen(sys, n: int, x: int, y: int) -> Fraction:
    ox = orbit_points(sys, n, x)
    oy = orbit_points(sys, n, y)
    return max(sys.space.distance(a, b) for a, b in zip(ox, oy))


def separation_bitmasks(sys, n: int, eps: Fraction) -> list[int]:
    """adj[i] has bit j set when the pair is strictly eps-separated."""
    m = len(sys.space)
    adj = [0] * m
    for i in range(m):
        for j in range(i + 1, m):
            if brute_bowen(sys, n, i, j) > eps:
                adj[i] |= 1 << j
                adj[j] |= 1 << i
    return adj


def ball_bitmasks(sys, n: int, eps: Fraction) -> list[int]:
    """ball[y] has bit x set when x is strictly within eps of center y."""
    m = len(sys.space)
    balls = [0] * m
    for y in range(m):
        for x in range(m):
            if brute_bowen(sys, n, x, y) < eps:
                balls[y] |= 1 << x
    return balls


def brute_max_separated(sys, n: int, eps: Fraction) -> int:
    adj = separation_bitmasks(sys, n, eps)
    m = len(adj)
    best = 1
    for mask in range(1, 1 << m):
        size = mask.bit_count()
        if size <= best:
            continue
        ok = True
        mm = mask
        while mm:
            v = (mm & -mm).bit_length() - 1
            mm &= mm - 1
            if (mask & ~(1 << v)) & ~adj[v]:
                ok = False
                break
        if ok:
            best = size
    return best


def brute_min_spanning(sys, n: int, eps: Fraction) -> int:
    balls = ball_bitmasks(sys, n, eps)
    m = len(balls)
    full = (1 << m) - 1
    best = m
    for mask in range(1, 1 << m):
        size = mask.bit_count()
        if size >= best:
            continue
        covered = 0
        mm = mask
        while mm:
            v = (mm & -mm).bit_length() - 1
            mm &= mm - 1
            covered |= balls[v]
        if covered == full:
            best = size
    return best


def brute_minimal_subcover(masks: list[int], full: int) -> int:
    """Smallest subfamily of bitmask sets whose union is ``full``."""
    m = len(masks)
    best = m
    for mask in range(1, 1 << m):
        size = mask.bit_count()
        if size >= best:
            continue
        covered = 0
        mm = mask
        while mm:
            v = (mm & -mm).bit_length() - 1
            mm &= mm - 1
            covered |= masks[v]
        if covered == full:
            best = size
    return best
