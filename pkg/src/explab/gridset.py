"""Discretized sets on the dyadic grid and their quantitative measurements.

Sets live at a scale delta = 2^-k as collections of dyadic cells (indices
in [0, 2^k)).  Cell membership is half-open [j*2^-k, (j+1)*2^-k); interval
computations against cells use the closed cell, so every counting routine
over-approximates deterministically.

Measurements: covering numbers at coarser scales, non-concentration
exponents over the dyadic interval tree, image sets P(A, B) through sound
interval enclosures, collision ("energy") counts of value quadruples
P(x, y) = P(xp, yp), and least-squares scaling exponents across a ladder
of scales.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor, log2
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from .polyexpr import Interval, Poly, Rect, interval_range

MAX_SCALE = 30


@dataclass(frozen=True)
class Scale:
    """Dyadic scale delta = 2^-k."""

    k: int

    def __post_init__(self):
        if not 1 <= self.k <= MAX_SCALE:
            raise ValueError(f"scale k must satisfy 1 <= k <= {MAX_SCALE}")

    @property
    def delta(self) -> Fraction:
        return Fraction(1, 2**self.k)

    @property
    def cells(self) -> int:
        return 2**self.k


@dataclass(frozen=True)
class GridSet1D:
    scale: Scale
    cells: Tuple[int, ...]

    def __post_init__(self):
        limit = self.scale.cells
        prev = -1
        for c in self.cells:
            if not prev < c < limit:
                raise ValueError("cells must be strictly increasing and in range")
            prev = c

    @classmethod
    def from_cells(cls, scale: Scale, cells: Iterable[int]) -> "GridSet1D":
        return cls(scale, tuple(sorted(set(int(c) for c in cells))))

    def __len__(self) -> int:
        return len(self.cells)

    def cell_interval(self, index: int) -> Interval:
        d = self.scale.delta
        return Interval(index * d, (index + 1) * d)


@dataclass(frozen=True)
class GridSet2D:
    scale: Scale
    cells: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        limit = self.scale.cells
        prev = None
        for ij in self.cells:
            if prev is not None and not prev < ij:
                raise ValueError("cells must be strictly increasing")
            i, j = ij
            if not (0 <= i < limit and 0 <= j < limit):
                raise ValueError("cell index out of range")
            prev = ij

    @classmethod
    def from_cells(cls, scale: Scale, cells: Iterable[Tuple[int, int]]) -> "GridSet2D":
        return cls(scale, tuple(sorted(set((int(i), int(j)) for i, j in cells))))

    def __len__(self) -> int:
        return len(self.cells)

    def cell_rect(self, ij: Tuple[int, int]) -> Rect:
        d = self.scale.delta
        i, j = ij
        return Rect(i * d, (i + 1) * d, j * d, (j + 1) * d)

    def intersection(self, other: "GridSet2D") -> "GridSet2D":
        if other.scale != self.scale:
            raise ValueError("scale mismatch")
        common = set(self.cells) & set(other.cells)
        return GridSet2D.from_cells(self.scale, common)


GridSet = Union[GridSet1D, GridSet2D]


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------


def format_gridset(S: GridSet) -> str:
    """Text serialization: header line, then one cell per line, ascending."""
    if isinstance(S, GridSet1D):
        lines = [f"gridset1d k={S.scale.k}"]
        lines += [str(c) for c in S.cells]
    else:
        lines = [f"gridset2d k={S.scale.k}"]
        lines += [f"{i} {j}" for i, j in S.cells]
    return "\n".join(lines) + "\n"


def parse_gridset(text: str) -> GridSet:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty gridset text")
    header = lines[0].split()
    if len(header) != 2 or not header[1].startswith("k="):
        raise ValueError(f"bad gridset header {lines[0]!r}")
    scale = Scale(int(header[1][2:]))
    if header[0] == "gridset1d":
        return GridSet1D(scale, tuple(int(ln) for ln in lines[1:]))
    if header[0] == "gridset2d":
        cells = []
        for ln in lines[1:]:
            i, j = ln.split()
            cells.append((int(i), int(j)))
        return GridSet2D(scale, tuple(cells))
    raise ValueError(f"bad gridset kind {header[0]!r}")


def save_gridset(S: GridSet, path: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(format_gridset(S))


def load_gridset(path: str) -> GridSet:
    with open(path, "r", encoding="ascii") as fh:
        return parse_gridset(fh.read())


# ---------------------------------------------------------------------------
# Covering numbers and non-concentration
# ---------------------------------------------------------------------------


def covering_number(S: GridSet, k_prime: int) -> int:
    """Number of dyadic cells at scale 2^-k_prime meeting S (k_prime <= k)."""
    k = S.scale.k
    if not 1 <= k_prime <= k:
        raise ValueError("k_prime out of range: need 1 <= k_prime <= k")
    shift = k - k_prime
    if isinstance(S, GridSet1D):
        return len({c >> shift for c in S.cells})
    return len({(i >> shift, j >> shift) for i, j in S.cells})


@dataclass(frozen=True)
class NonconcentrationResult:
    """Least eta with E(S cap J) <= |J|^kappa * delta^-(alpha+eta) over dyadic J.

    raw may be negative (set is more spread than required); eta is the
    reported value floored at zero, with floored recording that event.
    worst is the (level, prefix) of a maximizing dyadic interval.
    """

    eta: float
    floored: bool
    raw: float
    worst: Tuple[int, int]


def nonconcentration_exponent(
    S: GridSet1D, kappa: float, alpha: float
) -> NonconcentrationResult:
    if not isinstance(S, GridSet1D) or not S.cells:
        raise ValueError("nonconcentration_exponent needs a nonempty 1D grid set")
    if not 0 < kappa <= 1:
        raise ValueError("kappa must lie in (0, 1]")
    k = S.scale.k
    best = None
    worst = (0, 0)
    # Bottom-up scan of the dyadic tree: level k holds single cells.
    bucket = {c: 1 for c in S.cells}
    for level in range(k, -1, -1):
        for prefix, count in bucket.items():
            value = (log2(count) + level * kappa) / k - alpha
            if best is None or value > best:
                best = value
                worst = (level, prefix)
        if level:
            parent: dict = {}
            for prefix, count in bucket.items():
                parent[prefix >> 1] = parent.get(prefix >> 1, 0) + count
            bucket = parent
    assert best is not None
    return NonconcentrationResult(max(0.0, best), best < 0, best, worst)


def nonconcentration_exponent_2d(X: GridSet2D, alpha: float) -> float:
    """Least eta >= 0 with E(X cap B) <= r^alpha * delta^-(2 alpha + eta)
    over all dyadic squares B of side r."""
    if not X.cells:
        raise ValueError("empty set")
    k = X.scale.k
    bucket = {ij: 1 for ij in X.cells}
    best = None
    for level in range(k, -1, -1):
        for _, count in bucket.items():
            value = (log2(count) + level * alpha) / k - 2 * alpha
            if best is None or value > best:
                best = value
        if level:
            parent: dict = {}
            for (i, j), count in bucket.items():
                key = (i >> 1, j >> 1)
                parent[key] = parent.get(key, 0) + count
            bucket = parent
    return max(0.0, best)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def gen_ap(alpha: float, eta: float, scale: Scale) -> GridSet1D:
    """Arithmetic-progression test set: floor(delta^-alpha) cells at cell
    spacing ceil(delta^(alpha+eta) * 2^k), snapped to the dyadic grid."""
    if alpha <= 0 or alpha > 1 or eta < 0 or alpha + eta > 1:
        raise ValueError("need 0 < alpha <= 1, eta >= 0, alpha + eta <= 1")
    k = scale.k
    count = floor(2.0 ** (k * alpha) + 1e-9)
    if count < 1:
        raise ValueError("delta^-alpha must be at least 1")
    spacing = max(1, ceil(2.0 ** (k * (1 - alpha - eta)) - 1e-9))
    cells = []
    for j in range(count):
        idx = j * spacing
        if idx >= scale.cells:
            break
        cells.append(idx)
    return GridSet1D(scale, tuple(cells))


def gen_cantor(branch_pattern: Iterable[int], base: int, depth: int) -> GridSet1D:
    """Depth-d iterate of a base-b digit restriction (b a power of 2).

    The result lives at scale k = d * log2(b) and has |pattern|^d cells.
    """
    pattern = sorted(set(int(p) for p in branch_pattern))
    if not pattern:
        raise ValueError("branch pattern must be nonempty")
    if base < 2 or base & (base - 1):
        raise ValueError("base must be a power of 2 so levels align to the grid")
    if any(not 0 <= p < base for p in pattern):
        raise ValueError("pattern digits must lie in [0, base)")
    bits = base.bit_length() - 1
    k = depth * bits
    if not 1 <= k <= MAX_SCALE:
        raise ValueError("depth * log2(base) must land in [1, 30]")
    cells = [0]
    for _ in range(depth):
        cells = [c * base + p for c in cells for p in pattern]
    return GridSet1D(Scale(k), tuple(sorted(cells)))


def restrict(S: GridSet1D, lo: Fraction, hi: Fraction) -> GridSet1D:
    """Cells of S whose closed interval meets [lo, hi]."""
    lo, hi = Fraction(lo), Fraction(hi)
    d = S.scale.delta
    kept = [c for c in S.cells if c * d <= hi and (c + 1) * d >= lo]
    return GridSet1D(S.scale, tuple(kept))


def coarsen(S: GridSet1D, k_new: int) -> GridSet1D:
    if k_new > S.scale.k:
        raise ValueError("coarsen target must not exceed the current scale")
    shift = S.scale.k - k_new
    return GridSet1D.from_cells(Scale(k_new), (c >> shift for c in S.cells))


def refine(S: GridSet1D, k_new: int) -> GridSet1D:
    """Refine each cell into all its descendants at the finer scale."""
    if k_new < S.scale.k:
        raise ValueError("refine target must not precede the current scale")
    shift = k_new - S.scale.k
    cells = []
    for c in S.cells:
        start = c << shift
        cells.extend(range(start, start + (1 << shift)))
    return GridSet1D(Scale(k_new), tuple(cells))


# ---------------------------------------------------------------------------
# Image sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ImageSet:
    """Output cells of P(A, B) on the renormalized [0, 1] grid.

    Values are affinely mapped from [value_lo, value_hi] (the enclosure of
    P on the unit square) onto [0, 1] before gridding; the map is recorded
    so covering counts can be traced back to raw value space.
    """

    grid: GridSet1D
    value_lo: Fraction
    value_hi: Fraction


def _cells_of_value_interval(iv: Interval, k: int) -> Tuple[int, int]:
    """Closed value interval -> inclusive range of half-open grid cells."""
    n = 2**k
    j0 = floor(iv.lo * n)
    j1 = floor(iv.hi * n)
    return max(0, min(j0, n - 1)), max(0, min(j1, n - 1))


def _pair_interval_table(
    P: Poly, A: GridSet1D, B: GridSet1D
) -> list:
    """Interval of P on every closed cell product S x T, as a flat list
    aligned with itertools-style (a-major) pair order."""
    d = A.scale.delta
    x_exps = sorted({e[0] for e in P.terms})
    y_exps = sorted({e[1] for e in P.terms})
    xpows = {}
    for a in A.cells:
        iv = Interval(a * d, (a + 1) * d)
        xpows[a] = {e: iv.pow(e) for e in x_exps}
    ypows = {}
    for b in B.cells:
        iv = Interval(b * d, (b + 1) * d)
        ypows[b] = {e: iv.pow(e) for e in y_exps}
    terms = list(P.terms.items())
    out = []
    for a in A.cells:
        xp = xpows[a]
        for b in B.cells:
            yp = ypows[b]
            lo = Fraction(0)
            hi = Fraction(0)
            for (i, j), coeff in terms:
                if i and j:
                    t = xp[i] * yp[j]
                elif i:
                    t = xp[i]
                elif j:
                    t = yp[j]
                else:
                    t = Interval.point(1)
                t = t.scaled(coeff)
                lo += t.lo
                hi += t.hi
            out.append(Interval(lo, hi))
    return out


def image_set(P: Poly, A: GridSet1D, B: GridSet1D) -> ImageSet:
    """Over-approximate covering of P(A, B) by output cells at the input scale.

    An output cell is included when the interval enclosure of P on some
    closed cell product S x T meets it (after affine renormalization of
    P's range on the unit square onto [0, 1]).
    """
    if A.scale != B.scale:
        raise ValueError("A and B must share a scale")
    k = A.scale.k
    unit = Rect.of(0, 1, 0, 1)
    total = interval_range(P, unit)
    span = total.width()
    marks = bytearray(2**k)
    if span == 0:
        marks[0] = 1
    else:
        for iv in _pair_interval_table(P, A, B):
            mapped = Interval((iv.lo - total.lo) / span, (iv.hi - total.lo) / span)
            j0, j1 = _cells_of_value_interval(mapped, k)
            for j in range(j0, j1 + 1):
                marks[j] = 1
    cells = tuple(j for j in range(2**k) if marks[j])
    return ImageSet(GridSet1D(A.scale, cells), total.lo, total.hi)


_SUM_POLY = Poly(("x", "y"), {(1, 0): 1, (0, 1): 1})
_PRODUCT_POLY = Poly(("x", "y"), {(1, 1): 1})


def sum_set(A: GridSet1D, B: GridSet1D) -> GridSet1D:
    return image_set(_SUM_POLY, A, B).grid


def product_set(A: GridSet1D, B: GridSet1D) -> GridSet1D:
    return image_set(_PRODUCT_POLY, A, B).grid


# ---------------------------------------------------------------------------
# Energy counting
# ---------------------------------------------------------------------------


def energy_count(
    P: Poly,
    A: GridSet1D,
    B: GridSet1D,
    hf_min: Optional[float] = None,
) -> int:
    """Ordered count of cell quadruples (S, S', T, T') in A^2 x B^2 whose
    interval enclosures of P on S x T and S' x T' intersect.

    With hf_min set, quadruples whose four-variable enclosure of |H_F|
    (computed as G M' - G' M from the per-pair ranges G of P_x P_y and M
    of P_xy) has supremum bound below hf_min are excluded.

    The unfiltered count runs as a sweep over pair intervals sorted by
    lower endpoint with a min-heap of upper endpoints, so the cost is
    O(N log N) in the number of pairs rather than O(N^2) quadruples.
    """
    if A.scale != B.scale:
        raise ValueError("A and B must share a scale")
    intervals = _pair_interval_table(P, A, B)
    if hf_min is None:
        order = sorted(range(len(intervals)), key=lambda i: intervals[i].lo)
        heap: list = []
        total = len(intervals)
        for idx in order:
            lo = intervals[idx].lo
            while heap and heap[0] < lo:
                heapq.heappop(heap)
            total += 2 * len(heap)
            heapq.heappush(heap, intervals[idx].hi)
        return total

    px = P.partial("x")
    py = P.partial("y")
    pxy = px.partial("y")
    g_table = _pair_interval_table(px * py, A, B)
    m_table = _pair_interval_table(pxy, A, B)
    threshold = Fraction(hf_min)

    def passes(i: int, j: int) -> bool:
        bracket = g_table[i] * m_table[j] - g_table[j] * m_table[i]
        return bracket.sup_abs() >= threshold

    order = sorted(range(len(intervals)), key=lambda i: intervals[i].lo)
    heap = []  # entries (hi, index); lazily pruned by lo sweep
    total = 0
    for idx in order:
        lo = intervals[idx].lo
        while heap and heap[0][0] < lo:
            heapq.heappop(heap)
        if passes(idx, idx):
            total += 1
        for _, other in heap:
            if passes(idx, other):
                total += 2
        heapq.heappush(heap, (intervals[idx].hi, idx))
    return total


def energy_count_brute_force(
    P: Poly, A: GridSet1D, B: GridSet1D, hf_min: Optional[float] = None
) -> int:
    """Independent O(N^2) oracle: test range intersection per quadruple."""
    if A.scale != B.scale:
        raise ValueError("A and B must share a scale")
    intervals = _pair_interval_table(P, A, B)
    if hf_min is not None:
        px = P.partial("x")
        py = P.partial("y")
        pxy = px.partial("y")
        g_table = _pair_interval_table(px * py, A, B)
        m_table = _pair_interval_table(pxy, A, B)
        threshold = Fraction(hf_min)
    total = 0
    for i in range(len(intervals)):
        for j in range(len(intervals)):
            if not intervals[i].intersects(intervals[j]):
                continue
            if hf_min is not None:
                bracket = g_table[i] * m_table[j] - g_table[j] * m_table[i]
                if bracket.sup_abs() < threshold:
                    continue
            total += 1
    return total


def cs_growth_bound(cover_x: int, energy: int, c: float) -> float:
    """Cauchy-Schwarz lower-bound functional c * cover^2 / energy."""
    if energy <= 0:
        raise ValueError("energy must be positive")
    if energy < cover_x:
        raise ValueError("energy below diagonal count: energy >= cover required")
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    return c * cover_x * cover_x / energy


# ---------------------------------------------------------------------------
# Exponent fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentFit:
    """OLS fit of log2(value) against k; slope is the delta^-slope exponent."""

    slope: float
    intercept: float
    residual: float
    points: Tuple[Tuple[int, float], ...]


def fit_exponent(points: Sequence[Tuple[int, float]]) -> ExponentFit:
    if len(points) < 3:
        raise ValueError("need at least 3 scales for an exponent fit")
    ks = np.array([float(k) for k, _ in points])
    if np.allclose(ks, ks[0]):
        raise ValueError("degenerate fit: all scales equal")
    values = np.array([float(v) for _, v in points])
    if np.any(values <= 0):
        raise ValueError("values must be positive")
    logs = np.log2(values)
    slope, intercept = np.polyfit(ks, logs, 1)
    predicted = slope * ks + intercept
    residual = float(np.sqrt(np.mean((logs - predicted) ** 2)))
    stored = tuple((int(k), float(y)) for k, y in zip(ks, logs))
    return ExponentFit(float(slope), float(intercept), residual, stored)


def box_dim_fit(
    family: Callable[[int], GridSet1D], k_range: Sequence[int]
) -> ExponentFit:
    """Box-dimension estimate: slope of log2 cell count across scales."""
    ks = list(k_range)
    if len(ks) < 3:
        raise ValueError("need at least 3 scales")
    points = []
    for k in ks:
        S = family(k)
        points.append((S.scale.k, len(S.cells)))
    return fit_exponent(points)
