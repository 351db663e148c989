"""Exact feasibility systems behind the approximation guarantee.

Two small linear systems tie the statistics of the candidate starting
solutions (maximum matching, budgeted matching, packing-first) to the track
structure of an unknown optimum, all normalized by the number of paths.  The
main system describes a hypothetical run in which the best candidate is still
expensive relative to the optimum; its emptiness at a given ratio certifies
that ratio as a bound on the starting solution's cost.  A reduced system does
the same job for the budgeted-matching candidate alone and is small enough to
carry a closed-form maximizer.

Everything is exact.  Coefficients are :class:`~fractions.Fraction` values and
emptiness is decided by a phase-1 simplex over fractions with Bland's rule, so
a verdict at a knife-edge ratio is arithmetic fact, not float behavior.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Literal, Mapping

__all__ = [
    "Row",
    "RationalLP",
    "build_polyhedron",
    "build_fap_polyhedron",
    "is_empty",
    "feasible_point",
    "max_rho",
    "export_lp",
    "fap_ratio",
    "fap_max_ratio",
]

Sense = Literal["<=", ">=", "=="]

RatioLike = int | float | str | Fraction


def _rat(x: RatioLike) -> Fraction:
    """Exact fraction from a number; floats go through their decimal repr."""
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


@dataclass(frozen=True)
class Row:
    """One linear constraint ``sum(coeff * var) sense rhs``."""

    name: str
    coeffs: tuple[tuple[str, Fraction], ...]
    sense: Sense
    rhs: Fraction

    def coeff(self, var: str) -> Fraction:
        for v, c in self.coeffs:
            if v == var:
                return c
        return Fraction(0)


@dataclass(frozen=True)
class RationalLP:
    """A named system of linear constraints with exact coefficients.

    Variables are free unless the system itself contains a one-sided
    ``var >= 0`` row; the builders below spell those out, so the row list is
    the entire truth and can be exported or permuted without changing any
    verdict.
    """

    variables: tuple[str, ...]
    rows: tuple[Row, ...]
    rho: Fraction | None
    eps: Fraction
    eps_prime: Fraction | None

    def __post_init__(self) -> None:
        names = [r.name for r in self.rows]
        if len(set(names)) != len(names):
            raise ValueError("duplicate row names")
        known = set(self.variables)
        for r in self.rows:
            for v, _ in r.coeffs:
                if v not in known:
                    raise ValueError(f"row {r.name!r} uses unknown variable {v!r}")

    def row(self, name: str) -> Row:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def nonnegative_variables(self) -> frozenset[str]:
        """Variables pinned to ``>= 0`` by a single-variable row."""
        out = set()
        for coeffs, rhs in _upper_rows(self.rows):
            if rhs == 0 and len(coeffs) == 1:
                (v, c), = coeffs.items()
                if c < 0:
                    out.add(v)
        return frozenset(out)


_CANDIDATES = ("a", "b", "c")


def _family(prefix: str) -> tuple[str, ...]:
    return (
        f"{prefix}_exp_leaf",
        f"{prefix}_match",
        f"{prefix}_match0",
        f"{prefix}_match1",
        f"{prefix}_match2",
        f"{prefix}_pack",
    )


def build_polyhedron(
    rho: RatioLike, eps: RatioLike, eps_prime: RatioLike
) -> RationalLP:
    """Worst-case system for the three candidate builders at ratio ``rho``.

    Variables, all scaled by the path count: ``opt_cover`` and ``cost`` are
    the relaxation optimum and the cheapest candidate's cost; ``opt_lonely``
    is the endpoints an optimal track packing leaves uncovered and
    ``opt_tracks{1,2,3}`` its tracks by how many paths they touch; each
    candidate family ``a_*``/``b_*``/``c_*`` carries its matching size, the
    split of matching links by how many optimal single-link tracks they meet,
    its packed three-link tracks, and its expensive leaves.

    ``eps`` is the packing heuristic's slack (guarantee 3/(5+eps)) and
    ``eps_prime`` the degenerate-path fraction.  The system is empty exactly
    when no run can be ``rho`` times the relaxation optimum or worse.
    """
    rho = _rat(rho)
    eps = _rat(eps)
    eps_prime = _rat(eps_prime)
    if eps < 0 or eps_prime < 0:
        raise ValueError("slack parameters must be nonnegative")
    pack_rate = Fraction(3) / (5 + eps)

    variables = (
        "opt_cover",
        "cost",
        "opt_lonely",
        "opt_tracks1",
        "opt_tracks2",
        "opt_tracks3",
        *_family("a"),
        *_family("b"),
        *_family("c"),
    )
    order = {v: i for i, v in enumerate(variables)}

    def row(name: str, coeffs: Mapping[str, RatioLike], sense: Sense, rhs: RatioLike) -> Row:
        pairs = tuple(
            sorted(((v, _rat(c)) for v, c in coeffs.items()), key=lambda p: order[p[0]])
        )
        return Row(name, pairs, sense, _rat(rhs))

    credit_rhs = 3 + eps_prime / 2
    rows = [
        # Optimal side: every track saves one link over the trivial cover,
        # and covered endpoints are conserved.
        row(
            "cover_lower_bound",
            {"opt_cover": 1, "opt_tracks1": 1, "opt_tracks2": 1, "opt_tracks3": 1},
            ">=",
            2,
        ),
        row("ratio_gap", {"cost": 1, "opt_cover": -rho}, ">=", 0),
    ]
    for p in _CANDIDATES:
        rows.append(
            row(
                f"{p}_credit_bound",
                {
                    "cost": 1,
                    f"{p}_match": Fraction(5, 4),
                    f"{p}_pack": 1,
                    f"{p}_exp_leaf": Fraction(-1, 4),
                },
                "<=",
                credit_rhs,
            )
        )
    rows += [
        row(
            "endpoint_budget",
            {"opt_lonely": 1, "opt_tracks1": 2, "opt_tracks2": 4, "opt_tracks3": 6},
            "<=",
            2,
        ),
        # Candidate a's matching is maximum, so it dominates every other
        # matching in sight, and stays maximum when extended by matching
        # links disjoint from the optimal single-link tracks.
        row("a_match_beats_opt", {"a_match": 1, "opt_tracks1": -1}, ">=", 0),
        row("a_match_beats_b", {"a_match": 1, "b_match": -1}, ">=", 0),
        row("a_match_beats_c", {"a_match": 1, "c_match": -1}, ">=", 0),
        row(
            "a_match_extends_own_disjoint",
            {"a_match": 1, "opt_tracks1": -1, "a_match0": -1},
            ">=",
            0,
        ),
        row(
            "a_match_extends_b_disjoint",
            {"a_match": 1, "opt_tracks1": -1, "b_match0": -1},
            ">=",
            0,
        ),
        # Candidate b's budgeted matching still dominates the optimal
        # single-link tracks, which respect any expensive-link budget.
        row("b_match_beats_opt", {"b_match": 1, "opt_tracks1": -1}, ">=", 0),
    ]
    for p in _CANDIDATES:
        rows.append(
            row(
                f"{p}_exp_leaf_cap",
                {f"{p}_match": 1, f"{p}_exp_leaf": -1},
                ">=",
                0,
            )
        )
    rows.append(
        row("lonely_covers_b_exp", {"opt_lonely": 1, "b_exp_leaf": -1}, ">=", 0)
    )
    for p in ("a", "b"):
        rows.append(
            row(
                f"{p}_match_split",
                {
                    f"{p}_match": 1,
                    f"{p}_match0": -1,
                    f"{p}_match1": -1,
                    f"{p}_match2": -1,
                },
                "==",
                0,
            )
        )
    # Packing guarantees: after a matching knocks out elements, the packing
    # heuristic still recovers a 3/(5+eps) share of what survives.
    for p in ("a", "b"):
        rows.append(
            row(
                f"{p}_pack_guarantee",
                {
                    f"{p}_pack": 1,
                    f"{p}_match0": 2 * pack_rate,
                    f"{p}_match1": pack_rate,
                    "opt_tracks2": -pack_rate,
                },
                ">=",
                0,
            )
        )
    rows.append(
        row(
            "c_pack_guarantee",
            {
                "c_match": 1,
                "c_pack": 1,
                "opt_tracks1": -pack_rate,
                "opt_tracks2": -pack_rate,
            },
            ">=",
            0,
        )
    )
    for v in variables:
        if v in ("opt_cover", "cost"):
            continue
        rows.append(row(f"nonneg_{v}", {v: 1}, ">=", 0))

    return RationalLP(variables, tuple(rows), rho, eps, eps_prime)


def build_fap_polyhedron(eps: RatioLike, rho: RatioLike | None = None) -> RationalLP:
    """Reduced system for the budgeted-matching candidate alone.

    Only two substantive inequalities survive the reduction: the optimum is
    at least ``3/2 - b_match/2 + b_exp_leaf/4`` and the candidate costs at
    most ``5/2 - 3*b_match/4 + b_exp_leaf/4`` plus half the degenerate-path
    fraction ``eps``.  The additive allowance of the final bound (one unit
    per component the input is short of connected) is stripped before the
    ratio is formed, which is how the closed form in :func:`fap_ratio` reads.

    The matching cap ``b_match <= 1`` is part of the variable domain (one
    matching link consumes two of the two-per-path endpoints); without it the
    two headline rows alone would admit arbitrarily large matchings and the
    system would say nothing.  Pass ``rho`` to add the ``cost >= rho * opt``
    row and make :func:`is_empty` meaningful; the boundary sits at
    ``7/4 + eps/2``, inside the advertised ``7/4 + eps``.
    """
    eps = _rat(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    variables = ("opt", "cost", "b_exp_leaf", "b_match")
    order = {v: i for i, v in enumerate(variables)}

    def row(name: str, coeffs: Mapping[str, RatioLike], sense: Sense, rhs: RatioLike) -> Row:
        pairs = tuple(
            sorted(((v, _rat(c)) for v, c in coeffs.items()), key=lambda p: order[p[0]])
        )
        return Row(name, pairs, sense, _rat(rhs))

    rows = [
        row(
            "opt_lower_reduced",
            {"opt": 1, "b_match": Fraction(1, 2), "b_exp_leaf": Fraction(-1, 4)},
            ">=",
            Fraction(3, 2),
        ),
        row(
            "b_credit_bound",
            {"cost": 1, "b_match": Fraction(3, 4), "b_exp_leaf": Fraction(-1, 4)},
            "<=",
            Fraction(5, 2) + eps / 2,
        ),
        row("b_match_cap", {"b_match": 1}, "<=", 1),
        row("nonneg_b_exp_leaf", {"b_exp_leaf": 1}, ">=", 0),
        row("nonneg_b_match", {"b_match": 1}, ">=", 0),
    ]
    rho_frac = None
    if rho is not None:
        rho_frac = _rat(rho)
        rows.insert(1, row("ratio_gap", {"cost": 1, "opt": -rho_frac}, ">=", 0))
    return RationalLP(variables, tuple(rows), rho_frac, eps, None)


# -- emptiness ---------------------------------------------------------------


def _upper_rows(rows: Iterable[Row]) -> list[tuple[dict[str, Fraction], Fraction]]:
    """All constraints as ``coeffs . x <= rhs``; equalities become two rows."""
    out: list[tuple[dict[str, Fraction], Fraction]] = []
    for r in rows:
        coeffs = {v: c for v, c in r.coeffs if c != 0}
        if r.sense in ("<=", "=="):
            out.append((dict(coeffs), r.rhs))
        if r.sense in (">=", "=="):
            out.append(({v: -c for v, c in coeffs.items()}, -r.rhs))
    return out


def _phase1_feasible(a: list[list[Fraction]], b: list[Fraction]) -> bool:
    """Is ``{x >= 0 : a.x <= b}`` nonempty?  Exact simplex, Bland's rule."""
    m = len(a)
    n = len(a[0]) if m else 0
    zero, one = Fraction(0), Fraction(1)
    flips = [i for i in range(m) if b[i] < 0]
    if not flips:
        return True
    width = n + m + len(flips) + 1
    tab: list[list[Fraction]] = []
    basis: list[int] = []
    art_cols: list[int] = []
    next_art = n + m
    for i in range(m):
        sgn = -1 if b[i] < 0 else 1
        rw = [zero] * width
        for j in range(n):
            if a[i][j]:
                rw[j] = a[i][j] * sgn
        rw[n + i] = Fraction(sgn)
        rw[-1] = b[i] * sgn
        if sgn < 0:
            rw[next_art] = one
            basis.append(next_art)
            art_cols.append(next_art)
            next_art += 1
        else:
            basis.append(n + i)
        tab.append(rw)
    # Canonical reduced-cost row for: minimize the sum of artificials.
    cost = [zero] * width
    for c in art_cols:
        cost[c] = one
    for i, bv in enumerate(basis):
        if cost[bv]:
            f = cost[bv]
            cost = [cj - f * tij for cj, tij in zip(cost, tab[i])]
    while True:
        enter = next((j for j in range(width - 1) if cost[j] < 0), None)
        if enter is None:
            break
        pivot = -1
        best: Fraction | None = None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = tab[i][-1] / tab[i][enter]
                if (
                    best is None
                    or ratio < best
                    or (ratio == best and basis[i] < basis[pivot])
                ):
                    best, pivot = ratio, i
        if pivot < 0:
            raise RuntimeError("phase-1 objective unbounded; system is inconsistent")
        prow = tab[pivot]
        pval = prow[enter]
        tab[pivot] = prow = [x / pval for x in prow]
        for i in range(m):
            f = tab[i][enter]
            if i != pivot and f:
                tab[i] = [x - f * y for x, y in zip(tab[i], prow)]
        if cost[enter]:
            f = cost[enter]
            cost = [x - f * y for x, y in zip(cost, prow)]
        basis[pivot] = enter
    return cost[-1] == 0


def _column_layout(lp: RationalLP) -> list[tuple[str, int]]:
    nonneg = lp.nonnegative_variables()
    cols: list[tuple[str, int]] = []
    for v in lp.variables:
        cols.append((v, 1))
        if v not in nonneg:
            cols.append((v, -1))
    return cols


def _standard_form(
    lp: RationalLP,
) -> tuple[list[list[Fraction]], list[Fraction], list[tuple[str, int]]]:
    nonneg = lp.nonnegative_variables()
    cols = _column_layout(lp)
    a: list[list[Fraction]] = []
    b: list[Fraction] = []
    for coeffs, rhs in _upper_rows(lp.rows):
        if rhs == 0 and len(coeffs) == 1:
            (v, c), = coeffs.items()
            if c < 0 and v in nonneg:
                continue  # absorbed into the column layout
        a.append([coeffs.get(v, Fraction(0)) * s for v, s in cols])
        b.append(rhs)
    return a, b, cols


def is_empty(lp: RationalLP) -> bool:
    """Exact emptiness of the constraint set, no tolerances anywhere."""
    a, b, _ = _standard_form(lp)
    return not _phase1_feasible(a, b)


def feasible_point(lp: RationalLP) -> dict[str, Fraction] | None:
    """A point satisfying every row, or ``None`` if the system is empty.

    Emptiness is decided exactly; the returned point is one the simplex
    happens to end on, not otherwise canonical.
    """
    a, b, cols = _standard_form(lp)
    # Re-run phase 1 but keep the tableau to read the point back out.
    m = len(a)
    n = len(cols)
    values = {v: Fraction(0) for v in lp.variables}
    if m == 0:
        return values
    if not _phase1_feasible(a, b):
        return None
    # The quick exit above answered emptiness; to extract coordinates, solve
    # again tracking the basis explicitly.
    zero, one = Fraction(0), Fraction(1)
    flips = [i for i in range(m) if b[i] < 0]
    width = n + m + len(flips) + 1
    tab: list[list[Fraction]] = []
    basis: list[int] = []
    art_cols: list[int] = []
    next_art = n + m
    for i in range(m):
        sgn = -1 if b[i] < 0 else 1
        rw = [zero] * width
        for j in range(n):
            if a[i][j]:
                rw[j] = a[i][j] * sgn
        rw[n + i] = Fraction(sgn)
        rw[-1] = b[i] * sgn
        if sgn < 0:
            rw[next_art] = one
            basis.append(next_art)
            art_cols.append(next_art)
            next_art += 1
        else:
            basis.append(n + i)
        tab.append(rw)
    cost = [zero] * width
    for c in art_cols:
        cost[c] = one
    for i, bv in enumerate(basis):
        if cost[bv]:
            f = cost[bv]
            cost = [cj - f * tij for cj, tij in zip(cost, tab[i])]
    while True:
        enter = next((j for j in range(width - 1) if cost[j] < 0), None)
        if enter is None:
            break
        pivot = -1
        best: Fraction | None = None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = tab[i][-1] / tab[i][enter]
                if (
                    best is None
                    or ratio < best
                    or (ratio == best and basis[i] < basis[pivot])
                ):
                    best, pivot = ratio, i
        if pivot < 0:
            raise RuntimeError("phase-1 objective unbounded; system is inconsistent")
        prow = tab[pivot]
        pval = prow[enter]
        tab[pivot] = prow = [x / pval for x in prow]
        for i in range(m):
            f = tab[i][enter]
            if i != pivot and f:
                tab[i] = [x - f * y for x, y in zip(tab[i], prow)]
        if cost[enter]:
            f = cost[enter]
            cost = [x - f * y for x, y in zip(cost, prow)]
        basis[pivot] = enter
    for i, bv in enumerate(basis):
        if bv < n:
            var, sgn = cols[bv]
            values[var] += sgn * tab[i][-1]
    return values


def max_rho(
    eps: RatioLike,
    eps_prime: RatioLike,
    precision: RatioLike = Fraction(1, 10_000),
) -> Fraction:
    """Largest ratio (within ``precision``) at which the system stays nonempty.

    Emptiness is monotone in the ratio: the ratio appears in one row only,
    as a lower bound on ``cost`` that tightens as it grows.  The initial
    bracket is asserted at both ends, so a monotonicity violation would
    surface as a failed bracket rather than a silently wrong answer.
    """
    eps = _rat(eps)
    eps_prime = _rat(eps_prime)
    precision = _rat(precision)
    if precision <= 0:
        raise ValueError("precision must be positive")
    lo, hi = Fraction(1), Fraction(4)
    if is_empty(build_polyhedron(lo, eps, eps_prime)):
        raise AssertionError("ratio 1 should always be achievable")
    if not is_empty(build_polyhedron(hi, eps, eps_prime)):
        raise AssertionError("ratio 4 should always be out of reach")
    while hi - lo > precision:
        mid = (lo + hi) / 2
        if is_empty(build_polyhedron(mid, eps, eps_prime)):
            hi = mid
        else:
            lo = mid
    return lo


# -- closed-form side of the reduced system ----------------------------------


def fap_ratio(b_match: RatioLike, b_exp_leaf: RatioLike) -> Fraction:
    """Cost-to-optimum ratio of the reduced system at the given statistics.

    Both bounds are tight lines, so the ratio is their quotient:
    ``(5/2 - 3b/4 + e/4) / (3/2 - b/2 + e/4)`` with the degenerate-path and
    additive terms stripped.
    """
    b = _rat(b_match)
    e = _rat(b_exp_leaf)
    num = Fraction(5, 2) - Fraction(3, 4) * b + Fraction(1, 4) * e
    den = Fraction(3, 2) - Fraction(1, 2) * b + Fraction(1, 4) * e
    if den <= 0:
        raise ValueError("optimum lower bound must stay positive")
    return num / den


def fap_max_ratio() -> tuple[Fraction, tuple[Fraction, Fraction]]:
    """Maximum of :func:`fap_ratio` over its domain, with the maximizer.

    The ratio falls as expensive leaves grow (the numerator's quarter beats
    the denominator's quarter only below ratio one) and climbs with the
    matching while expensive leaves stay under two, so the maximum sits at a
    corner of ``b_match in [0, 1], b_exp_leaf = 0``; both corners are
    evaluated exactly rather than argued.
    """
    corners = [
        (Fraction(0), Fraction(0)),
        (Fraction(1), Fraction(0)),
    ]
    best = max(corners, key=lambda be: fap_ratio(*be))
    return fap_ratio(*best), best


# -- export ------------------------------------------------------------------


def export_lp(lp: RationalLP) -> str:
    """Plain-text rendering: ``max 0`` plus every named row, exact fractions.

    The dialect is the common LP-file shape (comment lines, ``subject to``,
    a ``bounds`` section marking free variables) so the system can be pasted
    into an external solver for cross-checking.
    """
    lines = ["\\ exact rational feasibility system"]
    if lp.rho is not None:
        lines.append(f"\\ rho = {lp.rho}")
    lines.append(f"\\ eps = {lp.eps}")
    if lp.eps_prime is not None:
        lines.append(f"\\ eps' = {lp.eps_prime}")
    lines += ["max 0", "subject to"]
    for r in lp.rows:
        terms: list[str] = []
        for v, c in r.coeffs:
            if c == 0:
                continue
            mag = abs(c)
            body = v if mag == 1 else f"{mag} {v}"
            if not terms:
                terms.append(body if c > 0 else f"- {body}")
            else:
                terms.append(f"{'+' if c > 0 else '-'} {body}")
        op = "=" if r.sense == "==" else r.sense
        lines.append(f"  {r.name}: {' '.join(terms)} {op} {r.rhs}")
    free = [v for v in lp.variables if v not in lp.nonnegative_variables()]
    if free:
        lines.append("bounds")
        lines += [f"  {v} free" for v in free]
    lines.append("end")
    return "\n".join(lines) + "\n"
