import itertools
import random
from fractions import Fraction

import pytest

from pathaug.core import Link, link
from pathaug.matching import (
    MatchingProblem,
    max_matching,
    max_matching_bounded_expensive,
    min_cost_matching_exact_size,
)
from pathaug.oracle import Infeasible


def random_problem(rng: random.Random, max_n: int = 10, p: float = 0.4) -> MatchingProblem:
    n = rng.randint(2, max_n)
    edges = tuple(
        link(u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if rng.random() < p
    )
    return MatchingProblem(n, edges)


def brute_max_size(problem: MatchingProblem) -> int:
    """Reference oracle: branch over edges, tracking used vertices."""
    edges = problem.edges
    best = 0

    def rec(start: int, used: frozenset[int], size: int) -> None:
        nonlocal best
        best = max(best, size)
        for j in range(start, len(edges)):
            u, v = edges[j]
            if u not in used and v not in used:
                rec(j + 1, used | {u, v}, size + 1)

    rec(0, frozenset(), 0)
    return best


def brute_min_cost(problem: MatchingProblem, k: int):
    """Reference oracle: cheapest size-k matching by direct enumeration."""
    best = None
    for combo in itertools.combinations(problem.edges, k):
        touched = [w for e in combo for w in e]
        if len(set(touched)) == 2 * k:
            c = sum(problem.cost_of(e) for e in combo)
            if best is None or c < best:
                best = c
    return best


def assert_is_matching(problem: MatchingProblem, m: frozenset[Link]) -> None:
    assert m <= set(problem.edges)
    touched = [w for e in m for w in e]
    assert len(touched) == len(set(touched))


class TestProblemValidation:
    def test_rejects_unnormalized_edge(self):
        with pytest.raises(ValueError):
            MatchingProblem(3, ((2, 1),))

    def test_rejects_duplicate_edge(self):
        with pytest.raises(ValueError):
            MatchingProblem(3, (link(0, 1), link(1, 0)))

    def test_rejects_out_of_range_vertex(self):
        with pytest.raises(ValueError):
            MatchingProblem(2, (link(0, 5),))

    def test_rejects_stray_cost_and_flags(self):
        with pytest.raises(ValueError):
            MatchingProblem(3, (link(0, 1),), cost={link(1, 2): 1})
        with pytest.raises(ValueError):
            MatchingProblem(3, (link(0, 1),), cost={link(0, 1): -1})
        with pytest.raises(ValueError):
            MatchingProblem(3, (link(0, 1),), expensive=frozenset({link(1, 2)}))


class TestMaxMatching:
    def test_triangle(self):
        m = max_matching(MatchingProblem(3, (link(0, 1), link(1, 2), link(0, 2))))
        assert len(m) == 1

    def test_odd_cycle(self):
        c9 = MatchingProblem(9, tuple(link(i, (i + 1) % 9) for i in range(9)))
        assert len(max_matching(c9)) == 4

    def test_empty_graph(self):
        assert max_matching(MatchingProblem(5, ())) == frozenset()

    def test_matches_brute_force(self, rng):
        for _ in range(80):
            problem = random_problem(rng, max_n=10)
            m = max_matching(problem)
            assert_is_matching(problem, m)
            assert len(m) == brute_max_size(problem)


class TestMinCostExactSize:
    PATH = MatchingProblem(
        3, (link(0, 1), link(1, 2)), cost={link(0, 1): 3, link(1, 2): 1}
    )

    def test_picks_the_cheap_edge(self):
        assert min_cost_matching_exact_size(self.PATH, 1) == {link(1, 2)}

    def test_size_zero(self):
        assert min_cost_matching_exact_size(self.PATH, 0) == frozenset()

    def test_negative_size_rejected(self):
        with pytest.raises(ValueError):
            min_cost_matching_exact_size(self.PATH, -1)

    def test_too_many_vertices_needed(self):
        with pytest.raises(Infeasible):
            min_cost_matching_exact_size(self.PATH, 2)

    def test_size_blocked_by_structure(self):
        star = MatchingProblem(4, (link(0, 1), link(0, 2), link(0, 3)))
        with pytest.raises(Infeasible):
            min_cost_matching_exact_size(star, 2)

    def test_fraction_costs(self):
        problem = MatchingProblem(
            4,
            (link(0, 1), link(2, 3), link(0, 2), link(1, 3)),
            cost={
                link(0, 1): Fraction(1, 3),
                link(2, 3): Fraction(1, 2),
                link(0, 2): 2,
                link(1, 3): 2,
            },
        )
        m = min_cost_matching_exact_size(problem, 2)
        assert sum(problem.cost_of(e) for e in m) == Fraction(5, 6)

    def test_matches_brute_force_for_every_size(self, rng):
        for _ in range(40):
            problem = random_problem(rng, max_n=8)
            costed = MatchingProblem(
                problem.n,
                problem.edges,
                cost={e: rng.randint(0, 9) for e in problem.edges},
            )
            for k in range(len(max_matching(problem)) + 1):
                want = brute_min_cost(costed, k)
                if want is None:
                    with pytest.raises(Infeasible):
                        min_cost_matching_exact_size(costed, k)
                    continue
                m = min_cost_matching_exact_size(costed, k)
                assert_is_matching(costed, m)
                assert len(m) == k
                assert sum(costed.cost_of(e) for e in m) == want

    def test_cost_curve_is_convex(self, rng):
        # The cheapest size-k matching cost, as a function of k, never gains
        # a cheaper marginal edge after a dearer one.
        for _ in range(25):
            problem = random_problem(rng, max_n=9, p=0.5)
            costed = MatchingProblem(
                problem.n,
                problem.edges,
                cost={e: rng.randint(0, 9) for e in problem.edges},
            )
            top = len(max_matching(problem))
            curve = [
                sum(
                    costed.cost_of(e)
                    for e in min_cost_matching_exact_size(costed, k)
                )
                for k in range(top + 1)
            ]
            steps = [b - a for a, b in itertools.pairwise(curve)]
            assert steps == sorted(steps)


class TestBoundedExpensive:
    SQUARE = MatchingProblem(
        4,
        (link(0, 1), link(1, 2), link(2, 3), link(0, 3)),
        expensive=frozenset({link(0, 1), link(2, 3)}),
    )

    def test_budget_is_respected(self, rng):
        for _ in range(40):
            base = random_problem(rng, max_n=9)
            flagged = MatchingProblem(
                base.n,
                base.edges,
                expensive=frozenset(e for e in base.edges if rng.random() < 0.5),
            )
            for q in (0, 1, 2):
                m = max_matching_bounded_expensive(flagged, q)
                assert_is_matching(flagged, m)
                assert sum(1 for e in m if e in flagged.expensive) <= q

    def test_size_is_monotone_in_budget(self, rng):
        for _ in range(40):
            base = random_problem(rng, max_n=9)
            flagged = MatchingProblem(
                base.n,
                base.edges,
                expensive=frozenset(e for e in base.edges if rng.random() < 0.5),
            )
            sizes = [
                len(max_matching_bounded_expensive(flagged, q)) for q in range(4)
            ]
            assert sizes == sorted(sizes)

    def test_unlimited_budget_recovers_the_maximum(self, rng):
        for _ in range(30):
            base = random_problem(rng, max_n=9)
            flagged = MatchingProblem(
                base.n,
                base.edges,
                expensive=frozenset(base.edges),
            )
            m = max_matching_bounded_expensive(flagged, base.n)
            assert len(m) == len(max_matching(base))

    def test_matches_brute_force(self, rng):
        def brute(problem: MatchingProblem, q: int) -> int:
            best = 0

            def rec(start, used, size, spent):
                nonlocal best
                best = max(best, size)
                for j in range(start, len(problem.edges)):
                    u, v = problem.edges[j]
                    price = 1 if problem.edges[j] in problem.expensive else 0
                    if u not in used and v not in used and spent + price <= q:
                        rec(j + 1, used | {u, v}, size + 1, spent + price)

            rec(0, frozenset(), 0, 0)
            return best

        for _ in range(40):
            base = random_problem(rng, max_n=8)
            flagged = MatchingProblem(
                base.n,
                base.edges,
                expensive=frozenset(e for e in base.edges if rng.random() < 0.4),
            )
            for q in (0, 1, 2):
                got = max_matching_bounded_expensive(flagged, q)
                assert len(got) == brute(flagged, q)

    def test_square_example(self):
        m0 = max_matching_bounded_expensive(self.SQUARE, 0)
        assert len(m0) == 2
        assert not any(e in self.SQUARE.expensive for e in m0)

    def test_negative_budget_rejected(self):
        with pytest.raises(ValueError):
            max_matching_bounded_expensive(self.SQUARE, -1)
