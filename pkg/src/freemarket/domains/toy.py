"""Two-letter string domain.

Goods are strings over {A, B}. Concatenation a+b is a valid combination iff
the junction characters differ and the result fits under the length cap, and
every valid junction releases one unit of energy (delta_e = -1). Since both
parts are themselves junction-valid, every reachable good is an alternating
string, which keeps the kind space small and the depth structure sharp.
"""

from __future__ import annotations

from collections import Counter
from typing import Optional

from ..core import GoodKind, make_composition
from .base import DomainRules, ValidationContext

ALPHABET = ("A", "B")
DEFAULT_L_MAX = 12

_PRIMITIVES = {c: GoodKind.primitive(c) for c in ALPHABET}


def make_good(s: str) -> GoodKind:
    """GoodKind for a letter string; single letters are the primitives."""
    if not s or any(c not in ALPHABET for c in s):
        raise ValueError(f"not a toy good: {s!r}")
    if len(s) == 1:
        return _PRIMITIVES[s]
    return GoodKind(s, make_composition(Counter(s)))


class ToyDomain(DomainRules):
    name = "toy"

    def __init__(self, l_max: int = DEFAULT_L_MAX):
        if l_max < 2:
            raise ValueError("toy.l_max must be at least 2")
        self.l_max = int(l_max)

    def primitives(self) -> tuple[GoodKind, ...]:
        return tuple(_PRIMITIVES[c] for c in ALPHABET)

    def initial_allocation(self, n_agents, rng) -> list[list[GoodKind]]:
        # one primitive each, letters balanced then dealt in shuffled order
        letters = ["A"] * (n_agents - n_agents // 2) + ["B"] * (n_agents // 2)
        order = rng.permutation(n_agents)
        return [[_PRIMITIVES[letters[int(i)]]] for i in order]

    def combine(self, a: GoodKind, b: GoodKind) -> Optional[tuple[GoodKind, float]]:
        sa, sb = a.kind_id, b.kind_id
        if len(sa) + len(sb) > self.l_max:
            return None
        if sa[-1] == sb[0]:
            return None
        return make_good(sa + sb), -1.0

    def validate(self, product, delta_e, context: ValidationContext) -> bool:
        return delta_e < 0

    def params(self) -> dict:
        return {"toy.l_max": self.l_max}


def assembly_index_oracle(kind: GoodKind | str, max_len: int = 8) -> int:
    """Exact minimum number of join operations building the string from
    {A, B}, with previously built sub-objects reusable at no cost.

    Exhaustive iterative-deepening search; any useful intermediate is a
    contiguous substring of the target, which bounds the state space.
    Restricted to short strings (exponential otherwise).
    """
    s = kind if isinstance(kind, str) else kind.kind_id
    if not s or any(c not in ALPHABET for c in s):
        raise ValueError(f"not a toy good: {s!r}")
    if len(s) > max_len:
        raise ValueError(f"oracle limited to length {max_len}, got {len(s)}")
    if len(s) == 1:
        return 0

    subs = {s[i:j] for i in range(len(s)) for j in range(i + 1, len(s) + 1)}

    def dfs(built: frozenset[str], joins_left: int) -> bool:
        if s in built:
            return True
        if joins_left == 0:
            return False
        # longest buildable string doubles per join at best
        if max(len(x) for x in built) * (2 ** joins_left) < len(s):
            return False
        options = sorted(built)
        seen_products = set()
        for x in options:
            for y in options:
                p = x + y
                if p not in subs or p in built or p in seen_products:
                    continue
                seen_products.add(p)
                if dfs(built | {p}, joins_left - 1):
                    return True
        return False

    base = frozenset(c for c in ALPHABET if c in subs)
    for joins in range(1, len(s)):
        if dfs(base, joins):
            return joins
    return len(s) - 1
