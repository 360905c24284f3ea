"""Ring-market simulation engine.

Agents sit on a ring and hold inventories of good instances. Every step runs
five phases in fixed order:

  1. discover  - a global budget of combination attempts; validated proposals
                 enter the recipe book, consume their inputs, and leave one
                 witness sample with the discovering agent
  2. demand    - a fresh demand ledger: consumer wishlists (one kind per
                 agent) plus derived input demand from every firm (the
                 demand cascade)
  3. trade     - firms short of stock (below one batch, or below the wishlist
                 demand seen last step) buy inputs and produce (atomically;
                 partial purchases roll back), then consumers buy their
                 wishlist goods, which join the buyer's inventory where goods
                 persist, and leave the system where they do not
  4. compete   - firms with too long an unsold streak close (sole producers
                 can be protected); idle agents open firms where they see
                 unmet, locally sourceable consumer demand
  5. decay     - non-primitive instances decompose back into recipe inputs
                 with probability proportional to their depth

All randomness flows through one seeded PCG64 stream, so a (config, domain,
seed) triple replays byte-identically.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .core import GoodKind, RecipeBook, decomposition_parts
from .domains.base import DomainRules, ValidationContext
from .observer import ObservationRecord, observe

DEMAND_MODES = ("gfcf", "blind")

_PERM_CACHE: dict[int, list[tuple[int, ...]]] = {}


def _prov_key(p: Optional[int]) -> int:
    return -1 if p is None else p


@dataclass(frozen=True)
class SimulationConfig:
    n_agents: int = 200
    ring_radius: int = 2
    discovery_budget: int = 10
    patience: int = 5
    decay_coefficient: float = 0.01
    demand_mode: str = "gfcf"
    supplier_memory: bool = False
    witness_protection: bool = True
    max_steps: int = 500
    seed: int = 1
    domain: str = "toy"
    domain_params: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.ring_radius < 1:
            raise ValueError("ring_radius must be >= 1")
        if self.n_agents < 2 * self.ring_radius + 1:
            raise ValueError(
                f"n_agents must be >= 2*ring_radius+1 "
                f"({self.n_agents} < {2 * self.ring_radius + 1})"
            )
        if self.discovery_budget < 0:
            raise ValueError("discovery_budget must be >= 0")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if not 0.0 <= self.decay_coefficient <= 1.0:
            raise ValueError("decay_coefficient must be in [0, 1]")
        if self.demand_mode not in DEMAND_MODES:
            raise ValueError(f"demand_mode must be one of {DEMAND_MODES}")
        if self.max_steps < 0:
            raise ValueError("max_steps must be >= 0")


class Inventory:
    """Multiset of good instances grouped by (kind, provenance)."""

    __slots__ = ("_kinds", "_totals", "total")

    def __init__(self) -> None:
        self._kinds: dict[GoodKind, dict[Optional[int], int]] = {}
        self._totals: dict[GoodKind, int] = {}
        self.total = 0

    def add(self, kind: GoodKind, provenance: Optional[int] = None, count: int = 1) -> None:
        provs = self._kinds.setdefault(kind, {})
        provs[provenance] = provs.get(provenance, 0) + count
        self._totals[kind] = self._totals.get(kind, 0) + count
        self.total += count

    def remove(self, kind: GoodKind, provenance: Optional[int] = None, count: int = 1) -> None:
        provs = self._kinds.get(kind)
        if provs is None or provs.get(provenance, 0) < count:
            raise ValueError(f"inventory lacks {count}x {kind.kind_id!r}")
        provs[provenance] -= count
        if provs[provenance] == 0:
            del provs[provenance]
        self._totals[kind] -= count
        if self._totals[kind] == 0:
            del self._totals[kind]
            self._kinds.pop(kind, None)
        self.total -= count

    def count_of(self, kind: GoodKind) -> int:
        return self._totals.get(kind, 0)

    def take_of_kind(self, kind: GoodKind, preferred: Optional[int] = None) -> Optional[int]:
        """Remove one instance of kind; returns the provenance taken. The
        preferred provenance goes first, then provenance-sorted order."""
        provs = self._kinds.get(kind)
        if not provs:
            raise ValueError(f"inventory lacks {kind.kind_id!r}")
        if preferred is not None and preferred in provs:
            prov = preferred
        else:
            prov = min(provs, key=_prov_key)
        self.remove(kind, prov)
        return prov

    def sample(self, rng: np.random.Generator) -> tuple[GoodKind, Optional[int]]:
        """Uniformly random instance, as its (kind, provenance) group."""
        idx = int(rng.integers(self.total))
        for kind in sorted(self._kinds, key=lambda k: k.kind_id):
            provs = self._kinds[kind]
            for prov in sorted(provs, key=_prov_key):
                c = provs[prov]
                if idx < c:
                    return kind, prov
                idx -= c
        raise RuntimeError("inventory sample out of range")

    def groups_sorted(self) -> list[tuple[GoodKind, Optional[int], int]]:
        out = []
        for kind in sorted(self._kinds, key=lambda k: k.kind_id):
            provs = self._kinds[kind]
            for prov in sorted(provs, key=_prov_key):
                out.append((kind, prov, provs[prov]))
        return out

    def kinds_held(self) -> list[GoodKind]:
        return list(self._totals)

    def kind_counts(self) -> dict[GoodKind, int]:
        """Live kind -> count view (treat as read-only)."""
        return self._totals


@dataclass
class Firm:
    recipe_id: int
    opened_at: int
    unsold_streak: int = 0
    sales_this_step: int = 0


@dataclass
class Agent:
    position: int
    inventory: Inventory = field(default_factory=Inventory)
    firm: Optional[Firm] = None
    supplier_memory: dict[str, int] = field(default_factory=dict)


@dataclass
class DemandEntry:
    kind: GoodKind
    position: int
    requested: int
    satisfied: int = 0
    source: str = "wishlist"

    @property
    def unmet(self) -> int:
        return max(0, self.requested - self.satisfied)


class DemandLedger:
    """Per-step demand record, cleared at the start of every demand phase."""

    def __init__(self) -> None:
        self.entries: list[DemandEntry] = []
        self._wishlists: dict[int, list[DemandEntry]] = {}
        self._firm_entries: dict[tuple[int, GoodKind], DemandEntry] = {}

    def clear(self) -> None:
        self.entries.clear()
        self._wishlists.clear()
        self._firm_entries.clear()

    def record_wishlist(self, kind: GoodKind, position: int, qty: int) -> DemandEntry:
        e = DemandEntry(kind, position, qty, source="wishlist")
        self.entries.append(e)
        self._wishlists.setdefault(position, []).append(e)
        return e

    def record_firm(self, kind: GoodKind, position: int, qty: int) -> DemandEntry:
        e = DemandEntry(kind, position, qty, source="firm")
        self.entries.append(e)
        self._firm_entries[(position, kind)] = e
        return e

    def wishlist_entries(self, position: int) -> list[DemandEntry]:
        return self._wishlists.get(position, [])

    def firm_entry(self, position: int, kind: GoodKind) -> Optional[DemandEntry]:
        return self._firm_entries.get((position, kind))

    def unmet_by_position(self, source: Optional[str] = None
                          ) -> dict[int, dict[GoodKind, int]]:
        out: dict[int, dict[GoodKind, int]] = {}
        for e in self.entries:
            if source is not None and e.source != source:
                continue
            u = e.unmet
            if u <= 0:
                continue
            bucket = out.setdefault(e.position, {})
            bucket[e.kind] = bucket.get(e.kind, 0) + u
        return out


@dataclass
class SimulationState:
    step: int
    agents: list[Agent]
    book: RecipeBook
    ledger: DemandLedger
    rng: np.random.Generator
    primitives: tuple[GoodKind, ...]
    events: Optional[list[dict]]
    produced_last_step: dict[str, int] = field(default_factory=dict)
    attempts_last_step: int = 0
    demand_last_step: dict[str, int] = field(default_factory=dict)


def total_composition(state: SimulationState) -> Counter:
    """Summed primitive-unit composition over all inventories."""
    total: Counter = Counter()
    for agent in state.agents:
        for kind, _prov, count in agent.inventory.groups_sorted():
            for unit, n in kind.composition:
                total[unit] += n * count
    return total


class Simulation:
    """One deterministic run bound to a (config, domain) pair."""

    def __init__(self, config: SimulationConfig, domain: DomainRules,
                 *, record_events: bool = True):
        config.validate()
        self.config = config
        self.domain = domain
        rng = np.random.default_rng(config.seed & (2**64 - 1))
        agents = [Agent(i) for i in range(config.n_agents)]
        allocation = domain.initial_allocation(config.n_agents, rng)
        total_units = 0
        for agent, kinds in zip(agents, allocation):
            for kind in kinds:
                agent.inventory.add(kind, None)
                total_units += 1
        if total_units == 0:
            raise ValueError("initial allocation is empty")
        book = RecipeBook()
        for kind in domain.primitives():
            book._note_kind(kind)
        for seeded in domain.seeded_recipes():
            book.register(seeded.inputs, seeded.product, seeded.delta_e, 0,
                          product_count=seeded.product_count, seeded=True)
        self.state = SimulationState(
            step=0, agents=agents, book=book, ledger=DemandLedger(), rng=rng,
            primitives=tuple(domain.primitives()),
            events=[] if record_events else None,
        )
        n = config.n_agents
        r = config.ring_radius
        self._neighbors = [
            tuple(sorted({(i + d) % n for d in range(-r, r + 1) if d != 0}))
            for i in range(n)
        ]
        self._budget = config.discovery_budget if domain.discovery_enabled() else 0
        self._context = ValidationContext(
            temperature=domain.context_temperature(), rng=rng)
        self._conservative = domain.is_conservative()
        self._candidates_version: Optional[int] = None
        self._candidates: list[GoodKind] = []

    # ------------------------------------------------------------------
    # step loop

    def step(self) -> None:
        st = self.state
        st.step += 1
        st.produced_last_step = {}
        self.phase_discover()
        self.phase_demand()
        self.phase_trade_produce()
        self.phase_compete()
        self.phase_decay()

    def run_steps(self, n: int) -> None:
        for _ in range(n):
            self.step()

    def _event(self, type_: str, **payload) -> None:
        if self.state.events is not None:
            self.state.events.append(
                {"step": self.state.step, "type": type_, "payload": payload})

    # ------------------------------------------------------------------
    # phase 1: discovery

    def phase_discover(self) -> None:
        st = self.state
        st.attempts_last_step = 0
        if self._budget == 0:
            return
        rng = st.rng
        n = self.config.n_agents
        for _ in range(self._budget):
            st.attempts_last_step += 1
            agent = st.agents[int(rng.integers(n))]
            if agent.inventory.total == 0:
                continue
            a_kind, a_prov = agent.inventory.sample(rng)
            nbrs = self._neighbors[agent.position]
            neighbor = st.agents[nbrs[int(rng.integers(len(nbrs)))]]
            if neighbor.inventory.total == 0:
                continue
            b_kind, b_prov = neighbor.inventory.sample(rng)
            proposal = self.domain.combine(a_kind, b_kind)
            if proposal is None:
                continue
            product, delta_e = proposal
            if not self.domain.validate(product, delta_e, self._context):
                continue
            try:
                rid, new = st.book.register(
                    (a_kind, b_kind), product, delta_e, st.step)
            except ValueError:
                continue  # domain proposed a degenerate recipe; attempt spent
            agent.inventory.remove(a_kind, a_prov)
            neighbor.inventory.remove(b_kind, b_prov)
            agent.inventory.add(product, rid)
            self._event(
                "discover", agent=agent.position, neighbor=neighbor.position,
                inputs=[a_kind.kind_id, b_kind.kind_id],
                product=product.kind_id, recipe=rid, new=new)

    # ------------------------------------------------------------------
    # phase 2: demand

    def _wishlist_candidates(self) -> list[GoodKind]:
        book = self.state.book
        version = len(book)
        if self._candidates_version == version:
            return self._candidates
        products = book.product_kinds()
        if self.config.demand_mode == "blind":
            cands = list(products)
        else:  # gfcf: kinds of maximal finite depth
            depths = book.depth_map()
            best = -1
            cands = []
            for kind in products:
                d = depths.get(kind.kind_id)
                if d is None:
                    continue
                if d > best:
                    best = d
                    cands = [kind]
                elif d == best:
                    cands.append(kind)
        self._candidates_version = version
        self._candidates = cands
        return cands

    def phase_demand(self) -> None:
        st = self.state
        totals: dict[str, int] = {}
        for e in st.ledger.entries:
            if e.source != "wishlist":
                continue  # firms answer the market signal, not each other
            kid = e.kind.kind_id
            totals[kid] = totals.get(kid, 0) + e.requested
        st.demand_last_step = totals
        st.ledger.clear()
        plan = self.domain.consumer_demand(self.config.n_agents, st.step)
        if plan is not None:
            for pos in sorted(plan):
                for kind, qty in plan[pos]:
                    if qty > 0:
                        st.ledger.record_wishlist(kind, pos, qty)
        else:
            candidates = self._wishlist_candidates()
            if candidates:
                picks = st.rng.integers(0, len(candidates),
                                        size=self.config.n_agents)
                for pos, ci in enumerate(picks):
                    st.ledger.record_wishlist(candidates[int(ci)], pos, 1)
        for agent in st.agents:
            if agent.firm is not None:
                recipe = st.book.recipe(agent.firm.recipe_id)
                for kind, qty in sorted(recipe.input_counts().items(),
                                        key=lambda kv: kv[0].kind_id):
                    st.ledger.record_firm(kind, agent.position, qty)

    # ------------------------------------------------------------------
    # phase 3: trade and production

    def _shuffled(self, seq: list[int]) -> list[int]:
        k = len(seq)
        if k <= 1:
            return list(seq)
        if k <= 6:
            perms = _PERM_CACHE.get(k)
            if perms is None:
                perms = list(itertools.permutations(range(k)))
                _PERM_CACHE[k] = perms
            pick = perms[int(self.state.rng.integers(len(perms)))]
            return [seq[i] for i in pick]
        order = self.state.rng.permutation(k)
        return [seq[int(i)] for i in order]

    def _purchase_order(self, agent: Agent, kind_id: str,
                        holders: list[int]) -> list[int]:
        if not holders:
            return []
        if self.config.supplier_memory:
            m = agent.supplier_memory.get(kind_id)
            if m is not None and m in holders:
                rest = [p for p in holders if p != m]
                return [m] + self._shuffled(rest)
        return self._shuffled(holders)

    def phase_trade_produce(self) -> None:
        st = self.state
        order = [int(i) for i in st.rng.permutation(self.config.n_agents)]
        for pos in order:
            agent = st.agents[pos]
            if agent.firm is not None:
                self._firm_trade(agent)
        for pos in order:
            self._consumer_trade(st.agents[pos])

    def _wants_to_produce(self, agent: Agent, recipe) -> bool:
        """Produce to meet the market: a firm keeps at least one batch on the
        shelf and, when consumers asked for more than that last step, keeps
        producing until stock covers that level. Only wishlist demand sets
        the target; firms' own input requests are met through direct
        purchases, not by inflating everyone's production quota."""
        stock = agent.inventory.count_of(recipe.product)
        target = max(recipe.product_count,
                     self.state.demand_last_step.get(recipe.product.kind_id, 0))
        return stock < target

    def _firm_trade(self, agent: Agent) -> None:
        st = self.state
        recipe = st.book.recipe(agent.firm.recipe_id)
        if not self._wants_to_produce(agent, recipe):
            return
        needs = recipe.input_counts()
        own_staged: list[tuple[GoodKind, Optional[int]]] = []
        bought: list[tuple[Agent, GoodKind, Optional[int], bool]] = []
        satisfied: list[tuple[DemandEntry, int]] = []
        pending: list[dict] = []
        shortfall = False
        for kind in sorted(needs, key=lambda k: k.kind_id):
            qty = needs[kind]
            entry = st.ledger.firm_entry(agent.position, kind)
            take_own = min(qty, agent.inventory.count_of(kind))
            for _ in range(take_own):
                own_staged.append((kind, agent.inventory.take_of_kind(kind)))
            if entry is not None and take_own:
                entry.satisfied += take_own
                satisfied.append((entry, take_own))
            qty -= take_own
            if qty == 0:
                continue
            holders = [p for p in self._neighbors[agent.position]
                       if st.agents[p].inventory.count_of(kind) > 0]
            for pos in self._purchase_order(agent, kind.kind_id, holders):
                seller = st.agents[pos]
                while qty > 0 and seller.inventory.count_of(kind) > 0:
                    preferred = seller.firm.recipe_id if seller.firm else None
                    prov = seller.inventory.take_of_kind(kind, preferred)
                    sale = seller.firm is not None and prov == seller.firm.recipe_id
                    if sale:
                        seller.firm.sales_this_step += 1
                    if entry is not None:
                        entry.satisfied += 1
                        satisfied.append((entry, 1))
                    bought.append((seller, kind, prov, sale))
                    pending.append(dict(
                        buyer=agent.position, seller=pos, kind=kind.kind_id,
                        provenance=prov, purpose="input", sale=sale))
                    qty -= 1
                if qty == 0:
                    break
            if qty > 0:
                shortfall = True
                break
        if shortfall:
            # atomic production: every purchase returns, every mark unwinds
            for seller, kind, prov, sale in bought:
                seller.inventory.add(kind, prov)
                if sale:
                    seller.firm.sales_this_step -= 1
            for kind, prov in own_staged:
                agent.inventory.add(kind, prov)
            for entry, n in satisfied:
                entry.satisfied -= n
            return
        agent.inventory.add(recipe.product, recipe.recipe_id,
                            recipe.product_count)
        st.produced_last_step[recipe.product.kind_id] = (
            st.produced_last_step.get(recipe.product.kind_id, 0)
            + recipe.product_count)
        if self.config.supplier_memory:
            for seller, kind, _prov, _sale in bought:
                agent.supplier_memory[kind.kind_id] = seller.position
        for payload in pending:
            self._event("trade", **payload)
        self._event("produce", agent=agent.position, recipe=recipe.recipe_id,
                    kind=recipe.product.kind_id, count=recipe.product_count)

    def _consumer_trade(self, agent: Agent) -> None:
        st = self.state
        for entry in st.ledger.wishlist_entries(agent.position):
            remaining = entry.requested - entry.satisfied
            if remaining <= 0:
                continue
            kind = entry.kind
            holders = [p for p in self._neighbors[agent.position]
                       if st.agents[p].inventory.count_of(kind) > 0]
            if not holders:
                continue
            for pos in self._purchase_order(agent, kind.kind_id, holders):
                seller = st.agents[pos]
                while remaining > 0 and seller.inventory.count_of(kind) > 0:
                    preferred = seller.firm.recipe_id if seller.firm else None
                    prov = seller.inventory.take_of_kind(kind, preferred)
                    sale = seller.firm is not None and prov == seller.firm.recipe_id
                    if sale:
                        seller.firm.sales_this_step += 1
                    entry.satisfied += 1
                    remaining -= 1
                    if self._conservative:
                        # bought goods become the buyer's capital stock and
                        # recycle through decay; in non-conservative domains
                        # consumption removes the instance from the system
                        agent.inventory.add(kind, prov)
                    payload = dict(buyer=agent.position, seller=pos,
                                   kind=kind.kind_id, provenance=prov,
                                   purpose="consumption", sale=sale)
                    if self.config.supplier_memory:
                        agent.supplier_memory[kind.kind_id] = pos
                    self._event("trade", **payload)
                if remaining == 0:
                    break

    # ------------------------------------------------------------------
    # phase 4: competition

    def phase_compete(self) -> None:
        st = self.state
        patience = self.config.patience
        open_counts: Counter = Counter(
            a.firm.recipe_id for a in st.agents if a.firm is not None)
        for agent in st.agents:
            firm = agent.firm
            if firm is None:
                continue
            if firm.sales_this_step == 0:
                firm.unsold_streak += 1
                if firm.unsold_streak >= patience:
                    protected = (self.config.witness_protection
                                 and open_counts[firm.recipe_id] == 1)
                    if not protected:
                        agent.firm = None
                        open_counts[firm.recipe_id] -= 1
                        self._event("close", agent=agent.position,
                                    recipe=firm.recipe_id,
                                    streak=firm.unsold_streak)
            else:
                firm.unsold_streak = 0
            if agent.firm is not None:
                agent.firm.sales_this_step = 0
        unmet = st.ledger.unmet_by_position(source="wishlist")
        idle = [a.position for a in st.agents if a.firm is None]
        claimed: Counter = Counter()
        for pos in self._shuffled(idle):
            agent = st.agents[pos]
            survey: dict[GoodKind, int] = {}
            for nb in self._neighbors[pos]:
                for kind, q in unmet.get(nb, {}).items():
                    q -= claimed[(nb, kind)]
                    if q > 0:
                        survey[kind] = survey.get(kind, 0) + q
            if not survey:
                continue
            choice = self._pick_entry_recipe(pos, survey)
            if choice is None:
                continue
            agent.firm = Firm(choice, opened_at=st.step)
            # an entrant adds one batch per step of capacity; count that
            # against the nearby gap so entry spreads across undersupplied
            # kinds instead of piling onto one
            recipe = st.book.recipe(choice)
            cap = recipe.product_count
            for nb in self._neighbors[pos]:
                if cap <= 0:
                    break
                left = unmet.get(nb, {}).get(recipe.product, 0) \
                    - claimed[(nb, recipe.product)]
                if left > 0:
                    take = min(cap, left)
                    claimed[(nb, recipe.product)] += take
                    cap -= take
            self._event("open", agent=pos, recipe=choice)

    def _pick_entry_recipe(self, pos: int,
                           survey: dict[GoodKind, int]) -> Optional[int]:
        """Pick a recipe filling the most-unmet sourceable demand nearby.

        A kind is sourceable in principle when some recipe produces it; the
        new firm's own input demand then propagates the gap upstream, so
        chains rebuild themselves top-down from the demand cascade.
        """
        st = self.state
        by_level: dict[int, list[GoodKind]] = {}
        for kind, q in survey.items():
            by_level.setdefault(q, []).append(kind)
        for level in sorted(by_level, reverse=True):
            viable: list[tuple[GoodKind, list[int]]] = []
            for kind in sorted(by_level[level], key=lambda k: k.kind_id):
                rids = st.book.recipes_producing(kind)
                if rids:
                    viable.append((kind, list(rids)))
            if not viable:
                continue
            if len(viable) == 1:
                _kind, rids = viable[0]
            else:
                _kind, rids = viable[int(st.rng.integers(len(viable)))]
            if len(rids) == 1:
                return rids[0]
            return rids[int(st.rng.integers(len(rids)))]
        return None

    # ------------------------------------------------------------------
    # phase 5: decay

    def phase_decay(self) -> None:
        st = self.state
        lam = self.config.decay_coefficient
        if lam <= 0:
            return
        depths = st.book.depth_map()
        rows: list[tuple[Agent, GoodKind, Optional[int], int]] = []
        ns: list[int] = []
        ps: list[float] = []
        for agent in st.agents:
            for kind, prov, count in agent.inventory.groups_sorted():
                if kind.is_primitive:
                    continue
                d = depths.get(kind.kind_id)
                if not d:
                    continue  # unreachable kinds have no defined complexity
                rows.append((agent, kind, prov, count))
                ns.append(count)
                ps.append(min(1.0, lam * d))
        if not rows:
            return
        draws = st.rng.binomial(ns, ps)
        for (agent, kind, prov, count), k in zip(rows, draws):
            k = int(k)
            if k == 0:
                continue
            # product_count > 1 recipes never reach here: their products only
            # occur in cyclic seeded books, whose kinds have no finite depth
            agent.inventory.remove(kind, prov, k)
            rid, parts = decomposition_parts(st.book, kind, prov)
            for part in parts:
                agent.inventory.add(part, None, k)
            self._event("decay", agent=agent.position, kind=kind.kind_id,
                        via=rid, count=k)


def run(config: SimulationConfig, domain: DomainRules, *,
        observe_steps: bool = True, record_events: bool = True,
        ) -> tuple[Simulation, list[ObservationRecord]]:
    """Run max_steps steps; returns the simulation and per-step observations
    (empty when observe_steps is False — the run itself is unaffected)."""
    sim = Simulation(config, domain, record_events=record_events)
    trajectory: list[ObservationRecord] = []
    for _ in range(config.max_steps):
        sim.step()
        if observe_steps:
            trajectory.append(observe(sim.state))
    return sim, trajectory
