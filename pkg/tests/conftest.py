"""Shared fixtures: a small sector table and engine run helpers."""

import pytest

from freemarket import IOTable, SimulationConfig, run
from freemarket.domains import EconomicsDomain, build_domain

# 3-sector coefficient table used across the economics tests
ECON_SECTORS = ("s1", "s2", "s3")
ECON_MATRIX = ((0.0, 0.2, 0.1), (0.3, 0.0, 0.2), (0.1, 0.1, 0.0))
ECON_DEMAND = (5.0, 3.0, 2.0)
ECON_CSV = "s1,s2,s3\n0,0.2,0.1\n0.3,0,0.2\n0.1,0.1,0\n5,3,2\n"


@pytest.fixture(scope="session")
def econ_table_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("tables") / "three_sector.csv"
    path.write_text(ECON_CSV)
    return path


@pytest.fixture(scope="session")
def econ_table():
    return IOTable(ECON_SECTORS, ECON_MATRIX, ECON_DEMAND)


def make_econ_domain(table=None, batch=10, initial_stock=4):
    return EconomicsDomain(table or IOTable(ECON_SECTORS, ECON_MATRIX,
                                            ECON_DEMAND),
                           batch=batch, initial_stock=initial_stock)


def run_toy(seed=1, budget=10, steps=50, n_agents=40, record_events=True,
            observe_steps=True, domain_params=None, **kw):
    cfg = SimulationConfig(n_agents=n_agents, ring_radius=kw.pop("ring_radius", 2),
                           discovery_budget=budget, max_steps=steps, seed=seed,
                           **kw)
    sim, records = run(cfg, build_domain("toy", domain_params or {}),
                       observe_steps=observe_steps,
                       record_events=record_events)
    return sim, records


def run_chem(seed=1, budget=50, steps=50, n_agents=40, temperature=300.0,
             record_events=True, observe_steps=True, params=None, **kw):
    domain_params = {"chem.temperature": temperature}
    domain_params.update(params or {})
    cfg = SimulationConfig(n_agents=n_agents, ring_radius=kw.pop("ring_radius", 2),
                           discovery_budget=budget, max_steps=steps, seed=seed,
                           domain="chem", **kw)
    sim, records = run(cfg, build_domain("chem", domain_params),
                       observe_steps=observe_steps,
                       record_events=record_events)
    return sim, records
