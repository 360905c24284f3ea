"""Domain registry: build rule sets by name from namespaced config keys."""

from __future__ import annotations

from .base import DomainRules, SeededRecipe, ValidationContext
from .chemistry import ChemistryDomain
from .economics import EconomicsDomain, IOTable
from .toy import ToyDomain

DOMAIN_NAMES = ("toy", "chem", "econ")

# key -> caster, used both here and by config parsing
DOMAIN_PARAM_KEYS: dict[str, dict[str, type]] = {
    "toy": {"toy.l_max": int},
    "chem": {
        "chem.atom_cap": int,
        "chem.e_bond": float,
        "chem.b0": float,
        "chem.b1": float,
        "chem.c": float,
        "chem.temperature": float,
        "chem.allocation": str,
    },
    "econ": {
        "econ.table_path": str,
        "econ.batch": int,
        "econ.initial_stock": int,
    },
}


def parse_allocation(text: str) -> dict[str, int]:
    """Parse "C:200,H:500,O:100,N:100" into element counts."""
    out: dict[str, int] = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        el, _, count = chunk.partition(":")
        el = el.strip()
        try:
            n = int(count.strip())
        except ValueError:
            raise ValueError(f"bad allocation entry {chunk!r}") from None
        if el in out:
            raise ValueError(f"duplicate element {el!r} in allocation")
        out[el] = n
    if not out:
        raise ValueError(f"empty allocation {text!r}")
    return out


def build_domain(name: str, params: dict | None = None) -> DomainRules:
    params = dict(params or {})
    known = DOMAIN_PARAM_KEYS.get(name)
    if known is None:
        raise ValueError(f"unknown domain {name!r}, expected one of {DOMAIN_NAMES}")
    for key in params:
        if key not in known:
            raise ValueError(f"config key {key!r} does not apply to domain {name!r}")
    if name == "toy":
        kwargs = {}
        if "toy.l_max" in params:
            kwargs["l_max"] = int(params["toy.l_max"])
        return ToyDomain(**kwargs)
    if name == "chem":
        kwargs = {}
        for key, attr in (("chem.atom_cap", "atom_cap"), ("chem.e_bond", "e_bond"),
                          ("chem.b0", "b0"), ("chem.b1", "b1"), ("chem.c", "c"),
                          ("chem.temperature", "temperature")):
            if key in params:
                kwargs[attr] = known[key](params[key])
        if "chem.allocation" in params:
            kwargs["allocation"] = parse_allocation(str(params["chem.allocation"]))
        return ChemistryDomain(**kwargs)
    if "econ.table_path" not in params:
        raise ValueError("domain 'econ' needs econ.table_path")
    table = IOTable.from_csv(str(params["econ.table_path"]))
    kwargs = {}
    if "econ.batch" in params:
        kwargs["batch"] = int(params["econ.batch"])
    if "econ.initial_stock" in params:
        kwargs["initial_stock"] = int(params["econ.initial_stock"])
    return EconomicsDomain(table, **kwargs)


__all__ = [
    "DOMAIN_NAMES",
    "DOMAIN_PARAM_KEYS",
    "DomainRules",
    "SeededRecipe",
    "ValidationContext",
    "ToyDomain",
    "ChemistryDomain",
    "EconomicsDomain",
    "IOTable",
    "build_domain",
    "parse_allocation",
]
