"""Config resolution and the command-line harness end to end."""

import csv
import hashlib
import json

import pytest

from freemarket import SimulationConfig, __version__
from freemarket.cli import main
from freemarket.config import (ConfigError, config_as_dict, parse_config,
                               read_config_file)

from conftest import ECON_CSV


def write_config(tmp_path, text):
    path = tmp_path / "run.conf"
    path.write_text(text)
    return str(path)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ----------------------------------------------------------------------
# config files and overrides


def test_defaults_without_file_or_overrides():
    assert parse_config() == SimulationConfig()


def test_file_values_are_parsed_and_cast(tmp_path):
    path = write_config(tmp_path, """
# comment line

n_agents = 30
budget = 7
decay_coefficient = 0.05
supplier_memory = on
""")
    config = parse_config(path)
    assert config.n_agents == 30
    assert config.discovery_budget == 7
    assert config.decay_coefficient == 0.05
    assert config.supplier_memory is True


def test_overrides_beat_file_values(tmp_path):
    path = write_config(tmp_path, "budget = 10\nn_agents = 30\n")
    config = parse_config(path, {"budget": "50"})
    assert config.discovery_budget == 50
    assert config.n_agents == 30


def test_none_overrides_are_ignored():
    config = parse_config(None, {"seed": None, "patience": "9"})
    assert config.seed == 1 and config.patience == 9


def test_unknown_keys_are_named(tmp_path):
    path = write_config(tmp_path, "budgett = 5\n")
    with pytest.raises(ConfigError, match="budgett"):
        parse_config(path)


def test_malformed_lines_name_the_location(tmp_path):
    path = write_config(tmp_path, "patience\n")
    with pytest.raises(ConfigError, match=":1:"):
        read_config_file(path)


def test_missing_file_errors():
    with pytest.raises(ConfigError, match="not found"):
        parse_config("/no/such/file.conf")


def test_bool_spellings():
    for raw, expected in [("on", True), ("1", True), ("yes", True),
                          ("off", False), ("0", False), ("no", False)]:
        assert parse_config(None, {"supplier_memory": raw}
                            ).supplier_memory is expected
    with pytest.raises(ConfigError, match="supplier_memory"):
        parse_config(None, {"supplier_memory": "maybe"})


def test_choice_keys_reject_other_values():
    with pytest.raises(ConfigError, match="gfcf"):
        parse_config(None, {"demand_mode": "greedy"})
    with pytest.raises(ConfigError, match="domain"):
        parse_config(None, {"domain": "physics"})


def test_domain_keys_must_match_the_domain():
    with pytest.raises(ConfigError, match="chem.atom_cap"):
        parse_config(None, {"chem.atom_cap": "8"})
    config = parse_config(None, {"domain": "chem", "chem.atom_cap": "8"})
    assert config.domain_params == {"chem.atom_cap": 8}


def test_engine_invariants_become_config_errors():
    with pytest.raises(ConfigError, match="decay_coefficient"):
        parse_config(None, {"decay_coefficient": "1.5"})
    with pytest.raises(ConfigError, match="n_agents"):
        parse_config(None, {"n_agents": "4", "ring_radius": "2"})


def test_resolved_view_contains_every_key():
    config = parse_config(None, {"domain": "toy", "toy.l_max": "6"})
    flat = config_as_dict(config)
    assert flat["n_agents"] == 200
    assert flat["domain"] == "toy"
    assert flat["toy.l_max"] == 6


# ----------------------------------------------------------------------
# run subcommand


RUN_ARGS = ["--seed", "3", "--max-steps", "5", "--n-agents", "12",
            "--ring-radius", "1", "--budget", "4"]

ARTIFACTS = ["census.csv", "copy_by_depth.csv", "events.jsonl",
             "network.dot", "network.json", "recipe_book.json", "regime.csv"]


def test_run_writes_the_full_artifact_set(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path)] + RUN_ARGS) == 0
    run_dir = tmp_path / "toy-single-3"
    for name in ARTIFACTS + ["manifest.json"]:
        assert (run_dir / name).is_file(), name
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["version"] == __version__
    assert manifest["command"] == "run"
    assert manifest["config"]["n_agents"] == 12
    assert sorted(manifest["artifacts"]) == ARTIFACTS
    for name, digest in manifest["artifacts"].items():
        body = (run_dir / name).read_bytes()
        assert hashlib.sha256(body).hexdigest() == digest, name
    out = capsys.readouterr().out
    assert "run complete" in out and "species" in out


def test_run_artifacts_are_byte_reproducible(tmp_path):
    main(["run", "--out", str(tmp_path / "one")] + RUN_ARGS)
    main(["run", "--out", str(tmp_path / "two")] + RUN_ARGS)
    for name in ARTIFACTS + ["manifest.json"]:
        first = (tmp_path / "one" / "toy-single-3" / name).read_bytes()
        second = (tmp_path / "two" / "toy-single-3" / name).read_bytes()
        assert first == second, name


def test_run_artifact_schemas(tmp_path):
    main(["run", "--out", str(tmp_path)] + RUN_ARGS)
    run_dir = tmp_path / "toy-single-3"
    census = read_rows(run_dir / "census.csv")
    assert census[0] == ["step", "kind", "depth", "count"]
    assert census[1][0] == "1"
    copies = read_rows(run_dir / "copy_by_depth.csv")
    assert copies[0] == ["step", "depth", "species", "mean_copies"]
    regime = read_rows(run_dir / "regime.csv")
    assert regime[0] == ["budget", "seed", "species", "objects", "max_depth",
                         "assembly_a"]
    assert regime[1][:2] == ["4", "3"]
    assert len(regime) == 2
    with open(run_dir / "events.jsonl") as fh:
        for line in fh:
            event = json.loads(line)
            assert set(event) == {"step", "type", "payload"}
    book = json.loads((run_dir / "recipe_book.json").read_text())
    assert isinstance(book, list)
    for entry in book:
        assert {"id", "inputs", "product", "delta_e",
                "discovered_at", "product_count"} == set(entry)


def test_run_with_zero_steps_snapshots_the_initial_state(tmp_path):
    args = ["run", "--out", str(tmp_path), "--seed", "1", "--max-steps", "0",
            "--n-agents", "12", "--ring-radius", "1"]
    assert main(args) == 0
    run_dir = tmp_path / "toy-single-1"
    census = read_rows(run_dir / "census.csv")
    assert [row[0] for row in census[1:]] == ["0", "0"]  # one snapshot, A and B
    assert (run_dir / "events.jsonl").read_text() == ""


def test_config_file_feeds_the_cli_and_flags_win(tmp_path):
    path = write_config(tmp_path, "max_steps = 4\nn_agents = 12\n"
                                  "ring_radius = 1\nseed = 2\n")
    assert main(["run", "--config", path, "--out", str(tmp_path),
                 "--max-steps", "2"]) == 0
    run_dir = tmp_path / "toy-single-2"
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["config"]["max_steps"] == 2
    census = read_rows(run_dir / "census.csv")
    assert {row[0] for row in census[1:]} == {"1", "2"}


def test_domain_flags_reach_the_manifest(tmp_path):
    args = ["run", "--domain", "chem", "--out", str(tmp_path), "--seed", "1",
            "--max-steps", "2", "--n-agents", "12", "--ring-radius", "1",
            "--chem.atom_cap", "6",
            "--chem.allocation", "C:12,H:24,O:6,N:6"]
    assert main(args) == 0
    manifest = json.loads(
        (tmp_path / "chem-single-1" / "manifest.json").read_text())
    assert manifest["domain"] == "chem"
    assert manifest["config"]["chem.atom_cap"] == 6


# ----------------------------------------------------------------------
# sweeps


SWEEP_BASE = ["--max-steps", "3", "--n-agents", "12", "--ring-radius", "1"]


def test_budget_sweep_builds_the_regime_table(tmp_path, capsys):
    args = ["sweep-budget", "--out", str(tmp_path), "--budgets", "1,2",
            "--seeds", "1,2"] + SWEEP_BASE
    assert main(args) == 0
    rows = read_rows(tmp_path / "regime.csv")
    assert rows[0] == ["budget", "seed", "species", "objects", "max_depth",
                       "assembly_a"]
    assert len(rows) == 1 + 4 + 2  # header, cells, one median per budget
    assert [r[:2] for r in rows[1:5]] == [["1", "1"], ["1", "2"],
                                          ["2", "1"], ["2", "2"]]
    assert rows[5][:2] == ["1", "median"]
    assert rows[6][:2] == ["2", "median"]
    for budget, seed in [(1, 1), (1, 2), (2, 1), (2, 2)]:
        cell = tmp_path / f"toy-{budget}-{seed}"
        assert (cell / "regime.csv").is_file()
        assert (cell / "manifest.json").is_file()
        assert not (cell / "census.csv").exists()  # sweep cells stay lean
    out = capsys.readouterr().out
    assert "verdict: skipped" in out  # ordering verdict needs three budgets


def test_budget_sweep_verdict_with_three_budgets(tmp_path, capsys):
    args = ["sweep-budget", "--out", str(tmp_path), "--budgets", "1,2,3",
            "--seeds", "1"] + SWEEP_BASE
    assert main(args) == 0
    assert "ordering" in capsys.readouterr().out


def test_seed_ranges_expand(tmp_path):
    args = ["sweep-budget", "--out", str(tmp_path), "--budgets", "1",
            "--seeds", "1-3"] + SWEEP_BASE
    assert main(args) == 0
    rows = read_rows(tmp_path / "regime.csv")
    assert len(rows) == 1 + 3 + 1


def test_temperature_sweep_counts_routes(tmp_path):
    args = ["sweep-temperature", "--domain", "chem", "--out", str(tmp_path),
            "--temperatures", "200,400", "--seeds", "1", "--target", "CH",
            "--budget", "30", "--chem.allocation", "C:12,H:24,O:6,N:6"
            ] + SWEEP_BASE
    assert main(args) == 0
    rows = read_rows(tmp_path / "temperature_sweep.csv")
    assert rows[0] == ["temperature", "seed", "target", "route_count",
                       "min_route_depth"]
    assert len(rows) == 1 + 2 + 2
    assert rows[1][:3] == ["200.0", "1", "CH"]
    assert rows[3][1] == "median" and rows[4][1] == "median"


def test_temperature_sweep_requires_the_molecule_domain(tmp_path):
    args = ["sweep-temperature", "--out", str(tmp_path), "--target", "CH",
            "--temperatures", "300", "--seeds", "1"] + SWEEP_BASE
    assert main(args) == 1


# ----------------------------------------------------------------------
# routes and network export


def test_routes_of_a_primitive_is_the_trivial_row(tmp_path, capsys):
    args = ["routes", "--target", "A", "--out", str(tmp_path), "--seed", "1",
            "--max-steps", "2", "--n-agents", "12", "--ring-radius", "1"]
    assert main(args) == 0
    rows = read_rows(tmp_path / "routes.csv")
    assert rows[0] == ["target", "rank", "depth", "total_delta_e",
                       "recipe_ids"]
    assert rows[1] == ["A", "0", "0", "0", ""]
    assert "1 routes to A" in capsys.readouterr().out


def test_routes_of_an_unseen_kind_is_an_empty_table(tmp_path, capsys):
    args = ["routes", "--target", "BBBB", "--out", str(tmp_path), "--seed",
            "1", "--max-steps", "0", "--n-agents", "12", "--ring-radius", "1"]
    assert main(args) == 0
    assert read_rows(tmp_path / "routes.csv") == [
        ["target", "rank", "depth", "total_delta_e", "recipe_ids"]]
    assert "0 routes to BBBB" in capsys.readouterr().out


def test_network_export_writes_json_and_dot(tmp_path):
    args = ["export-network", "--out", str(tmp_path), "--seed", "1",
            "--max-steps", "3", "--n-agents", "12", "--ring-radius", "1"]
    assert main(args) == 0
    doc = json.loads((tmp_path / "network.json").read_text())
    assert {"kinds", "recipes", "edges", "firms"} <= set(doc)
    assert len(doc["kinds"]) >= 2
    assert (tmp_path / "network.dot").read_text().startswith(
        "digraph production {")


# ----------------------------------------------------------------------
# exit codes


def test_usage_errors_exit_one(tmp_path, capsys):
    assert main(["run", "--budgett", "5"]) == 1
    assert main(["run", "--n-agents", "abc"]) == 1
    assert main(["run", "--config", "/no/such/file.conf"]) == 1
    assert main(["sweep-budget", "--seeds", "5-2"] + SWEEP_BASE) == 1
    assert main(["sweep-budget", "--seeds", "1,1"] + SWEEP_BASE) == 1
    assert "error:" in capsys.readouterr().err


def test_runtime_errors_exit_two(tmp_path, capsys):
    args = ["run", "--domain", "econ", "--out", str(tmp_path),
            "--econ.table_path", "/no/such/table.csv"] + SWEEP_BASE
    assert main(args) == 2
    bad_alloc = ["run", "--domain", "chem", "--out", str(tmp_path),
                 "--chem.allocation", "Zn:5"] + SWEEP_BASE
    assert main(bad_alloc) == 2
    assert "error:" in capsys.readouterr().err


def test_econ_run_from_a_table_file(tmp_path):
    table = tmp_path / "sectors.csv"
    table.write_text(ECON_CSV)
    args = ["run", "--domain", "econ", "--out", str(tmp_path), "--seed", "2",
            "--max-steps", "4", "--n-agents", "12", "--ring-radius", "1",
            "--econ.table_path", str(table)]
    assert main(args) == 0
    run_dir = tmp_path / "econ-single-2"
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["config"]["econ.table_path"] == str(table)
    book = json.loads((run_dir / "recipe_book.json").read_text())
    assert len(book) == 3  # one seeded recipe per sector
    regime = read_rows(run_dir / "regime.csv")
    # sector goods never bottom out in primitives: no assembly signal
    assert regime[1][-1] == "0.0"
