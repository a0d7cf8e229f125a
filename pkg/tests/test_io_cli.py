import json

import numpy as np
import pytest

from tiegraph import io
from tiegraph.cli import main
from tiegraph.diagnostics import summarize
from tiegraph.graph import Roster
from tiegraph.model import ErrorRates
from tiegraph.sampler import ChainTrace

ABC = Roster(("A", "B", "C"))


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def reports_file(tmp_path, *records, name="reports.csv"):
    lines = ["informant,ego,alter,outcome", *(",".join(r) for r in records)]
    return write(tmp_path / name, "\n".join(lines) + "\n")


def write_json(path, data):
    return write(path, json.dumps(data))


def base_config(**sampler):
    settings = {"n_iterations": 400, "burn_in": 100, "thin": 2, "n_chains": 2, "seed": 11}
    settings.update(sampler)
    return {"lambda": 0.5, "rho": 0.2, "gamma": 10, "sampler": settings}


# -- reports -----------------------------------------------------------------

def test_load_reports_encoding(tmp_path):
    path = reports_file(tmp_path, ("k1", "A", "B", "ego"), ("k1", "C", "A", "ego"), ("k2", "B", "C", "tie"),
                        ("k2", "A", "C", "missing"), ("k1", "B", "C", "alter"))
    rep = io.load_reports(path, ABC)
    assert rep.informants == ("k1", "k2")
    # dyads: {A,B}, {A,C}, {B,C}
    assert rep.x.tolist() == [[1, -1, -1], [0, 0, 0]]
    assert rep.z.tolist() == [[True, True, True], [False, False, True]]


def test_load_reports_swapped_ego(tmp_path):
    rep = io.load_reports(reports_file(tmp_path, ("k1", "B", "A", "ego")), ABC)
    assert rep.x.tolist() == [[-1, 0, 0]] and rep.z.tolist() == [[True, False, False]]


def test_load_reports_empty(tmp_path):
    rep = io.load_reports(reports_file(tmp_path), ABC, informants=["k1"])
    assert not rep.z.any() and rep.x.shape == (1, 3)


def test_canonicalization(tmp_path):
    records = [("k1", "A", "B", "ego"), ("k1", "A", "C", "alter"), ("k2", "B", "C", "tie"), ("k2", "A", "B", "alter")]
    swap = {"ego": "alter", "alter": "ego"}
    swapped = [(k, b, a, swap.get(o, o)) for k, a, b, o in records]
    a = io.load_reports(reports_file(tmp_path, *records, name="a.csv"), ABC)
    b = io.load_reports(reports_file(tmp_path, *swapped, name="b.csv"), ABC)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.z, b.z)


@pytest.mark.parametrize(
    "records, message",
    [
        ([("k1", "A", "B", "ego"), ("k1", "B", "A", "tie")], "duplicate record.*line 2"),
        ([("k1", "A", "Z", "ego")], "unknown vertex label 'Z'"),
        ([("k1", "A", "A", "tie")], "self-dyad"),
        ([("k1", "A", "B", "win")], "outcome 'win'"),
    ],
)
def test_load_reports_errors(tmp_path, records, message):
    with pytest.raises(io.FormatError, match=message):
        io.load_reports(reports_file(tmp_path, *records), ABC)


def test_load_reports_bad_header(tmp_path):
    write(tmp_path / "r.csv", "who,ego,alter,outcome\n")
    with pytest.raises(io.FormatError):
        io.load_reports(tmp_path / "r.csv", ABC)


def test_reports_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    roster = Roster.of_size(5)
    x = rng.integers(-1, 2, size=(3, 10))
    z = rng.random((3, 10)) < 0.7
    io.dump_reports(tmp_path / "r.csv", x, z, roster, ("a", "b", "c"))
    rep = io.load_reports(tmp_path / "r.csv", roster, ("a", "b", "c"))
    np.testing.assert_array_equal(rep.z, z)
    np.testing.assert_array_equal(rep.x, np.where(z, x, 0))


# -- other formats -------------------------------------------------------------

def test_roster_graph_rates_round_trip(tmp_path):
    roster = Roster(("x", "y", "z", "w"))
    io.dump_roster(tmp_path / "roster.txt", roster)
    assert io.load_roster(tmp_path / "roster.txt") == roster
    xi = np.array([1, -1, 0, 0, 1, -1], dtype=np.int8)
    io.dump_graph(tmp_path / "g.csv", xi, roster)
    np.testing.assert_array_equal(io.load_graph(tmp_path / "g.csv", roster), xi)
    rates = ErrorRates([0.1, 1 / 3], [0.2, 1e-17], [0.30000000000000004, 0.0])
    io.dump_rates(tmp_path / "rates.csv", rates, ("k1", "k2"))
    loaded, ids = io.load_rates(tmp_path / "rates.csv")
    assert loaded == rates and ids == ("k1", "k2")
    assert (tmp_path / "g.csv").read_text().startswith("#format_version=1\n")


def random_chains(seed=0, n_chains=2, n=25, d=6, m=2):
    rng = np.random.default_rng(seed)
    return [
        ChainTrace(rng.integers(-1, 2, size=(n, d)), rng.dirichlet([1, 1, 1], size=(n, m)), np.arange(1, n + 1) * 3)
        for _ in range(n_chains)
    ]


def test_draws_round_trip(tmp_path):
    roster = Roster.of_size(4)
    chains = random_chains()
    io.dump_draws(tmp_path / "d.csv", chains, roster, ("k1", "k2"))
    loaded, r, informants = io.load_draws(tmp_path / "d.csv")
    assert loaded == chains and r == roster and informants == ("k1", "k2")
    a, b = summarize(chains), summarize(loaded)
    for field in ("marginals", "map_graph", "rate_mean", "rate_quantiles", "rhat"):
        np.testing.assert_array_equal(getattr(a, field), getattr(b, field))


def test_draws_reject_reserved_character(tmp_path):
    with pytest.raises(io.FormatError):
        io.dump_draws(tmp_path / "d.csv", random_chains(), Roster(("a|b", "c", "d", "e")), ("k1", "k2"))


def test_config_round_trip_and_rejections(tmp_path):
    data = base_config(clamp_error_rates={"*": {"phi": 0.1, "tau": 0.1, "omega": 0.3}})
    data["roster"] = ["A", "B", "C"]
    config = io.RunConfig.from_dict(data)
    io.dump_config(tmp_path / "c.json", config)
    assert io.load_config(tmp_path / "c.json") == config
    assert config.sampler_config(("k1",)).clamp_error_rates == ErrorRates(0.1, 0.1, 0.3)

    for bad in (
        {**base_config(), "lamda": 0.5},
        {**base_config(), "sampler": {"n_iterations": 10, "thinning": 2}},
        {**base_config(), "priors": {"*": {"alpha": 1, "beta": 1, "gamma": 8, "delta": 1, "epsilon": 9}}},
        {"lambda": 0.5, "rho": 0.2, "sampler": {"n_iterations": 10}},
        {**base_config(), "lambda": 1.5},
        {**base_config(), "sampler": {"n_iterations": 10, "burn_in": 10}},
        {**base_config(), "format_version": 2},
    ):
        with pytest.raises(io.FormatError):
            io.RunConfig.from_dict(bad)


def test_explicit_priors_with_wildcard():
    config = io.RunConfig.from_dict({
        "lambda": 0.5,
        "priors": {
            "*": {"alpha": 1, "beta": 1, "gamma": 8, "delta": 1, "epsilon": 9},
            "k2": {"alpha": 2, "beta": 3, "gamma": 4, "delta": 5, "epsilon": 6},
        },
        "sampler": {"n_iterations": 10},
    })
    priors = config.error_priors(("k1", "k2"))
    assert priors.as_array().tolist() == [[1, 1, 8, 1, 9], [2, 3, 4, 5, 6]]
    with pytest.raises(io.FormatError):
        config.error_priors(("k3",))


# -- command line ---------------------------------------------------------------

@pytest.fixture
def noiseless(tmp_path):
    spec = {"n_vertices": 6, "n_informants": 3, "lambda": 0.5,
            "rates": {"phi": 0, "tau": 0, "omega": 0}, "missing_rate": 0, "seed": 5}
    write_json(tmp_path / "sim.json", spec)
    assert main(["simulate", str(tmp_path / "sim.json"), "--out", str(tmp_path / "data")]) == 0
    return tmp_path


def test_simulate_then_infer_recovers_noiseless_truth(noiseless):
    data = noiseless / "data"
    assert sorted(p.name for p in data.iterdir()) == ["reports.csv", "roster.txt", "truth_graph.csv", "truth_rates.csv"]
    write_json(noiseless / "cfg.json", base_config())
    rc = main(["infer", "--reports", str(data / "reports.csv"), "--roster", str(data / "roster.txt"),
               "--config", str(noiseless / "cfg.json"), "--out", str(noiseless / "run")])
    assert rc == 0
    run = noiseless / "run"
    assert (run / "map_graph.csv").read_bytes() == (data / "truth_graph.csv").read_bytes()
    for name in ("draws.csv", "marginals.csv", "rates.csv", "rhat.csv", "summary.json"):
        assert (run / name).exists()
    summary = json.loads((run / "summary.json").read_text())
    assert summary["n_retained"] == 2 * 150


def test_summarize_command_round_trips(noiseless, tmp_path):
    data = noiseless / "data"
    write_json(noiseless / "cfg.json", base_config())
    main(["infer", "--reports", str(data / "reports.csv"), "--roster", str(data / "roster.txt"),
          "--config", str(noiseless / "cfg.json"), "--out", str(noiseless / "run")])
    assert main(["summarize", str(noiseless / "run" / "draws.csv"), "--out", str(noiseless / "again")]) == 0
    for name in ("marginals.csv", "map_graph.csv", "rates.csv", "rhat.csv", "summary.json"):
        assert (noiseless / "again" / name).read_bytes() == (noiseless / "run" / name).read_bytes()


def test_infer_is_byte_stable(noiseless):
    data = noiseless / "data"
    write_json(noiseless / "cfg.json", base_config())
    args = ["--reports", str(data / "reports.csv"), "--roster", str(data / "roster.txt"),
            "--config", str(noiseless / "cfg.json")]
    main(["infer", *args, "--out", str(noiseless / "r1")])
    main(["infer", *args, "--out", str(noiseless / "r2")])
    for p in (noiseless / "r1").iterdir():
        assert p.read_bytes() == (noiseless / "r2" / p.name).read_bytes()


def test_invalid_config_exits_2_without_output(noiseless, capsys):
    data = noiseless / "data"
    write_json(noiseless / "cfg.json", {**base_config(), "lamda": 0.3})
    rc = main(["infer", "--reports", str(data / "reports.csv"), "--roster", str(data / "roster.txt"),
               "--config", str(noiseless / "cfg.json"), "--out", str(noiseless / "run")])
    assert rc == 2
    assert "unknown key" in capsys.readouterr().err
    assert not (noiseless / "run").exists()


def test_missing_roster_and_bad_reports_exit_2(tmp_path):
    write_json(tmp_path / "cfg.json", base_config())
    reports_file(tmp_path, ("k1", "A", "B", "ego"))
    assert main(["infer", "--reports", str(tmp_path / "reports.csv"), "--config", str(tmp_path / "cfg.json"),
                 "--out", str(tmp_path / "o")]) == 2
    write_json(tmp_path / "cfg.json", {**base_config(), "roster": ["A", "C"]})
    assert main(["infer", "--reports", str(tmp_path / "reports.csv"), "--config", str(tmp_path / "cfg.json"),
                 "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()
    assert main(["summarize", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "o")]) == 2


def oracle_case(tmp_path, clamp):
    records = [("k1", "A", "B", "ego"), ("k1", "A", "C", "tie"), ("k1", "B", "D", "alter"),
               ("k2", "A", "B", "ego"), ("k2", "C", "D", "tie"), ("k2", "A", "D", "ego")]
    reports_file(tmp_path, *records)
    config = {**base_config(n_iterations=40_000, burn_in=1000, thin=1, n_chains=1), "roster": list("ABCD")}
    if clamp:
        config["sampler"]["clamp_error_rates"] = {"*": {"phi": 0.1, "tau": 0.1, "omega": 0.3}}
    write_json(tmp_path / "cfg.json", config)
    return ["oracle-check", "--reports", str(tmp_path / "reports.csv"), "--config", str(tmp_path / "cfg.json")]


@pytest.mark.parametrize("clamp", [True, False])
def test_oracle_check_passes(tmp_path, capsys, clamp):
    args = oracle_case(tmp_path, clamp)
    assert main([*args, "--out", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert ("fixed-error" if clamp else "collapsed") in out
    assert out.strip().splitlines()[-1].endswith("PASS")
    assert len([line for line in out.splitlines() if line.count(",") == 2]) == 1 + 6
    assert (tmp_path / "o" / "oracle_marginals.csv").exists()


def test_oracle_check_tolerance_failure(tmp_path, capsys):
    assert main([*oracle_case(tmp_path, True), "--tolerance", "1e-9"]) == 3
    assert capsys.readouterr().out.strip().endswith("FAIL")


def test_oracle_check_refuses_large_instance(tmp_path, capsys):
    args = oracle_case(tmp_path, False)
    assert main([*args, "--max-dyads", "5"]) == 2
    assert "at most 5 dyads" in capsys.readouterr().err


def test_missing_values_do_not_change_outputs(tmp_path):
    records = [("k1", "A", "B", "ego"), ("k1", "A", "C", "tie"), ("k2", "B", "C", "alter")]
    reports_file(tmp_path, *records, ("k2", "A", "B", "missing"), name="a.csv")
    reports_file(tmp_path, *records, name="b.csv")
    write_json(tmp_path / "cfg.json", {**base_config(), "roster": list("ABC")})
    for name in ("a", "b"):
        assert main(["infer", "--reports", str(tmp_path / f"{name}.csv"), "--config", str(tmp_path / "cfg.json"),
                     "--out", str(tmp_path / f"out_{name}")]) == 0
    for p in (tmp_path / "out_a").iterdir():
        assert p.read_bytes() == (tmp_path / "out_b" / p.name).read_bytes()


def test_atomic_write_leaves_no_temp_files(tmp_path):
    io.atomic_write(tmp_path / "sub" / "f.txt", "hello\n")
    io.atomic_write(tmp_path / "sub" / "f.txt", "again\n")
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["f.txt"]
    assert (tmp_path / "sub" / "f.txt").read_text() == "again\n"
