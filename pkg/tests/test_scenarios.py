import csv
import io
import json

import pytest

from autogap.dynamics import Certificate
from autogap.output import certificates_json, render, emit, summary_table, table_csv
from autogap.scenarios import ConfigError, ScenarioConfig, run_scenario


@pytest.fixture(scope="module")
def annulus128():
    return run_scenario(ScenarioConfig("annulus", grid=(128, 128)))


@pytest.fixture(scope="module")
def surface():
    return run_scenario(ScenarioConfig("surface", grid=(256, 256)))


# -- config ----------------------------------------------------------------------

@pytest.mark.parametrize("bad", [
    {"scenario": "torus"},
    {"T": -1},
    {"tau": 2.5},
    {"grid": (64, 64)},
    {"tol": 0.0},
    {"n_h_prime": 1},
    {"format": "xml"},
])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        ScenarioConfig(**bad).validate()


def test_config_unknown_key():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"reference": 1})


def test_config_round_trip(tmp_path):
    c = ScenarioConfig("surface", T=4, grid=(200, 150), winding_samples=(500, 5000))
    p = tmp_path / "c.json"
    p.write_text(json.dumps(c.to_dict()))
    assert ScenarioConfig.from_file(p) == c


# -- annulus ---------------------------------------------------------------------

def test_annulus_passes(annulus128):
    failed = [c.name for c in annulus128.certificates if not c.passed]
    assert annulus128.passed, failed


def test_annulus_values(annulus128):
    r = annulus128.certificate("r_ab(h=0.0100)")
    assert r.computed == pytest.approx(0.03, abs=3e-3)
    d = annulus128.certificate("r_ab_disk(h=0.5000)")
    assert d.computed == pytest.approx(0.5 * 3 + 5, abs=3e-3 + 5e-2)
    assert annulus128.certificate("gap.required_length").computed == pytest.approx(0.6)
    assert annulus128.certificate("rho.invariant_disk").computed == pytest.approx(3.0, abs=1e-12)
    assert len(annulus128.tables["r_ab"][1]) == 20
    assert len(annulus128.tables["r_ab_disk"][1]) == 13


def test_annulus_at_256():
    res = run_scenario(ScenarioConfig("annulus", T=3, tau=5, grid=(256, 256)))
    assert res.passed
    assert res.certificate("gap.discrepancy").computed == pytest.approx(5.0, abs=5e-2)


def test_annulus_trivial():
    res = run_scenario(ScenarioConfig("annulus", T=0, tau=0, grid=(128, 128), n_h=5, n_h_prime=4))
    assert res.passed
    for c in res.certificates:
        if c.name.startswith(("r_ab", "gap.required", "gap.psi", "calabi", "rho")):
            assert abs(c.computed) < 1e-9, c.name


def test_annulus_deterministic(annulus128):
    again = run_scenario(ScenarioConfig("annulus", grid=(128, 128)))
    assert certificates_json(again.certificates) == certificates_json(annulus128.certificates)


# -- surface ---------------------------------------------------------------------

def test_surface_passes(surface):
    failed = [c.name for c in surface.certificates if not c.passed]
    assert surface.passed, failed


def test_surface_certificates(surface):
    assert surface.certificate("displacement.returning").computed == 0.0
    assert surface.certificate("winding(n=1000)").computed == 1.0
    assert surface.certificate("winding(n=10000)").computed == 1.0
    assert surface.certificate("fixed_point").computed < 1e-8
    names = [c.name for c in surface.certificates if c.name.startswith("robustness.winding")]
    assert len(names) == 5


def test_surface_deterministic(surface):
    again = run_scenario(ScenarioConfig("surface", grid=(256, 256)))
    assert certificates_json(again.certificates) == certificates_json(surface.certificates)


def test_surface_seed_changes_perturbations(surface):
    other = run_scenario(ScenarioConfig("surface", grid=(256, 256), seed=7))
    assert other.passed
    assert other.certificate("robustness.size(0)").computed != surface.certificate("robustness.size(0)").computed


# -- output ----------------------------------------------------------------------

def test_empty_json():
    assert certificates_json([]) == "[]\n"


def test_json_non_finite():
    text = certificates_json([Certificate("x", float("inf"), 1.0, 0.1)])
    assert json.loads(text)[0]["computed"] == "inf"


def test_csv_tables(annulus128):
    files = render(annulus128, "csv")
    assert set(files) == {"r_ab.csv", "r_ab_disk.csv", "certificates.csv"}
    rows = list(csv.reader(io.StringIO(files["r_ab.csv"])))
    assert rows[0] == ["h", "r_value", "expected", "pass"]
    assert len(rows) == 21 and all(r[3] == "true" for r in rows[1:])


def test_table_csv_format():
    assert table_csv(["a", "b"], [(0.5, None), (True, float("nan"))]) == "a,b\n0.5,\ntrue,nan\n"


def test_plotdata(surface):
    files = render(surface, "plotdata")
    assert files["orbit.dat"].startswith("# k theta s lift\n")
    assert len(files["orbit.dat"].splitlines()) == 202


def test_dot(annulus128):
    files = render(annulus128, "dot")
    assert set(files) == {"K.dot", "psi.dot"}
    assert files["psi.dot"].lstrip().startswith(("digraph", "graph"))


def test_emit(tmp_path, annulus128):
    paths = emit(annulus128, "json", tmp_path / "out")
    assert [p.name for p in paths] == ["certificates.json"]
    assert len(json.loads(paths[0].read_text())) == len(annulus128.certificates)


def test_summary_table():
    text = summary_table([Certificate("a", 1.0, 1.0, 0.0), Certificate("bb", None, None, 0.0)])
    lines = text.splitlines()
    assert lines[0].startswith("PASS") and lines[1].startswith("ABSENT-AS-EXPECTED")
    assert lines[-1] == "2/2 certificates passed"


def test_render_unknown(annulus128):
    with pytest.raises(ValueError):
        render(annulus128, "xml")
