"""Config parsing, artifact emission, and the command-line workbench."""

import json
import math

import numpy as np
import pytest

from hhdmft.cli import main
from hhdmft.config import DEFAULT_CONFIG, parse_config
from hhdmft.errors import ConfigError
from hhdmft.output import ArtifactWriter, content_hash, format_number, plainify

MINIMAL = "U = 4.0\nV = 0.8\nomega0 = 5.0\nlambda = 1.5\n"

FULL = """\
U = 4.0
V = 0.8
mu = 1.25
omega0 = 5.0
lambda = 1.5
n_boson_levels = 3
seed = 11
output_dir = "artifacts"

[landscape]
theta0_points = 16
theta1_points = 8
theta0_range = [0.0, 3.141592653589793]
theta1_range = [0.0, 6.283185307179586]

[frequency]
omega_min = -9.0
omega_max = 9.0
n_points = 201
delta = 0.05

[time]
t_max = 4.0
n_steps = 20

[noise]
shots = 1234
readout_flip = 0.01

[dmft]
m2 = 1.0
v_initial = 0.6
tol = 1e-4
max_iter = 30
mixing = 0.5
solver = "kvqa-direct"
"""


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [[float(cell) for cell in line.split(",")] for line in lines[1:]]
    return header, rows


def load_manifest(out_dir):
    with open(out_dir / "manifest.json") as fh:
        return json.load(fh)


# ------------------------------------------------------- parse_config


def test_minimal_document_applies_documented_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.params.mu == 2.0
    assert cfg.mu_spec == "u-half"
    assert cfg.params.n_boson_levels == 2
    assert cfg.seed == 0
    assert cfg.output_dir == "out"
    assert cfg.noise is None
    assert (cfg.landscape.theta0_points, cfg.landscape.theta1_points) == (64, 64)
    assert (cfg.frequency.omega_min, cfg.frequency.omega_max) == (-12.0, 12.0)
    assert (cfg.time.t_max, cfg.time.n_steps) == (10.0, 50)
    assert cfg.dmft.solver == "exact-lanczos"


def test_builtin_default_config_parses_to_same_model():
    assert parse_config(DEFAULT_CONFIG) == parse_config(MINIMAL)


def test_full_document_populates_every_section():
    cfg = parse_config(FULL)
    assert cfg.params.mu == 1.25 and cfg.mu_spec == 1.25
    assert cfg.params.n_boson_levels == 3
    assert cfg.seed == 11
    assert cfg.landscape.theta0_points == 16
    assert cfg.landscape.theta1_range == (0.0, 6.283185307179586)
    assert cfg.frequency.n_points == 201
    assert cfg.time.n_steps == 20
    assert cfg.noise.shots == 1234
    assert cfg.noise.readout_flip == 0.01
    assert cfg.noise.seed == 11, "noise inherits the top-level seed"
    assert cfg.dmft.v_initial == 0.6
    assert cfg.dmft.solver == "kvqa-direct"


def test_negative_omega0_error_names_the_field():
    doc = MINIMAL.replace("omega0 = 5.0", "omega0 = -1")
    with pytest.raises(ConfigError, match="omega0"):
        parse_config(doc)


def test_unknown_keys_rejected_with_path():
    with pytest.raises(ConfigError, match="bogus"):
        parse_config(MINIMAL + "bogus = 1\n")
    with pytest.raises(ConfigError, match="landscape.spacing"):
        parse_config(MINIMAL + "[landscape]\nspacing = 3\n")
    with pytest.raises(ConfigError, match="dmft.damping"):
        parse_config(MINIMAL + "[dmft]\ndamping = 0.5\n")


def test_missing_required_key_rejected():
    with pytest.raises(ConfigError, match="V"):
        parse_config("U = 4.0\nomega0 = 5.0\nlambda = 1.5\n")


def test_syntax_error_reported_as_config_error():
    with pytest.raises(ConfigError, match="syntax"):
        parse_config("U = = 4\n")


def test_mu_conventions_resolve():
    assert parse_config(MINIMAL + 'mu = "u-half"\n').params.mu == 2.0
    assert parse_config(MINIMAL + 'mu = "displaced"\n').params.mu == pytest.approx(1.1)
    fit = parse_config(MINIMAL + 'mu = "half-filling-fit"\n').params.mu
    assert fit == pytest.approx(1.2739295073949375, abs=1e-12)
    with pytest.raises(ConfigError, match="convention"):
        parse_config(MINIMAL + 'mu = "bogus-rule"\n')


def test_type_errors_are_config_errors():
    with pytest.raises(ConfigError, match="U"):
        parse_config(MINIMAL.replace("U = 4.0", 'U = "four"'))
    with pytest.raises(ConfigError, match="seed"):
        parse_config(MINIMAL + "seed = 1.5\n")
    with pytest.raises(ConfigError, match="U"):
        parse_config(MINIMAL.replace("U = 4.0", "U = true"))
    with pytest.raises(ConfigError, match="landscape"):
        parse_config(MINIMAL + "landscape = 3\n")
    with pytest.raises(ConfigError, match="theta0_range"):
        parse_config(MINIMAL + "[landscape]\ntheta0_range = [0.0]\n")


def test_noise_section_requires_shots():
    with pytest.raises(ConfigError, match="noise.shots"):
        parse_config(MINIMAL + "[noise]\nreadout_flip = 0.01\n")


def test_section_invariants_surface_with_section_name():
    with pytest.raises(ConfigError, match="frequency"):
        parse_config(MINIMAL + "[frequency]\nomega_min = 2.0\nomega_max = -2.0\n")
    with pytest.raises(ConfigError, match="time"):
        parse_config(MINIMAL + "[time]\nn_steps = 0\n")


def echo_to_document(echo):
    """Rebuild a config document from a manifest echo."""
    lines = []
    for key in ("U", "V", "mu", "omega0", "lambda", "n_boson_levels", "seed", "output_dir"):
        lines.append(f"{key} = {json.dumps(echo[key])}")
    for section in ("landscape", "frequency", "time", "noise", "dmft"):
        body = echo[section]
        if body is None:
            continue
        if section == "noise":
            body = {k: v for k, v in body.items() if k != "seed"}
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {json.dumps(v)}" for k, v in body.items())
    return "\n".join(lines) + "\n"


def test_config_round_trips_through_manifest_echo():
    cfg = parse_config(FULL)
    assert parse_config(echo_to_document(cfg.as_dict())) == cfg


# ------------------------------------------------------- output layer


def test_format_number_round_trips():
    for x in (0.1, -2.6238194286927605, 1e-300, 3.0, math.pi):
        assert float(format_number(x)) == x
    assert format_number(7) == "7"
    with pytest.raises(TypeError):
        format_number(True)


def test_plainify_strips_numpy_types():
    out = plainify({"a": np.float64(1.5), "b": np.arange(3), "c": (np.int64(2), np.bool_(True))})
    assert out == {"a": 1.5, "b": [0, 1, 2], "c": [2, True]}
    assert json.dumps(out)


def test_content_hash_ignores_output_dir_but_not_physics():
    base = parse_config(MINIMAL).as_dict()
    moved = dict(base, output_dir="elsewhere")
    retuned = dict(base, U=4.1)
    assert content_hash(base) == content_hash(moved)
    assert content_hash(base) != content_hash(retuned)


def test_write_csv_single_header_and_exact_floats(tmp_path):
    writer = ArtifactWriter(tmp_path / "run")
    path = writer.write_csv("table.csv", ["x", "y"], [(0.1, -2.5), (7, 1e-17)])
    header, rows = read_csv(path)
    assert header == ["x", "y"]
    assert rows == [[0.1, -2.5], [7.0, 1e-17]]


def test_discard_removes_artifacts_and_created_dir(tmp_path):
    fresh = tmp_path / "fresh"
    writer = ArtifactWriter(fresh)
    writer.write_csv("a.csv", ["x"], [(1.0,)])
    writer.discard()
    assert not fresh.exists()

    existing = tmp_path / "existing"
    existing.mkdir()
    keep = existing / "keep.txt"
    keep.write_text("mine")
    writer = ArtifactWriter(existing)
    writer.write_csv("a.csv", ["x"], [(1.0,)])
    writer.discard()
    assert keep.exists() and not (existing / "a.csv").exists()


# ------------------------------------------------------------ the CLI


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_ed_writes_pole_table_and_ground_energy(tmp_path):
    out = tmp_path / "ed"
    assert run_cli("ed", "--out", out) == 0
    manifest = load_manifest(out)
    assert manifest["results"]["e0"] == pytest.approx(-3.402450378556779, abs=1e-9)
    assert manifest["results"]["total_weight"] == pytest.approx(1.0, abs=1e-10)
    assert manifest["config"]["mu"] == "u-half" and manifest["config"]["mu_value"] == 2.0
    header, rows = read_csv(out / "lehmann.csv")
    assert header == ["omega", "weight"]
    assert sum(w for _, w in rows) == pytest.approx(1.0, abs=1e-10)


def test_ed_mu_override_hits_benchmark_energy(tmp_path):
    out = tmp_path / "ed"
    assert run_cli("ed", "--mu", "half-filling-fit", "--out", out) == 0
    manifest = load_manifest(out)
    assert manifest["results"]["e0"] == pytest.approx(-2.6238194286927605, abs=1e-9)
    assert manifest["config"]["mu"] == "half-filling-fit"


def test_vqe_landscape_artifact(tmp_path):
    out = tmp_path / "vqe"
    cfg = tmp_path / "run.toml"
    cfg.write_text(MINIMAL + 'mu = "half-filling-fit"\n[landscape]\ntheta0_points = 12\ntheta1_points = 12\n')
    assert run_cli("vqe", "--config", cfg, "--out", out) == 0
    header, rows = read_csv(out / "landscape.csv")
    assert header == ["theta0", "theta1", "energy"]
    assert len(rows) == 144
    manifest = load_manifest(out)
    exact_e0 = -2.6238194286927605
    assert manifest["results"]["e_min"] >= exact_e0 - 1e-9
    assert manifest["results"]["grid_min"] >= manifest["results"]["e_min"] - 1e-12


def test_vqe_sampled_uses_noise_flags(tmp_path):
    out = tmp_path / "vqe"
    cfg = tmp_path / "run.toml"
    cfg.write_text(MINIMAL + "[landscape]\ntheta0_points = 4\ntheta1_points = 4\n")
    assert run_cli("vqe", "--config", cfg, "--out", out, "--mode", "sampled", "--shots", 500, "--seed", 3) == 0
    manifest = load_manifest(out)
    assert manifest["config"]["noise"] == {"shots": 500, "readout_flip": 0.0, "seed": 3}
    assert manifest["config"]["mode"] == "sampled"


def test_kvqa_chain_artifacts(tmp_path):
    out = tmp_path / "kvqa"
    assert run_cli("kvqa", "--mu", "half-filling-fit", "--out", out) == 0
    header, rows = read_csv(out / "chain_hole.csv")
    assert header == ["n", "a", "b2"]
    assert rows[0][2] == 0.0, "no b before the first recursion step"
    manifest = load_manifest(out)
    assert manifest["results"]["hole"]["mode"] == "variational-exact"
    poles = manifest["results"]["poles"]
    assert sum(w for _, w in poles) == pytest.approx(1.0, abs=1e-8)


def test_kvqa_sampled_rerun_is_byte_identical(tmp_path):
    args = ("kvqa", "--mode", "sampled", "--seed", 7, "--shots", 4000, "--mu", "half-filling-fit")
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run_cli(*args, "--out", out1) == 0
    assert run_cli(*args, "--out", out2) == 0
    for name in ("chain_hole.csv", "chain_particle.csv", "poles.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    m1, m2 = load_manifest(out1), load_manifest(out2)
    assert m1["results"] == m2["results"]
    assert m1["content_hash"] == m2["content_hash"]
    assert m1["results"]["hole"]["mode"] == "variational-sampled"


def test_spectrum_artifact_columns(tmp_path):
    out = tmp_path / "spec"
    cfg = tmp_path / "run.toml"
    cfg.write_text(MINIMAL + 'mu = "half-filling-fit"\n[frequency]\nn_points = 101\n')
    assert run_cli("spectrum", "--config", cfg, "--out", out) == 0
    header, rows = read_csv(out / "spectrum.csv")
    assert header == ["omega", "A", "ReG", "ImG"]
    assert len(rows) == 101
    assert all(row[1] >= 0.0 for row in rows), "spectral weight stays nonnegative"
    assert all(row[3] <= 0.0 for row in rows), "retarded ImG stays nonpositive"
    manifest = load_manifest(out)
    assert manifest["results"]["spectral_gap"] == pytest.approx(1.2571067979654065, abs=1e-9)


def test_dmft_iterate_manifest(tmp_path):
    out = tmp_path / "dmft"
    assert run_cli("dmft", "--out", out) == 0
    manifest = load_manifest(out)
    res = manifest["results"]
    assert res["action"] == "iterate" and res["converged"]
    assert res["v_star"] == pytest.approx(0.8000079309463922, abs=1e-9)
    header, rows = read_csv(out / "dmft_history.csv")
    assert header == ["iteration", "V", "Z"]
    assert len(rows) == res["n_iterations"]


def test_dmft_scan_artifact(tmp_path):
    out = tmp_path / "dmft"
    assert run_cli("dmft", "--scan", "--out", out) == 0
    header, rows = read_csv(out / "dmft_scan.csv")
    assert header == ["V", "Z", "sqrtZM2"]
    assert len(rows) == 20
    manifest = load_manifest(out)
    assert manifest["results"]["v_cross"] == pytest.approx(0.7998941370238124, abs=1e-9)
    assert manifest["config"]["action"] == "scan"


def test_dmft_scan_and_iterate_flags_exclusive(tmp_path):
    with pytest.raises(SystemExit) as exc:
        run_cli("dmft", "--scan", "--iterate", "--out", tmp_path)
    assert exc.value.code == 2


def test_trotter_trace(tmp_path):
    out = tmp_path / "trotter"
    cfg = tmp_path / "run.toml"
    cfg.write_text(MINIMAL + 'mu = "half-filling-fit"\n[time]\nt_max = 2.0\nn_steps = 10\n')
    assert run_cli("trotter", "--config", cfg, "--out", out, "--nt", 4) == 0
    header, rows = read_csv(out / "time_trace.csv")
    assert header == ["t", "ImG_trotter", "ImG_exact"]
    assert len(rows) == 11
    assert rows[0][1] == -1.0 and rows[0][2] == -1.0
    manifest = load_manifest(out)
    assert manifest["results"]["max_abs_error"] < 0.2
    assert manifest["config"]["nt"] == 4


def test_vha_trace_and_trajectory(tmp_path):
    out = tmp_path / "vha"
    cfg = tmp_path / "run.toml"
    cfg.write_text(MINIMAL + 'mu = "half-filling-fit"\n[time]\nt_max = 0.2\nn_steps = 2\n')
    assert run_cli("vha", "--config", cfg, "--out", out) == 0
    header, rows = read_csv(out / "time_trace.csv")
    assert header == ["t", "ImG_vha", "ImG_exact"]
    header, rows = read_csv(out / "vha_trajectory.csv")
    assert header[0] == "t" and len(header) == 13, "one column per product term"
    assert len(rows) == 3
    manifest = load_manifest(out)
    assert manifest["results"]["max_residual"] <= 1e-8
    # single-layer ansatz error grows quickly; only sanity-bound it here
    assert manifest["results"]["max_abs_error"] < 0.1


def test_compare_table_and_stage_timings(tmp_path):
    out = tmp_path / "cmp"
    cfg = tmp_path / "run.toml"
    cfg.write_text(MINIMAL + 'mu = "half-filling-fit"\n[time]\nt_max = 2.0\nn_steps = 10\n')
    assert run_cli("compare", "--config", cfg, "--out", out, "--nt", 10) == 0
    header, rows = read_csv(out / "compare.csv")
    assert header == ["t", "ImG_kvqa", "ImG_trotter", "ImG_exact"]
    manifest = load_manifest(out)
    assert manifest["results"]["max_abs_error_kvqa"] < 1e-6, "depth-3 chains capture the full spectrum here"
    assert manifest["results"]["max_abs_error_trotter"] < 0.1
    assert set(manifest["timing_seconds"]) == {"kvqa", "trotter", "exact", "total"}


def test_ordering_flag_round_trips(tmp_path):
    out = tmp_path / "trotter"
    cfg = tmp_path / "run.toml"
    # at mu = U/2 two number-operator terms vanish; the fit keeps all 12
    cfg.write_text(MINIMAL + 'mu = "half-filling-fit"\n[time]\nt_max = 1.0\nn_steps = 4\n')
    perm = ",".join(str(k) for k in reversed(range(12)))
    assert run_cli("trotter", "--config", cfg, "--out", out, "--ordering", perm) == 0
    manifest = load_manifest(out)
    assert manifest["results"]["ordering"] == list(reversed(range(12)))


def test_exit_code_2_on_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text(MINIMAL + "bogus = 1\n")
    assert run_cli("ed", "--config", cfg, "--out", tmp_path / "run") == 2
    assert "bogus" in capsys.readouterr().err


def test_exit_code_2_on_bad_ordering(tmp_path):
    assert run_cli("trotter", "--ordering", "0,1,duck", "--out", tmp_path / "run") == 2
    assert run_cli("trotter", "--ordering", "0,0,1", "--out", tmp_path / "run") == 2


def test_exit_code_3_on_numerical_failure_and_cleanup(tmp_path, capsys):
    cfg = tmp_path / "degen.toml"
    cfg.write_text("U = 0.0\nV = 0.0\nomega0 = 5.0\nlambda = 0.0\nmu = 0.0\n")
    out = tmp_path / "run"
    assert run_cli("ed", "--config", cfg, "--out", out) == 3
    assert "degenerate" in capsys.readouterr().err
    assert not out.exists(), "partial artifacts are retracted"


def test_exit_code_4_on_missing_config(tmp_path):
    assert run_cli("ed", "--config", tmp_path / "nope.toml", "--out", tmp_path / "run") == 4


def test_manifest_stable_across_reruns_except_timing(tmp_path):
    out = tmp_path / "run"
    assert run_cli("ed", "--out", out) == 0
    first = load_manifest(out)
    assert run_cli("ed", "--out", out) == 0
    second = load_manifest(out)
    for key in ("config", "results", "content_hash"):
        assert first[key] == second[key]


def test_emit_plots_references_only_emitted_csvs(tmp_path):
    out = tmp_path / "run"
    assert run_cli("ed", "--out", out, "--emit-plots") == 0
    script = (out / "plots.py").read_text()
    assert "lehmann.csv" in script
    assert "matplotlib" in script
    referenced = {name for name in script.split('"') if name.endswith(".csv")}
    emitted = {p.name for p in out.glob("*.csv")}
    assert referenced <= emitted


def test_seed_override_echoed(tmp_path):
    out = tmp_path / "run"
    assert run_cli("ed", "--seed", 42, "--out", out) == 0
    assert load_manifest(out)["config"]["seed"] == 42
