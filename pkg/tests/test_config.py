import pytest

from rhlab.config import parse_config, serialize_config
from rhlab.errors import ConfigError

MINIMAL = """
[grid]
dim = 1
cells = 64
lengths = 1.0

[run]
t_final = 0.01
"""


class TestParsing:
    def test_minimal_config_fills_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.dim == 1
        assert cfg.cells == (64,)
        assert cfg.boundary == "periodic"
        assert cfg.q == 4.0
        assert cfg.gamma == 2.0
        assert cfg.scenario == "equilibrium"
        assert 0 < cfg.dt <= cfg.slab_length <= cfg.t_final

    def test_viscosity_constraint_cited_with_line(self):
        text = MINIMAL + "\n[physics]\nmu = 3.0\nlambda = -3.0\n"
        with pytest.raises(ConfigError) as ei:
            parse_config(text)
        err = ei.value
        assert any("lambda + (2/3) mu" in msg for _, msg in err.violations)
        lam_line = text.splitlines().index("lambda = -3.0") + 1
        assert any(ln == lam_line for ln, _ in err.violations)

    def test_q_range_message(self):
        with pytest.raises(ConfigError, match=r"q must lie in \(3, 6\]"):
            parse_config(MINIMAL + "\n[physics]\nq = 7\n")

    def test_unknown_key_reported(self):
        with pytest.raises(ConfigError) as ei:
            parse_config(MINIMAL + "\n[grid]\nfoo = 1\n")
        assert any("unknown key 'foo'" in msg for _, msg in ei.value.violations)

    def test_unknown_section_reported(self):
        with pytest.raises(ConfigError) as ei:
            parse_config(MINIMAL + "\n[proofs]\nkey = 1\n")
        assert any("unknown section" in msg for _, msg in ei.value.violations)

    def test_all_violations_collected(self):
        text = """
[grid]
dim = 1
cells = 2
lengths = -1.0

[physics]
gamma = 0.5
q = 7

[run]
t_final = -3
"""
        with pytest.raises(ConfigError) as ei:
            parse_config(text)
        msgs = [m for _, m in ei.value.violations]
        assert len(msgs) >= 5
        assert any("at least 4 cells" in m for m in msgs)
        assert any("gamma must exceed 1" in m for m in msgs)
        assert any("q must lie in" in m for m in msgs)
        assert any("t_final" in m for m in msgs)

    def test_cfl_inconsistent_dt_rejected(self):
        text = MINIMAL + "\n[run]\nslab_length = 0.01\ndt = 0.01\n"
        # c dt = 0.01 > h = 1/64 is fine; force violation with larger dt
        text = MINIMAL + "\n[run]\nslab_length = 0.05\ndt = 0.05\n"
        with pytest.raises(ConfigError, match="CFL"):
            parse_config(text)

    def test_bad_value_type_reported_with_line(self):
        with pytest.raises(ConfigError) as ei:
            parse_config(MINIMAL + "\n[physics]\nmu = fast\n")
        assert any("expected a number" in msg for _, msg in ei.value.violations)

    def test_malformed_line(self):
        with pytest.raises(ConfigError) as ei:
            parse_config(MINIMAL + "\njust some words\n")
        assert any("key = value" in msg for _, msg in ei.value.violations)

    def test_farfield_scenario_config(self):
        cfg = parse_config("""
[grid]
dim = 1
cells = 128
lengths = 1.0
boundary = farfield
rho_bar = 1.0

[model]
kind = compton
D1 = 1.0
D2 = 2.0
v0 = 1.5
theta = 1.0

[scenario]
name = vacuum-plateau

[run]
t_final = 0.002
deltas = 1e-2, 1e-3
""")
        assert cfg.model_kind == "compton"
        assert cfg.deltas == (1e-2, 1e-3)
        assert cfg.build_delta_schedule().deltas == (1e-2, 1e-3)

    def test_unknown_scenario(self):
        with pytest.raises(ConfigError, match="unknown scenario"):
            parse_config(MINIMAL + "\n[scenario]\nname = warp-drive\n")


class TestRoundTrip:
    def test_default_round_trip(self):
        cfg = parse_config(MINIMAL)
        assert parse_config(serialize_config(cfg)) == cfg

    def test_rich_round_trip(self):
        cfg = parse_config("""
[grid]
dim = 1
cells = 96
lengths = 2.0
boundary = farfield
rho_bar = 0.7

[radiation]
ordinates = 4
band_edges = 0.25, 1.0, 3.0

[physics]
eos = polytropic
A = 0.9
gamma = 1.4
mu = 0.8
lambda = -0.3
c = 2.0
q = 5.5

[model]
kind = constant
sigma0 = 0.4
kernel0 = 0.1
emission0 = 0.02

[scenario]
name = smooth-bump
amplitude = 0.25

[run]
t_final = 0.008
slab_length = 0.004
dt = 0.002
max_iters = 25
gamma_tol = 1e-7
halve_on_stall = false
max_halvings = 4
continuity = characteristics
snapshot_stride = 2
output_dir = results
deltas = 1e-2, 1e-4
extrapolate = true
""")
        assert parse_config(serialize_config(cfg)) == cfg

    def test_builders_construct(self):
        cfg = parse_config(MINIMAL)
        grids = cfg.build_grids()
        assert grids.radiation_shape()[0] == len(cfg.band_edges) - 1
        cfg.build_eos()
        cfg.build_viscosity()
        cfg.build_constants()
        cfg.build_model()
        cfg.build_slab_config()
        assert cfg.build_delta_schedule() is None
