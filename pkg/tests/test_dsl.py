import math
from dataclasses import replace
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from ifprep.amplitudes import GD157
from ifprep.dsl import (
    KEYS,
    AbsorberConfig,
    ExperimentConfig,
    MonteCarloConfig,
    ParseError,
    WavepacketConfig,
    parse,
    serialize,
    tokenize,
)
from ifprep.interferometer import NetworkSpec
from ifprep.joint_state import BeamGeometry

GOLDEN = Path(__file__).parent / "data" / "default.ifp"


def error_of(source: str) -> ParseError:
    with pytest.raises(ParseError) as info:
        parse(source)
    return info.value


class TestDefaults:
    def test_empty_source(self):
        cfg = parse("")
        assert cfg == ExperimentConfig()
        assert cfg.geometry == BeamGeometry(10.0, 1000.0)
        assert cfg.absorber.preset == "gd157"
        assert cfg.absorber.z_mag_sq == 0.5
        assert cfg.absorber.cross_sections().sigma_abs == GD157.sigma_abs

    def test_comments_and_whitespace_only(self):
        assert parse("# nothing here\n\n   # still nothing\r\n") == ExperimentConfig()

    def test_golden_file(self):
        assert serialize(parse("")) == GOLDEN.read_text()

    def test_every_key_once(self):
        text = serialize(parse(""))
        for section, keys in KEYS.items():
            for key in keys:
                if key in ("sigma_abs", "sigma_scat"):
                    continue
                assert sum(line.split()[0] == key for line in text.splitlines()) == 1


class TestParsing:
    def test_gd_preset_amplitudes(self):
        cfg = parse("absorber { preset = gd157  z_mag_sq = 0.5 }")
        assert cfg.amplitudes().p_scatter_total == pytest.approx(2.0e-5, rel=1e-12)

    def test_full_file(self):
        cfg = parse(
            """
            # perfect black absorber
            beam { w_n = 100 um w_Gd = 1000 um }
            absorber {
                sigma_abs = 1 barn
                sigma_scat = 0 barn
                wavenumber = 2.5 invA
                z_mag_sq = 1
                inelastic_split = 0
            }
            network { bs1_reflectivity = 0.5 phase_I = -0.25 }
            montecarlo { n_trials = 1000 shutter_delay = 12.5 us atom_speed = 300 mps dump_trials = true }
            wavepacket { x_min = -1e3 um x_max = +1e3 um n_samples = 65536 edge_fraction = 0.2 window_center = 5 um }
            """
        )
        assert cfg.geometry == BeamGeometry(100.0, 1000.0)
        assert cfg.absorber.preset is None
        assert cfg.absorber.cross_sections().wavenumber_k == pytest.approx(2.5e10)
        assert cfg.amplitudes().c == 0.0
        assert cfg.network.extra_phase_I == -0.25
        assert cfg.montecarlo == MonteCarloConfig(1000, 12.5, 300.0, True)
        assert cfg.wavepacket.n_samples == 65536

    def test_crlf_and_compact(self):
        a = parse("beam{w_n=20um w_Gd=200um}")
        b = parse("beam {\r\n  w_n = 20 um\r\n  w_Gd = 200 um\r\n}\r\n")
        assert a == b

    def test_tokens_positions(self):
        toks = tokenize("beam {\n  w_n = 10 um\n}")
        assert [(t.kind, t.line, t.column) for t in toks[:5]] == [
            ("IDENT", 1, 1), ("LBRACE", 1, 6), ("IDENT", 2, 3), ("EQUALS", 2, 7), ("NUMBER", 2, 9),
        ]


class TestErrors:
    def test_w_n_exceeds(self):
        err = error_of("beam { w_n = 2000 um  w_Gd = 1000 um }")
        assert "w_n exceeds w_Gd" in err.message
        assert (err.line, err.column) == (1, 8)
        assert err.offending_token == "w_n"

    def test_w_n_exceeds_multiline(self):
        err = error_of("beam {\n  w_Gd = 1000 um\n  w_n = 2000 um\n}\n")
        assert (err.line, err.column) == (3, 3)

    def test_unknown_section(self):
        err = error_of("detector { x = 1 }")
        assert "detector" in err.message and err.column == 1

    def test_unknown_key(self):
        err = error_of("beam { width = 3 um }")
        assert "width" in err.message and err.offending_token == "width"

    def test_duplicate_key(self):
        assert "duplicate" in error_of("beam { w_n = 1 um w_n = 2 um }").message

    def test_duplicate_section(self):
        assert "duplicate" in error_of("beam { } beam { }").message

    def test_missing_unit(self):
        err = error_of("beam {\n w_n = 20\n w_Gd = 1000 um }")
        assert "requires a unit" in err.message and (err.line, err.column) == (2, 8)

    def test_wrong_unit(self):
        assert "takes unit" in error_of("beam { w_n = 20 barn }").message

    def test_dimensionless_rejects_unit(self):
        assert "dimensionless" in error_of("absorber { z_mag_sq = 0.5 um }").message

    def test_integer_required(self):
        assert "integer" in error_of("montecarlo { n_trials = 1e6 }").message

    def test_bool_required(self):
        assert "true or false" in error_of("montecarlo { dump_trials = 1 }").message

    def test_preset_conflict(self):
        assert "conflicts" in error_of("absorber { preset = gd157 sigma_abs = 1 barn }").message

    def test_unknown_preset(self):
        assert "unknown preset" in error_of("absorber { preset = boron10 }").message

    def test_overflow(self):
        err = error_of("absorber { z_mag_sq = 1.0 }")
        assert "z_mag_sq" in err.message

    def test_unterminated(self):
        err = error_of("beam {\n w_n = 20 um")
        assert err.line == 2 and 1 <= err.column <= len(" w_n = 20 um")

    def test_bad_character(self):
        err = error_of("beam { w_n = 20 um; }")
        assert err.offending_token == ";" and err.column == 19

    @pytest.mark.parametrize(
        "source, key",
        [
            ("network { bs1_reflectivity = 1.5 }", "bs1_reflectivity"),
            ("montecarlo { n_trials = 0 }", "n_trials"),
            ("wavepacket { n_samples = 1000 }", "n_samples"),
            ("wavepacket { edge_fraction = 0.5 }", "edge_fraction"),
            ("wavepacket { x_min = 10 um x_max = 5 um }", "x_max"),
            ("absorber { inelastic_split = 2 }", "inelastic_split"),
            ("beam { w_n = -1 um }", "w_n"),
        ],
    )
    def test_semantic_errors_name_key(self, source, key):
        err = error_of(source)
        assert key in err.message
        assert err.offending_token == key

    @settings(max_examples=300, deadline=None)
    @given(st.text(alphabet="beamw_nG{}=0123456789. u#\n\r-+ebarnx", max_size=60))
    def test_error_locations_inside_source(self, source):
        try:
            parse(source)
        except ParseError as err:
            lines = source.split("\n")
            assert 1 <= err.line <= len(lines)
            assert 1 <= err.column <= max(len(lines[err.line - 1]), 1)


finite = dict(allow_nan=False, allow_infinity=False)


@st.composite
def configs(draw):
    w_gd = draw(st.floats(1.0, 1e5, **finite))
    w_n = draw(st.floats(1e-3, 1.0, **finite)) * w_gd
    if draw(st.booleans()):
        absorber = AbsorberConfig(
            preset="gd157",
            z_mag_sq=draw(st.floats(0.0, 0.99, **finite)),
            inelastic_split=draw(st.floats(0.0, 1.0, **finite)),
            wavenumber=draw(st.floats(0.01, 100.0, **finite)),
        )
    else:
        sa = draw(st.floats(1e-3, 1e6, **finite))
        ss = draw(st.floats(0.0, 1.0, **finite)) * sa
        absorber = AbsorberConfig(
            preset=None, sigma_abs=sa, sigma_scat=ss,
            z_mag_sq=draw(st.floats(0.0, 0.5, **finite)),
            inelastic_split=draw(st.floats(0.0, 1.0, **finite)),
        )
    network = NetworkSpec(
        draw(st.floats(0.0, 1.0, **finite)), draw(st.floats(0.0, 1.0, **finite)),
        draw(st.floats(-10.0, 10.0, **finite)), draw(st.floats(-10.0, 10.0, **finite)),
    )
    mc = MonteCarloConfig(
        draw(st.integers(1, 10**9)), draw(st.floats(0.0, 1e6, **finite)),
        draw(st.floats(0.0, 1e4, **finite)), draw(st.booleans()),
    )
    x_min = draw(st.floats(-1e5, 0.0, **finite))
    wp = WavepacketConfig(
        x_min, x_min + draw(st.floats(1.0, 1e5, **finite)), 2 ** draw(st.integers(6, 20)),
        draw(st.floats(0.0, 0.49, **finite)), draw(st.floats(-100.0, 100.0, **finite)),
    )
    return ExperimentConfig(BeamGeometry(w_n, w_gd), absorber, network, mc, wp)


class TestRoundTrip:
    @settings(max_examples=200, deadline=None)
    @given(configs())
    def test_parse_serialize_identity(self, cfg):
        text = serialize(cfg)
        assert parse(text) == cfg
        assert serialize(parse(text)) == text

    def test_default_idempotent(self):
        text = serialize(parse(""))
        assert serialize(parse(text)) == text

    def test_awkward_floats(self):
        cfg = replace(ExperimentConfig(), network=NetworkSpec(0.1 + 0.2, 1 / 3, math.pi, -1e-300))
        assert parse(serialize(cfg)) == cfg
