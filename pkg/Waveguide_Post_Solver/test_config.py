"""
Tests for loading and validating run configurations.
"""

import json
from pathlib import Path

import pytest

from Waveguide_Post_Solver.config import (
    dump_config,
    load_config,
    parse_config,
)
from Waveguide_Post_Solver.errors import ConfigParseError, ConfigValidationError
from Waveguide_Post_Solver.junction import Discretization
from Waveguide_Post_Solver.network import JunctionElement, UniformGuide


def _document(**changes):
    data = {
        "waveguide": {"preset": "WR-62"},
        "elements": [
            {"type": "post", "radius_mm": 2.0, "d_mm": 3.0},
            {"type": "guide", "length_mm": 15.0},
            {"type": "post", "radius_mm": 2.0, "d_mm": 5.0},
        ],
        "sweep": {"f_start_ghz": 12.4, "f_stop_ghz": 18.0, "n_points": 11},
    }
    data.update(changes)
    return data


def _parse(**changes):
    return parse_config(json.dumps(_document(**changes)))


class TestParseConfig:
    def test_two_post_document(self):
        cfg = _parse()
        net = cfg.build_network()
        assert cfg.to_waveguide().a == pytest.approx(15.799e-3)
        assert isinstance(net.elements[1], UniformGuide)
        assert net.elements[1].length == pytest.approx(15e-3)
        assert net.junctions[0].h == pytest.approx(10.8995e-3)
        assert net.junctions[0].R == pytest.approx(2e-3)

    def test_defaults(self):
        cfg = _parse()
        assert cfg.numerics.modes == 60
        assert cfg.numerics.k_factor == 1.6
        assert cfg.output.parameters == ["S11", "S21"]
        assert cfg.f_start == pytest.approx(12.4e9)
        settings = cfg.sweep_settings()
        assert settings.M == 60
        assert settings.policy.fixed is None

    def test_explicit_dimensions_and_wall_offset(self):
        cfg = _parse(
            waveguide={"a_mm": 22.86, "b_mm": 10.16},
            elements=[{"type": "post", "radius_mm": 1.0, "h_mm": 8.0}],
        )
        assert cfg.build_network().junctions[0].h == pytest.approx(8e-3)

    def test_fixed_discretization(self):
        cfg = _parse(numerics={"modes": 20, "k_d": 10, "k_u": 8, "k_c": 9})
        assert cfg.sweep_settings().policy.fixed == Discretization(10, 8, 9)

    def test_post_too_large(self):
        doc = _document(elements=[{"type": "post", "radius_mm": 9.0, "d_mm": 0.0}])
        with pytest.raises(ConfigValidationError) as exc:
            parse_config(json.dumps(doc))
        assert exc.value.errors[0].startswith("elements.0")

    def test_empty_elements(self):
        with pytest.raises(ConfigValidationError) as exc:
            _parse(elements=[])
        assert any(e.startswith("elements") for e in exc.value.errors)

    def test_collects_every_error(self):
        with pytest.raises(ConfigValidationError) as exc:
            _parse(
                waveguide={"preset": "WR-62", "colour": "red"},
                sweep={"f_start_ghz": 18.0, "f_stop_ghz": 12.0},
                numerics={"modes": 0},
            )
        locations = " ".join(exc.value.errors)
        assert len(exc.value.errors) >= 3
        assert "waveguide.colour" in locations
        assert "sweep" in locations
        assert "numerics.modes" in locations

    def test_overlapping_posts(self):
        elements = [
            {"type": "post", "radius_mm": 2.0, "d_mm": 3.0},
            {"type": "guide", "length_mm": 3.0},
            {"type": "post", "radius_mm": 2.0, "d_mm": -3.0},
        ]
        with pytest.raises(ConfigValidationError) as exc:
            _parse(elements=elements)
        assert "overlap" in exc.value.errors[0]

    @pytest.mark.parametrize(
        "element",
        [
            {"type": "post", "radius_mm": 2.0},
            {"type": "post", "radius_mm": 2.0, "d_mm": 1.0, "h_mm": 8.0},
            {"type": "guide", "length_mm": -1.0},
            {"type": "iris", "width_mm": 3.0},
        ],
    )
    def test_invalid_elements(self, element):
        with pytest.raises(ConfigValidationError):
            _parse(elements=[element])

    def test_partial_counts(self):
        with pytest.raises(ConfigValidationError):
            _parse(numerics={"k_d": 10})

    def test_counts_too_small_for_modes(self):
        with pytest.raises(ConfigValidationError):
            _parse(numerics={"modes": 40, "k_d": 10, "k_u": 10, "k_c": 10})

    def test_unknown_preset(self):
        with pytest.raises(ConfigValidationError) as exc:
            _parse(waveguide={"preset": "WR-1"})
        assert "unknown preset" in exc.value.errors[0]

    def test_repeated_parameters(self):
        with pytest.raises(ConfigValidationError):
            _parse(output={"parameters": ["S11", "S11"]})


class TestMalformedDocuments:
    def test_reports_line_and_column(self):
        text = '{\n  "waveguide": {"preset": "WR-62"},\n  "elements": [,]\n}\n'
        with pytest.raises(ConfigParseError) as exc:
            parse_config(text)
        assert exc.value.line == 3
        assert exc.value.column is not None

    def test_non_object(self):
        with pytest.raises(ConfigParseError):
            parse_config("[1, 2, 3]")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigParseError):
            load_config(tmp_path / "missing.json")


class TestRoundTrip:
    def test_dump_and_parse(self, tmp_path):
        cfg = _parse(output={"csv": "out.csv", "touchstone": "out.s2p"})
        path = tmp_path / "run.json"
        path.write_text(dump_config(cfg), encoding="utf-8")
        assert load_config(path) == cfg

    def test_dump_is_stable(self):
        cfg = _parse()
        text = dump_config(cfg)
        assert dump_config(parse_config(text)) == text
        assert text.endswith("}\n")


class TestOverrides:
    def test_command_line_values_win(self, tmp_path):
        cfg = _parse().with_overrides(
            output=tmp_path / "x.csv", threads=3, modes=10, quadrature_order=8
        )
        assert cfg.output.csv == str(tmp_path / "x.csv")
        assert cfg.numerics.threads == 3
        assert cfg.numerics.modes == 10
        assert cfg.sweep_settings().quadrature_order == 8

    def test_original_is_unchanged(self):
        cfg = _parse()
        cfg.with_overrides(modes=10)
        assert cfg.numerics.modes == 60

    def test_overrides_are_revalidated(self):
        cfg = _parse(numerics={"modes": 20, "k_d": 8, "k_u": 8, "k_c": 8})
        with pytest.raises(ConfigValidationError):
            cfg.with_overrides(modes=30)

    def test_elements_survive_overrides(self):
        net = _parse().with_overrides(threads=2).build_network()
        assert [type(e) for e in net.elements] == [JunctionElement, UniformGuide, JunctionElement]


@pytest.mark.parametrize("name", ["two_post_l15", "three_post_filter", "five_post_filter"])
def test_documented_configs_parse(name):
    path = Path(__file__).resolve().parents[1] / "docs" / "configs" / f"{name}.json"
    if not path.exists():
        pytest.skip("documentation configs are not installed with the package")
    cfg = load_config(path)
    assert cfg.numerics.modes == 60
    assert len(cfg.build_network().junctions) in (2, 3, 5)
