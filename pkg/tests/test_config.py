"""Config parsing: strictness, defaults, field-path errors, round trips."""

import json

import numpy as np
import pytest

from tukeylink.config import (
    BandwidthSettings,
    ConfigError,
    ConstellationSpec,
    ExperimentConfig,
    load_config,
)


def test_empty_config_materializes_all_defaults():
    cfg = ExperimentConfig.from_dict({})
    out = cfg.to_dict()
    assert out["metric"] == "mi"
    assert out["n"] == 4
    assert out["beta"] == 0.9
    assert out["T"] == 100e-12
    assert out["M"] == 256
    assert out["seed"] == 0
    assert out["label_seed"] == 0
    assert out["constellation"] == {"kind": "ring_phase", "rings": 2,
                                    "phases": 4, "stagger": False}
    assert out["apd"]["temperature"] == 300.0
    assert out["apd"]["load_resistance"] == 15.0
    assert out["apd"]["gain"] == 20.0
    assert out["apd"]["k_factor"] == 0.6
    assert out["apd"]["responsivity"] == 0.5
    assert out["sweep"]["trials"] == 100_000
    assert out["sweep"]["max_trials"] == 1_000_000
    assert out["sweep"]["min_errors"] == 100
    assert out["sweep"]["prior"] == "uniform"
    assert out["channel"] == {"kind": "backtoback"}
    assert out["bandwidth"]["betas"] == [0.1, 0.3, 0.5, 0.7, 0.8, 0.9]
    assert out["bandwidth"]["fractions"] == [0.90, 0.95]
    assert out["power_check"] == {"symbols": 100_000, "oversampling": 64}


def test_resolved_dict_reparses_to_equal_config():
    raw = {"metric": "ber", "n": 3, "M": 32, "seed": 9,
           "constellation": {"rings": 4, "phases": 4, "stagger": True},
           "sweep": {"powers_dbm": [-20.0, -15.0], "min_errors": 10}}
    cfg = ExperimentConfig.from_dict(raw)
    echo = cfg.to_dict()
    again = ExperimentConfig.from_dict(echo)
    assert again == cfg
    assert again.to_dict() == echo


def test_json_file_round_trip(tmp_path):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps({"metric": "classes", "n": 3}))
    cfg = load_config(path)
    assert cfg.metric == "classes"
    assert cfg.n == 3


def test_invalid_json_file_reports_config_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(path)


@pytest.mark.parametrize("raw, path_fragment", [
    ({"metrc": "mi"}, "metrc"),
    ({"constellation": {"ring": 2}}, "constellation.ring"),
    ({"sweep": {"trial": 5}}, "sweep.trial"),
    ({"apd": {"temp": 300}}, "apd.temp"),
    ({"channel": {"kind": "fiber", "gamma": 1.3}, "metric": "ber"},
     "channel.gamma"),
    ({"bandwidth": {"grid": [0.5]}}, "bandwidth.grid"),
    ({"power_check": {"count": 10}}, "power_check.count"),
])
def test_unknown_keys_rejected_with_field_path(raw, path_fragment):
    with pytest.raises(ConfigError, match=path_fragment.replace(".", r"\.")):
        ExperimentConfig.from_dict(raw)


@pytest.mark.parametrize("raw, path_fragment", [
    ({"n": "3"}, "n"),
    ({"n": 0}, "n"),
    ({"beta": 1.5}, "beta"),
    ({"beta": True}, "beta"),
    ({"T": 0.0}, "T"),
    ({"M": 0}, "M"),
    ({"seed": -1}, "seed"),
    ({"seed": 2**64}, "seed"),
    ({"metric": "throughput"}, "metric"),
    ({"sweep": {"powers_dbm": []}}, "sweep.powers_dbm"),
    ({"sweep": {"powers_dbm": [-20, "x"]}}, r"sweep.powers_dbm\[1\]"),
    ({"sweep": {"powers_dbm": [-20, -20]}}, "sweep.powers_dbm"),
    ({"sweep": {"powers_dbm": [-10, -20]}}, "sweep.powers_dbm"),
    ({"sweep": {"trials": 0}}, "sweep.trials"),
    ({"sweep": {"prior": "gaussian"}}, "sweep.prior"),
    ({"bandwidth": {"betas": [0.5, 0.0]}}, r"bandwidth.betas\[1\]"),
    ({"bandwidth": {"fractions": [1.0]}}, r"bandwidth.fractions\[0\]"),
    ({"apd": {"k_factor": 1.5}}, "apd.k_factor"),
    ({"channel": {"kind": "copper"}}, "channel.kind"),
    ({"power_check": {"oversampling": 1}}, "power_check.oversampling"),
])
def test_bad_values_rejected_with_field_path(raw, path_fragment):
    with pytest.raises(ConfigError,
                       match=path_fragment.replace(".", r"\.")
                       if "[" not in path_fragment else path_fragment):
        ExperimentConfig.from_dict(raw)


def test_radii_validation_messages():
    base = {"kind": "ring_phase", "rings": 2, "phases": 4}
    with pytest.raises(ConfigError, match="radii.*2 entries"):
        ExperimentConfig.from_dict({"constellation": dict(base, radii=[1.0])})
    with pytest.raises(ConfigError, match="radii.*positive"):
        ExperimentConfig.from_dict(
            {"constellation": dict(base, radii=[-1.0, 2.0])})
    with pytest.raises(ConfigError, match="radii.*increasing"):
        ExperimentConfig.from_dict(
            {"constellation": dict(base, radii=[2.0, 1.0])})


def test_qam16_takes_no_ring_keys():
    with pytest.raises(ConfigError, match="constellation"):
        ExperimentConfig.from_dict(
            {"constellation": {"kind": "qam16", "rings": 4}})
    cfg = ExperimentConfig.from_dict({"constellation": {"kind": "qam16"},
                                      "n": 3, "M": 128, "metric": "ber"})
    assert cfg.constellation.to_dict() == {"kind": "qam16"}
    assert len(cfg.constellation.build()) == 16


def test_fiber_channel_requires_ber_metric():
    raw = {"metric": "mi", "channel": {"kind": "fiber"}}
    with pytest.raises(ConfigError, match="channel.kind"):
        ExperimentConfig.from_dict(raw)
    cfg = ExperimentConfig.from_dict({"metric": "ber",
                                      "channel": {"kind": "fiber"}})
    assert cfg.fiber is not None
    assert cfg.fiber.length_km == 10.0
    assert cfg.fiber.beta2_ps2_km == -21.7
    assert cfg.to_dict()["channel"]["kind"] == "fiber"


def test_ber_metric_requires_power_of_two_M():
    with pytest.raises(ConfigError, match="M"):
        ExperimentConfig.from_dict({"metric": "ber", "M": 48})
    cfg = ExperimentConfig.from_dict({"metric": "ber", "M": 64})
    assert cfg.M == 64


def test_label_seed_follows_seed_unless_given():
    assert ExperimentConfig.from_dict({"seed": 11}).label_seed == 11
    cfg = ExperimentConfig.from_dict({"seed": 11, "label_seed": 3})
    assert cfg.label_seed == 3


def test_constellation_spec_builds_requested_geometry():
    spec = ConstellationSpec.from_dict(
        {"rings": 2, "phases": 4, "radii": [1.0, 3.0]}, "constellation")
    points = spec.build().points
    assert len(points) == 8
    assert np.allclose(sorted(np.abs(points)), [1, 1, 1, 1, 3, 3, 3, 3])

    plain = ConstellationSpec.from_dict({"rings": 2, "phases": 4},
                                        "constellation").build()
    staggered = ConstellationSpec.from_dict(
        {"rings": 2, "phases": 4, "stagger": True}, "constellation").build()
    # staggering rotates the outer ring off the inner-ring phases
    assert not np.allclose(np.sort(np.angle(plain.points)),
                           np.sort(np.angle(staggered.points)))


def test_bandwidth_defaults_are_the_published_grid():
    settings = BandwidthSettings()
    assert len(settings.betas) * len(settings.fractions) == 12
