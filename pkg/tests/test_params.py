import math

import pytest

from rydgate import ConfigError, angular_to_ghz, ghz_to_angular, load_setting, load_setting_file
from rydgate.params import TWO_PI, scale_lifetimes, with_b0

S1_TABLE = {
    "n": 107, "n_prime": 106, "n_dprime": 105, "tau_n_us": 538.0,
    "delta_plus_GHz": -5.534, "delta_minus_GHz": 5.694,
    "delta_p1_half_GHz": -2.961, "delta_p3_half_GHz": -3.161,
    "delta_pp1_half_GHz": 3.256, "delta_pp3_half_GHz": 3.051,
    "b0_GHz": 1.54,
}

S2_TABLE = {
    "n": 141, "n_prime": 138, "n_dprime": 137, "tau_n_us": 969.0,
    "delta_plus_GHz": -2.507, "delta_minus_GHz": 2.562,
    "delta_p1_half_GHz": -1.245, "delta_p3_half_GHz": -1.333,
    "delta_pp1_half_GHz": 1.495, "delta_pp3_half_GHz": 1.405,
    "b0_GHz": 0.68,
}


def test_ghz_conversion_basics():
    assert ghz_to_angular(0.0) == 0.0
    assert ghz_to_angular(1.54) == pytest.approx(9.67610537, rel=1e-8)
    for x in (0.3, 1.54, -5.534, 9.1926):
        assert angular_to_ghz(ghz_to_angular(x)) == pytest.approx(x, rel=1e-15)


@pytest.mark.parametrize("name,table", [("S1", S1_TABLE), ("S2", S2_TABLE)])
def test_builtin_settings_match_table(name, table):
    s = load_setting(name)
    assert s.name == name
    assert (s.n, s.n_prime, s.n_dprime) == (table["n"], table["n_prime"], table["n_dprime"])
    assert s.tau_n == table["tau_n_us"]
    assert s.delta_plus == TWO_PI * table["delta_plus_GHz"]
    assert s.delta_minus == TWO_PI * table["delta_minus_GHz"]
    assert s.b0 == TWO_PI * table["b0_GHz"]
    assert s.omega_q == TWO_PI * 9.1926
    assert s.p_half_suppression == pytest.approx(1.0 / 300.0)
    assert dict(s.rel_blockades) == {
        "n_n": 1.0, "n_nprime": 0.85, "n_ndprime": 0.80,
        "n_nplus": 1.02, "n_nminus": 0.97,
    }


@pytest.mark.parametrize("name,table", [("S1", S1_TABLE), ("S2", S2_TABLE)])
def test_stored_table_round_trips_exactly(name, table):
    s = load_setting(name)
    raw = s.as_table()
    for key, value in table.items():
        assert raw[key] == value  # exact, not approximate


@pytest.mark.parametrize("name", ["S1", "S2"])
def test_unit_round_trip_within_1e12(name):
    s = load_setting(name)
    for key, value in s.as_table().items():
        if key.endswith("_GHz"):
            assert angular_to_ghz(ghz_to_angular(value)) == pytest.approx(value, rel=1e-12)


@pytest.mark.parametrize("name", ["S1", "S2"])
def test_branching_sums_to_one(name):
    s = load_setting(name)
    total = s.decay_branch_g + s.decay_branch_0 + s.decay_branch_1
    assert abs(total - 1.0) <= 1e-15


def test_unknown_setting_rejected():
    with pytest.raises(ConfigError, match="S1"):
        load_setting("S3")


def test_setting_file_b0_override(tmp_path):
    path = tmp_path / "s2_low_b0.cfg"
    path.write_text("# lower blockade variant\nbase = S2\nb0_GHz = 0.5\n")
    s = load_setting_file(path)
    base = load_setting("S2")
    assert s.b0 == TWO_PI * 0.5
    assert s.delta_plus == base.delta_plus
    assert s.tau_n == base.tau_n
    assert s.as_table()["b0_GHz"] == 0.5


def test_setting_file_empty_override_is_identity(tmp_path):
    path = tmp_path / "plain.cfg"
    path.write_text("base = S1\n")
    assert load_setting_file(path) == load_setting("S1")


def test_setting_file_negative_lifetime_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("base = S1\ntau_n_us = -5\n")
    with pytest.raises(ConfigError, match="tau_n_us"):
        load_setting_file(path)


def test_setting_file_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("base = S1\nfrobnicate = 3\n")
    with pytest.raises(ConfigError, match="frobnicate"):
        load_setting_file(path)


def test_setting_file_missing_base_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("b0_GHz = 0.5\n")
    with pytest.raises(ConfigError, match="base"):
        load_setting_file(path)


def test_setting_file_malformed_line_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("base = S1\njust some words\n")
    with pytest.raises(ConfigError, match="key = value"):
        load_setting_file(path)


def test_setting_file_extra_blockade_pair_and_lifetimes(tmp_path):
    path = tmp_path / "custom.cfg"
    path.write_text(
        "base = S1\n"
        "name = S1-custom\n"
        "b_nprime_ndprime = 0.7\n"
        "tau_r_plus_us = 500\n"
    )
    s = load_setting_file(path)
    assert s.name == "S1-custom"
    assert s.rel_blockade_map["nprime_ndprime"] == 0.7
    assert s.lifetime_us("r_plus") == 500.0
    assert s.lifetime_us("r_target") == 538.0


def test_setting_file_bad_blockade_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("base = S1\nb_n_foo = 0.5\n")
    with pytest.raises(ConfigError, match="b_n_foo"):
        load_setting_file(path)


def test_with_b0_updates_value_and_table(s2):
    derived = with_b0(s2, 0.9)
    assert derived.b0 == TWO_PI * 0.9
    assert derived.as_table()["b0_GHz"] == 0.9
    assert derived.delta_plus == s2.delta_plus


def test_scale_lifetimes(s1):
    cold = scale_lifetimes(s1, 100.0)
    assert cold.tau_n == 53800.0
    assert cold.as_table()["tau_n_us"] == 53800.0
    with pytest.raises(ConfigError):
        scale_lifetimes(s1, 0.0)


def test_decay_branch_override_must_sum_to_one(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("base = S1\ndecay_branch_g = 0.9\n")
    with pytest.raises(ConfigError, match="sum to 1"):
        load_setting_file(path)
