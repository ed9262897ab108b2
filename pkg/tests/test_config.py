"""Config parsing, validation aggregation, and manifest round trips."""
import math

import pytest

from resbeam.config import (
    ConfigError,
    apply_overrides,
    load_config,
    manifest_text,
    read_bits_file,
    resolve,
)


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestDefaults:
    def test_empty_config_is_the_reference_link(self, defaults):
        cfg = defaults
        assert cfg.geometry.f == 0.03
        assert cfg.geometry.l == 0.030225
        assert cfg.geometry.d == 3.0
        assert cfg.loss.r_m2 == 0.9
        assert cfg.medium.sigma == 15.6e-23
        assert cfg.medium.i_s == 1.1976e7
        assert cfg.pump.combined == 0.439
        assert cfg.medium.eta_c == 0.439
        assert cfg.cavity.n_c == 6242
        assert cfg.scenario.duration == 1e-3
        assert cfg.scenario.pump[0].p_in == 60.0
        assert cfg.scenario.records[0].decimation == 1024
        assert cfg.modulation is None
        assert cfg.scenario.intrusions == ()
        assert cfg.demod.n_c == 6242
        assert cfg.demod.adc_bits == 10
        assert cfg.demod.v_max == 2.5
        assert cfg.out_dir == "out"
        assert cfg.seed == 12345

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "absent.cfg")


class TestParsing:
    def test_sections_and_inline_comments(self, tmp_path):
        path = write(tmp_path, """
[loss]
r_m2 = 0.95  # output mirror
[scenario]
p_in = 40 ; watts
""")
        cfg = load_config(path)
        assert cfg.loss.r_m2 == 0.95
        assert cfg.scenario.pump[0].p_in == 40.0

    def test_bool_words(self, tmp_path):
        for word in ("true", "Yes", "on", "1"):
            cfg = load_config(write(tmp_path, f"""
[modulation]
enabled = {word}
n_bits = 4
"""))
            assert cfg.modulation is not None
        cfg = load_config(write(tmp_path, "[modulation]\nenabled = off\n"))
        assert cfg.modulation is None

    def test_unparsable_ini_reported(self, tmp_path):
        path = write(tmp_path, "key_without_section = 1\n")
        with pytest.raises(ConfigError, match="parse error"):
            load_config(path)

    def test_bad_value_reported_with_path(self, tmp_path):
        path = write(tmp_path, "[gain]\nn_slices = many\n")
        with pytest.raises(ConfigError, match="gain.n_slices"):
            load_config(path)

    def test_unknown_key_and_section(self, tmp_path):
        path = write(tmp_path, "[loss]\nshinyness = 1\n[warp]\nspeed = 9\n")
        with pytest.raises(ConfigError) as exc:
            load_config(path)
        text = str(exc.value)
        assert "loss.shinyness: unknown key" in text
        assert "warp: unknown section" in text


class TestValidation:
    def test_all_violations_collected(self, tmp_path):
        path = write(tmp_path, """
[loss]
r_m2 = 1.2
[gain]
beta = 2.0
n_slices = 0
""")
        with pytest.raises(ConfigError) as exc:
            load_config(path)
        paths = [v.split(":")[0] for v in exc.value.violations]
        assert paths == ["loss.r_m2", "gain.beta", "gain.n_slices"]

    def test_unstable_geometry_rejected(self, tmp_path):
        path = write(tmp_path, "[geometry]\nd = 4.0\n")
        with pytest.raises(ConfigError, match="unstable resonator"):
            load_config(path)

    def test_gain_plane_out_of_arm_rejected(self, tmp_path):
        path = write(tmp_path, "[geometry]\nz_g = 0.5\n")
        with pytest.raises(ConfigError, match="geometry"):
            load_config(path)

    def test_filter_edge_ordering(self, tmp_path):
        path = write(tmp_path, "[demod]\nlpf1_stopband = 0.5e9\n")
        with pytest.raises(ConfigError, match="lpf1_stopband"):
            load_config(path)

    def test_unknown_record_channel(self, tmp_path):
        path = write(tmp_path,
                     "[scenario]\nrecord_channels = p_out,voltage\n")
        with pytest.raises(ConfigError, match="record_channels"):
            load_config(path)


class TestPumpResolution:
    def test_factors_without_combined_rule(self):
        x = repr(0.439 ** (1.0 / 6.0))
        raw = {"pump": {k: x for k in
                        ("eta_p", "eta_t", "eta_a", "eta_q", "eta_s",
                         "eta_b")}}
        cfg = resolve(raw)
        assert math.isclose(cfg.pump.combined, 0.439, rel_tol=1e-9)
        # the resolved efficiency propagates into the medium
        assert cfg.medium.eta_c == cfg.pump.combined

    def test_conflicting_combined_rejected(self):
        raw = {"pump": {"eta_c": "0.5",
                        **{k: "0.9" for k in ("eta_p", "eta_t", "eta_a",
                                              "eta_q", "eta_s", "eta_b")}}}
        with pytest.raises(ConfigError, match="pump"):
            resolve(raw)


class TestScenarioAssembly:
    def test_intrusion_reopen_time(self, tmp_path):
        path = write(tmp_path, """
[intrusion]
enabled = yes
t_start = 1e-5
ramp_duration = 2e-6
dwell = 3e-5
""")
        cfg = load_config(path)
        ev = cfg.scenario.intrusions[0]
        assert ev.t_start == 1e-5
        assert ev.ramp_duration == 2e-6
        assert math.isclose(ev.t_reopen, 1e-5 + 2e-6 + 3e-5, rel_tol=1e-12)

    def test_modulation_bits_from_seed(self, tmp_path):
        path = write(tmp_path, """
[modulation]
enabled = yes
n_bits = 32
bits_seed = 77
""")
        cfg = load_config(path)
        assert len(cfg.modulation.bits) == 32
        assert cfg.scenario.modulations[0].bits == cfg.modulation.bits

    def test_modulation_bits_from_file(self, tmp_path):
        bits_path = write(tmp_path, "1010\n01 1\n", name="bits.txt")
        path = write(tmp_path, f"""
[modulation]
enabled = yes
bits_file = {bits_path}
""")
        cfg = load_config(path)
        assert cfg.modulation.bits == (1, 0, 1, 0, 0, 1, 1)

    def test_bits_file_rejects_other_characters(self, tmp_path):
        bits_path = write(tmp_path, "10x1", name="bits.txt")
        with pytest.raises(ConfigError, match="invalid character"):
            read_bits_file(bits_path)

    def test_record_window_defaults_to_whole_run(self, defaults):
        rw = defaults.scenario.records[0]
        assert rw.t_start == 0.0
        assert rw.t_end == defaults.scenario.duration
        assert rw.channels == ("p_out", "p_circ", "gain_in", "gain_out",
                               "n2_mean")


class TestOverrides:
    def test_override_applies(self):
        cfg = load_config(None, overrides=["loss.r_m2=0.95"])
        assert cfg.loss.r_m2 == 0.95

    def test_override_creates_section(self):
        cfg = load_config(None, overrides=["cavity.n_l=5", "cavity.n_r=9"])
        assert cfg.cavity.n_l == 5
        assert cfg.cavity.n_c == 2 * (5 + 9 + 1)

    def test_malformed_overrides_rejected(self):
        with pytest.raises(ConfigError, match="key=value"):
            apply_overrides({}, ["loss.r_m2"])
        with pytest.raises(ConfigError, match="lacks a section"):
            apply_overrides({}, ["r_m2=0.5"])


class TestManifest:
    def test_manifest_reloads_to_itself(self, tmp_path, defaults):
        text = manifest_text(defaults)
        path = write(tmp_path, text, name="run.manifest")
        again = manifest_text(load_config(path))
        assert again == text

    def test_manifest_survives_overridden_values(self, tmp_path):
        cfg = load_config(None, overrides=["scenario.p_in=47.5",
                                           "gain.n_slices=4"])
        path = write(tmp_path, manifest_text(cfg), name="run.manifest")
        back = load_config(path)
        assert back.scenario.pump[0].p_in == 47.5
        assert back.medium.n_slices == 4

    def test_meta_section_is_informational(self, tmp_path, defaults):
        text = manifest_text(defaults, extra_meta={"note": "hello"})
        assert "[meta]" in text
        assert "note = hello" in text
        path = write(tmp_path, text, name="run.manifest")
        load_config(path)

    def test_values_capture_resolved_state(self, defaults):
        assert defaults.values["loss"]["r_m2"] == 0.9
        assert defaults.values["output"]["seed"] == 12345
