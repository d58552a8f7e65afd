import time
from pathlib import Path

import pytest

from magicrow import fixtures
from magicrow.device import VariationSpec
from magicrow.mapping import make_plan
from magicrow.netlist import (
    EmitConfig,
    EmitError,
    emit_crossbar_subckt,
    emit_energy_ocn,
    emit_sim_params,
    emit_sources,
    emit_switches,
    emit_tree,
    lint_tree,
    render_tree,
    variation_assignments,
)
from magicrow.schedule import InputPattern, build_schedule

CFG = EmitConfig()


@pytest.fixture(scope="module")
def ha_schedule(half_adder):
    return build_schedule(half_adder, InputPattern(bits=(0, 1), name="01"))


class TestCrossbar:
    def test_half_adder_shape(self, params):
        text = emit_crossbar_subckt(5, params, CFG)
        assert "subckt crossbar_sub r0 c0 c1 c2 c3 c4" in text
        for i in range(5):
            assert f"I{i} (r0 c{i} n{i}) VTEAM_model" in text
        assert "ends crossbar_sub" in text
        assert "crossbar0 (sub0_r0 sub0_c0 sub0_c1 sub0_c2 sub0_c3 sub0_c4) crossbar_sub" in text

    def test_single_column(self, params):
        text = emit_crossbar_subckt(1, params, CFG)
        assert "I0 (r0 c0 n0)" in text
        assert "I1 " not in text

    def test_model_occurrence_count(self, params):
        for n in (1, 5, 17):
            assert emit_crossbar_subckt(n, params, CFG).count("VTEAM_model") == n

    def test_parameters_explicit(self, params):
        text = emit_crossbar_subckt(2, params, CFG)
        assert f"v_set={params.v_set}" in text
        assert f"r_off={params.r_off}" in text

    def test_varied_fields_symbolic(self, params):
        text = emit_crossbar_subckt(2, params, CFG, varied_fields=("r_on",))
        assert "r_on=var_r_on_0" in text
        assert "r_on=var_r_on_1" in text
        assert f"v_set={params.v_set}" in text

    def test_rejects_zero_columns(self, params):
        with pytest.raises(EmitError):
            emit_crossbar_subckt(0, params, CFG)


class TestSwitches:
    def test_six_columns_seven_relays(self):
        text = emit_switches(6, CFG)
        assert text.count(" relay ") == 7

    def test_single_column_two_relays(self):
        assert emit_switches(1, CFG).count(" relay ") == 2

    def test_relay_line_shape(self):
        text = emit_switches(3, CFG)
        assert "W0 (0 sub0_r0 v_r0 0) relay ropen=1T rclosed=1.0" in text
        assert "W1 (v_c0 sub0_c0 v_s0 0) relay ropen=1T rclosed=1.0" in text
        for line in text.splitlines():
            if line.startswith("W"):
                assert line.endswith("relay ropen=1T rclosed=1.0")


class TestSources:
    def test_census_six_columns(self):
        text = emit_sources(6, "./pwl", CFG)
        assert text.count(" vsource ") == 13  # 1 row + 6 drives + 6 switch controls

    def test_census_single_column(self):
        assert emit_sources(1, "./pwl", CFG).count(" vsource ") == 3

    def test_row_control_path_verbatim(self):
        text = emit_sources(2, "./pwl", CFG)
        assert 'V0 (v_r0 0) vsource type=pwl file = "./pwl/r0.txt"' in text


class TestSimParams:
    def test_input_encoding(self, half_adder):
        schedule = build_schedule(half_adder, InputPattern(bits=(0, 1), name="01"))
        text = emit_sim_params(schedule, InputPattern(bits=(0, 1), name="01"), None, CFG)
        assert "in0=0 in1=2" in text

    def test_stop_equals_total_time(self, ha_schedule):
        text = emit_sim_params(ha_schedule, InputPattern(bits=(0, 1), name="01"), None, CFG)
        assert f"stop={ha_schedule.total_time}" in text
        assert "step=1e-12 maxstep=1e-12" in text

    def test_save_directives(self, ha_schedule):
        text = emit_sim_params(ha_schedule, InputPattern(bits=(0, 1), name="01"), None, CFG)
        saves = [l for l in text.splitlines() if l.startswith("save ")]
        assert saves == [f"save crossbar0.I{i}:n" for i in range(5)]

    def test_variation_parameters_included(self, ha_schedule, params):
        spec = VariationSpec(sigma={"r_on": 0.05}, seed=11)
        assigns, varied = variation_assignments(params, spec, 5)
        assert varied == ("r_on",)
        assert set(assigns) == {f"var_r_on_{i}" for i in range(5)}
        text = emit_sim_params(ha_schedule, InputPattern(bits=(0, 1), name="01"), assigns, CFG)
        assert "var_r_on_0=" in text

    def test_model_include(self, ha_schedule):
        text = emit_sim_params(ha_schedule, InputPattern(bits=(0, 1), name="01"), None, CFG)
        assert 'ahdl_include "./models/vteam.va"' in text


class TestEnergyOcn:
    def test_structure_counts(self, ha_schedule):
        text = emit_energy_ocn(2, ha_schedule, CFG)
        assert text.count("integ(") == 2
        assert "energy_total = energy_I0 + energy_I1" in text

    def test_integral_bounds(self, ha_schedule):
        text = emit_energy_ocn(2, ha_schedule, CFG)
        assert f"0.0 {ha_schedule.total_time})" in text

    def test_scales_to_512_quickly(self, half_adder, params):
        plan = fixtures.pad_plan(half_adder, 512)
        schedule = build_schedule(plan, InputPattern(bits=(1, 1), name="11"))
        t0 = time.time()
        text = emit_energy_ocn(512, schedule, CFG)
        assert time.time() - t0 < 1.0
        assert text.count("integ(") == 512


class TestTree:
    def test_half_adder_manifest(self, half_adder, params, ha_schedule, tmp_path):
        cfg = EmitConfig(output_dir=str(tmp_path / "tree"))
        manifest = emit_tree(
            half_adder, InputPattern(bits=(0, 1), name="01"), ha_schedule, params, cfg
        )
        assert len(manifest.netlist_files) == 6
        assert len(manifest.pwl_files) == 11  # 1 row + 5 columns + 5 switches
        for path in manifest.all_files:
            assert Path(path).is_file()

    def test_re_emit_byte_identical(self, half_adder, params, ha_schedule, tmp_path):
        pattern = InputPattern(bits=(0, 1), name="01")
        cfg = EmitConfig(output_dir=str(tmp_path / "a"))
        first = emit_tree(half_adder, pattern, ha_schedule, params, cfg)
        snapshot = {p: Path(p).read_bytes() for p in first.all_files}
        second = emit_tree(half_adder, pattern, ha_schedule, params, cfg)
        assert {p: Path(p).read_bytes() for p in second.all_files} == snapshot

    def test_lint_clean(self, half_adder, params, ha_schedule):
        texts = render_tree(
            half_adder, InputPattern(bits=(0, 1), name="01"), ha_schedule, params, CFG
        )
        assert lint_tree(texts) == []

    def test_lint_catches_dangling_net(self, half_adder, params, ha_schedule):
        texts = render_tree(
            half_adder, InputPattern(bits=(0, 1), name="01"), ha_schedule, params, CFG
        )
        texts["sources.scs"] = texts["sources.scs"].replace(
            'V1 (v_c0 0) vsource', 'V1 (v_cX 0) vsource'
        )
        problems = lint_tree(texts)
        assert any("v_c0" in p for p in problems)

    def test_column_count_everywhere(self, c17, params):
        schedule = build_schedule(c17, InputPattern(bits=(1,) * 5, name="I2"))
        texts = render_tree(c17, InputPattern(bits=(1,) * 5, name="I2"), schedule, params, CFG)
        n = c17.row_size
        assert texts["crossbar.scs"].count("VTEAM_model") == n
        assert texts["switches.scs"].count(" relay ") == n + 1
        assert texts["sources.scs"].count(" vsource ") == 2 * n + 1
        assert texts["simparams.scs"].count("save ") == n
        assert texts["energy.ocn"].count("integ(") == n
        assert len([k for k in texts if k.startswith("pwl/")]) == 2 * n + 1

    def test_512_tree_under_five_seconds(self, half_adder, params, tmp_path):
        plan = fixtures.pad_plan(half_adder, 512)
        pattern = InputPattern(bits=(1, 0), name="10")
        schedule = build_schedule(plan, pattern)
        cfg = EmitConfig(output_dir=str(tmp_path / "big"))
        t0 = time.time()
        manifest = emit_tree(plan, pattern, schedule, params, cfg)
        assert time.time() - t0 < 5.0
        assert len(manifest.pwl_files) == 2 * 512 + 1

    def test_main_includes_all(self, half_adder, params, ha_schedule):
        texts = render_tree(
            half_adder, InputPattern(bits=(0, 1), name="01"), ha_schedule, params, CFG
        )
        main = texts["main.scs"]
        for name in ("crossbar.scs", "switches.scs", "sources.scs", "simparams.scs"):
            assert f'include "{name}"' in main
