import pytest

from magicrow import fixtures
from magicrow.schedule import (
    InputPattern,
    PatternKind,
    PhaseKind,
    ScheduleError,
    TimingConfig,
    VoltageConfig,
    Waveform,
    build_schedule,
    make_pattern,
    parse_pattern,
    render_pwl,
)

DEFAULT_PERIOD = 1e-12 + 1.3e-9 + 1e-12 + 0.5e-9  # 1.802 ns


@pytest.fixture(scope="module")
def ha_schedule(half_adder):
    return build_schedule(half_adder, InputPattern(bits=(1, 0), name="10"))


def flat_top_mid(schedule, phase):
    return phase.t_start + schedule.timing.rise + 0.5 * schedule.timing.pulse_width


class TestTimeline:
    def test_half_adder_cycle_count(self, ha_schedule):
        # 1 load + 7 sequence + 5 reads
        assert len(ha_schedule.phases) == 13
        assert ha_schedule.total_time == pytest.approx(13 * DEFAULT_PERIOD, rel=1e-12)

    def test_phase_kind_sequence(self, ha_schedule):
        kinds = [p.kind for p in ha_schedule.phases]
        assert kinds == [
            PhaseKind.LOAD,
            PhaseKind.INIT,
            PhaseKind.EXEC, PhaseKind.EXEC, PhaseKind.EXEC,
            PhaseKind.REINIT,
            PhaseKind.EXEC, PhaseKind.EXEC,
            *( [PhaseKind.READ] * 5 ),
        ]

    def test_exactly_one_load_n_reads(self, half_adder, ha_schedule):
        kinds = [p.kind for p in ha_schedule.phases]
        assert kinds.count(PhaseKind.LOAD) == 1
        assert kinds.count(PhaseKind.READ) == half_adder.row_size
        n_exec_init = sum(
            1 for k in kinds if k in (PhaseKind.EXEC, PhaseKind.INIT, PhaseKind.REINIT)
        )
        assert n_exec_init == len(half_adder.sequence)

    def test_reinit_count_matches_reuse(self, half_adder, ha_schedule):
        reinits = [p for p in ha_schedule.phases if p.kind == PhaseKind.REINIT]
        assert len(reinits) == half_adder.reuse_cycles == 1
        assert reinits[0].tag == "T4"

    def test_phases_tile_without_overlap(self, ha_schedule):
        phases = ha_schedule.phases
        assert phases[0].t_start == 0.0
        for a, b in zip(phases, phases[1:]):
            assert a.t_end == b.t_start
        assert phases[-1].t_end == ha_schedule.total_time

    def test_trivial_plan_two_cycles(self):
        from magicrow.mapping import make_plan

        plan = make_plan(row_size=1, inputs=(), outputs=(), sequence=[])
        schedule = build_schedule(plan, InputPattern(bits=(), name="empty"))
        assert [p.kind for p in schedule.phases] == [PhaseKind.LOAD, PhaseKind.READ]

    def test_pattern_length_mismatch(self, half_adder):
        with pytest.raises(ScheduleError, match="bits"):
            build_schedule(half_adder, InputPattern(bits=(1,), name="1"))


class TestDriveTopology:
    def test_t3_exec_window(self, ha_schedule):
        # T3 = nor2 into device 2 reading devices 3 and 4
        phase = next(p for p in ha_schedule.phases if p.tag == "T3")
        assert phase.kind == PhaseKind.EXEC
        t = flat_top_mid(ha_schedule, phase)
        volts = ha_schedule.volts
        assert ha_schedule.column_waveforms[3].value_at(t) == volts.v_op
        assert ha_schedule.column_waveforms[4].value_at(t) == volts.v_op
        assert ha_schedule.column_waveforms[2].value_at(t) == 0.0
        for d in (2, 3, 4):
            assert ha_schedule.column_switch_waveforms[d].value_at(t) == volts.v_switch_on
        for d in (0, 1):
            assert ha_schedule.column_switch_waveforms[d].value_at(t) == volts.v_switch_off
        assert ha_schedule.row_ground_switch_waveform.value_at(t) == volts.v_switch_off

    def test_row_switch_per_phase_kind(self, ha_schedule):
        volts = ha_schedule.volts
        for phase in ha_schedule.phases:
            level = ha_schedule.row_ground_switch_waveform.value_at(
                flat_top_mid(ha_schedule, phase)
            )
            if phase.kind == PhaseKind.EXEC:
                assert level == volts.v_switch_off
            else:
                assert level == volts.v_switch_on

    def test_load_drives_only_ones(self, half_adder):
        schedule = build_schedule(half_adder, InputPattern(bits=(1, 0), name="10"))
        load = schedule.phases[0]
        t = flat_top_mid(schedule, load)
        assert schedule.column_waveforms[0].value_at(t) == schedule.volts.v_input
        assert schedule.column_waveforms[1].value_at(t) == 0.0
        assert schedule.column_switch_waveforms[0].value_at(t) == schedule.volts.v_switch_on
        assert schedule.column_switch_waveforms[1].value_at(t) == schedule.volts.v_switch_off
        assert load.touched_devices == (0,)

    def test_read_phases_sequential(self, ha_schedule):
        reads = [p for p in ha_schedule.phases if p.kind == PhaseKind.READ]
        assert [p.touched_devices for p in reads] == [(d,) for d in range(5)]
        for p in reads:
            t = flat_top_mid(ha_schedule, p)
            d = p.touched_devices[0]
            assert ha_schedule.column_waveforms[d].value_at(t) == ha_schedule.volts.v_read

    def test_undriven_column_emits_zero(self, ha_schedule):
        # device 0 participates in load and some execs; during T2 it is idle
        phase = next(p for p in ha_schedule.phases if p.tag == "T2")
        t = flat_top_mid(ha_schedule, phase)
        assert ha_schedule.column_waveforms[0].value_at(t) == 0.0
        assert ha_schedule.column_switch_waveforms[0].value_at(t) == 0.0


class TestPatterns:
    def test_all_ones(self):
        assert make_pattern(PatternKind.ALL_ONES, 3).bits == (1, 1, 1)

    def test_all_zeros_empty(self):
        assert make_pattern(PatternKind.ALL_ZEROS, 0).bits == ()

    def test_alternating_starts_with_one(self):
        assert make_pattern(PatternKind.ALTERNATING, 4).bits == (1, 0, 1, 0)

    def test_parse_pattern_forms(self):
        assert parse_pattern("I2", 3).bits == (1, 1, 1)
        assert parse_pattern("i3", 2).bits == (1, 0)
        assert parse_pattern("10", 2).bits == (1, 0)
        with pytest.raises(ScheduleError):
            parse_pattern("10", 3)
        with pytest.raises(ScheduleError):
            parse_pattern("2x", 2)

    def test_bad_bits_rejected(self):
        with pytest.raises(ScheduleError):
            InputPattern(bits=(2,), name="bad")


class TestPwlRendering:
    def test_constant_zero(self):
        wave = Waveform(points=((0.0, 0.0), (2.3426e-08, 0.0)))
        assert render_pwl(wave) == "0.0 0.0\n2.3426e-08 0.0\n"

    def test_single_pulse_points(self):
        from magicrow.schedule import _WaveBuilder

        b = _WaveBuilder(0.0)
        b.add_pulse(0.0, TimingConfig(), 2.0)
        wave = Waveform(points=tuple(b.points))
        assert wave.points == (
            (0.0, 0.0),
            (1e-12, 2.0),
            (1.301e-09, 2.0),
            (1.302e-09, 0.0),
        )

    def test_back_to_back_pulses_eight_points(self):
        from magicrow.schedule import _WaveBuilder

        timing = TimingConfig()
        b = _WaveBuilder(0.0)
        b.add_pulse(0.0, timing, 2.0)
        b.add_pulse(timing.cycle_period, timing, 2.0)
        times = [t for t, _ in b.points]
        assert len(b.points) == 8
        assert all(t2 > t1 for t1, t2 in zip(times, times[1:]))

    def test_zero_gap_join_has_no_duplicate_times(self, half_adder):
        timing = TimingConfig(gap=0.0)
        schedule = build_schedule(half_adder, InputPattern(bits=(1, 1), name="11"), timing)
        for wave in (
            *schedule.column_waveforms,
            *schedule.column_switch_waveforms,
            schedule.row_ground_switch_waveform,
        ):
            wave.validate()  # strictly increasing or it raises

    def test_waveforms_end_at_total_time(self, ha_schedule):
        for wave in (
            *ha_schedule.column_waveforms,
            *ha_schedule.column_switch_waveforms,
            ha_schedule.row_ground_switch_waveform,
        ):
            assert wave.points[0][0] == 0.0
            assert wave.points[-1][0] == ha_schedule.total_time

    def test_byte_identical_rebuild(self, half_adder):
        a = build_schedule(half_adder, InputPattern(bits=(1, 0), name="10"))
        b = build_schedule(half_adder, InputPattern(bits=(1, 0), name="10"))
        for wa, wb in zip(a.column_waveforms, b.column_waveforms):
            assert render_pwl(wa) == render_pwl(wb)
        assert render_pwl(a.row_ground_switch_waveform) == render_pwl(
            b.row_ground_switch_waveform
        )


class TestConfigValidation:
    def test_voltage_ordering_enforced(self):
        with pytest.raises(ScheduleError):
            VoltageConfig(v_read=1.5).validate()

    def test_timing_positive(self):
        with pytest.raises(ScheduleError):
            TimingConfig(pulse_width=0.0).validate()

    def test_negative_gap_rejected(self):
        with pytest.raises(ScheduleError):
            TimingConfig(gap=-1e-12).validate()
