"""Command-line front end.

Subcommands:
    gen           parse + validate a mapping, emit the testbench tree
    sim           run the built-in transient engine, verify, report energy
    energy-table  consolidated per-circuit energy table over I1/I2/I3
    calibrate     solve a device parameter set and write it as a preset file
    fixtures      write the committed example mappings

Exit codes: 0 ok, 2 mapping parse/grammar/schema, 3 plan validation,
4 configuration, 5 simulation, 6 verification mismatch.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__, energy, fixtures, netlist, oracle, plots, sim
from .config import ArrayConfig, ConfigError, RunConfig, load_run_config
from .device import DeviceError, calibrate, params_for_row, save_params
from .mapping import MappingError, fatal_violations, parse_plan, validate_plan
from .schedule import ScheduleError, build_schedule, parse_pattern
from .sim import SimulationError

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATE = 3
EXIT_CONFIG = 4
EXIT_SIM = 5
EXIT_VERIFY = 6


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="run-config file (sections: array, voltage, simulation, variation)")
    g = parser.add_argument_group("array parameters")
    g.add_argument("--row-size", type=int, help="pad the plan onto this many columns")
    g.add_argument("--params", help="device parameter preset name or file path")
    g = parser.add_argument_group("voltage parameters")
    g.add_argument("--v-input", type=float, help="input-load drive level (V)")
    g.add_argument("--v-init", type=float, help="initialization drive level (V)")
    g.add_argument("--v-op", type=float, help="gate-execution drive level (V)")
    g.add_argument("--v-read", type=float, help="read drive level (V)")
    g.add_argument("--v-switch-on", type=float, help="relay-closing control level (V)")
    g.add_argument("--v-switch-off", type=float, help="relay-open control level (V)")
    g.add_argument("--pulse-width", type=float, help="pulse top width (s)")
    g.add_argument("--rise", type=float, help="pulse rise time (s)")
    g.add_argument("--fall", type=float, help="pulse fall time (s)")
    g.add_argument("--gap", type=float, help="idle time between cycles (s)")
    g = parser.add_argument_group("simulation parameters")
    g.add_argument("--dt", type=float, help="integration step (s)")
    g.add_argument("--trace-decimation", type=int, help="keep every k-th trace sample")
    g.add_argument("--switch-control-threshold", type=float, help="relay closes at/above this control voltage (V)")
    g.add_argument("--engine", choices=["auto", "jit", "python"], help="inner-loop implementation")
    g = parser.add_argument_group("process variation")
    g.add_argument("--seed", type=int, help="variation RNG seed")
    g.add_argument(
        "--sigma",
        action="append",
        metavar="FIELD=REL_SIGMA",
        help="relative sigma for one device parameter (repeatable)",
    )


def _config_from_args(args) -> RunConfig:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    array = cfg.array
    if args.row_size is not None:
        array = dataclasses.replace(array, row_size=args.row_size)
    if args.params is not None:
        array = dataclasses.replace(array, params=args.params)
    timing = cfg.timing
    for key in ("pulse_width", "rise", "fall", "gap"):
        val = getattr(args, key)
        if val is not None:
            timing = dataclasses.replace(timing, **{key: val})
    volts = cfg.volts
    for key in ("v_input", "v_init", "v_op", "v_read", "v_switch_on", "v_switch_off"):
        val = getattr(args, key)
        if val is not None:
            volts = dataclasses.replace(volts, **{key: val})
    simopts = cfg.sim
    for key in ("dt", "trace_decimation", "switch_control_threshold", "engine"):
        val = getattr(args, key)
        if val is not None:
            simopts = dataclasses.replace(simopts, **{key: val})
    variation = cfg.variation
    if args.sigma:
        sigma = dict(variation.sigma) if variation else {}
        for item in args.sigma:
            name, _, value = item.partition("=")
            if not value:
                raise ConfigError(f"--sigma wants FIELD=REL_SIGMA, got {item!r}")
            sigma[name.strip()] = float(value)
        from .device import VariationSpec

        variation = VariationSpec(sigma=sigma, seed=variation.seed if variation else 0)
    if args.seed is not None:
        from .device import VariationSpec

        sigma = dict(variation.sigma) if variation else {}
        variation = VariationSpec(sigma=sigma, seed=args.seed)
    if variation is not None:
        variation.validate()
    return RunConfig(
        array=array,
        timing=timing,
        volts=volts,
        sim=simopts,
        variation=variation,
        analysis=cfg.analysis,
    )


def _load_padded_plan(path: str, cfg: RunConfig):
    text = Path(path).read_text(encoding="utf-8")
    plan = parse_plan(text)
    violations = validate_plan(plan)
    for v in violations:
        if v.is_warning:
            print(f"warning: {v}", file=sys.stderr)
    fatal = fatal_violations(violations)
    if fatal:
        for v in fatal:
            _err(str(v))
        return None
    if cfg.array.row_size is not None:
        plan = fixtures.pad_plan(plan, cfg.array.row_size)
    return plan


def _params_id(cfg: RunConfig) -> str:
    if cfg.variation is not None and cfg.variation.is_active:
        return f"{cfg.array.params}+variation(seed={cfg.variation.seed})"
    return cfg.array.params


def cmd_gen(args) -> int:
    try:
        cfg = _config_from_args(args)
    except (ConfigError, ScheduleError, ValueError) as e:
        _err(str(e))
        return EXIT_CONFIG
    try:
        plan = _load_padded_plan(args.mapping, cfg)
    except MappingError as e:
        _err(str(e))
        return EXIT_PARSE
    if plan is None:
        return EXIT_VALIDATE
    try:
        params = cfg.device_params()
        pattern = parse_pattern(args.pattern, len(plan.inputs))
        schedule = build_schedule(plan, pattern, cfg.timing, cfg.volts)
        emit_cfg = netlist.EmitConfig(
            output_dir=args.out, model_include_path=args.model_include
        )
        manifest = netlist.emit_tree(
            plan, pattern, schedule, params, emit_cfg, variation=cfg.variation
        )
    except (ConfigError, ScheduleError, DeviceError) as e:
        _err(str(e))
        return EXIT_CONFIG
    except netlist.EmitError as e:
        _err(str(e))
        return EXIT_CONFIG
    for path in manifest.all_files:
        print(path)
    print(f"{len(manifest.netlist_files)} netlist/script files, "
          f"{len(manifest.pwl_files)} PWL files")
    return EXIT_OK


def _run_one_sim(mapping_path: str, cfg: RunConfig, pattern_text: str, out_dir: str) -> dict:
    """Full pipeline for one (plan, pattern): files under out_dir, summary back."""
    plan = _load_padded_plan(mapping_path, cfg)
    if plan is None:
        raise MappingError("plan failed validation")
    pattern = parse_pattern(pattern_text, len(plan.inputs))
    schedule = build_schedule(plan, pattern, cfg.timing, cfg.volts)
    nominal = cfg.device_params()
    per_device = params_for_row(nominal, cfg.variation, plan.row_size)
    result = sim.run_transient(plan, schedule, per_device, cfg.sim)
    report = energy.integrate_energy(
        result,
        metadata={
            "plan": Path(mapping_path).stem,
            "pattern": pattern.name,
            "params": _params_id(cfg),
            "total_time": schedule.total_time,
        },
    )
    verification = oracle.verify_run(plan, pattern, result.trace)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sim.export_trace_csv(result.trace, out / "trace.csv")
    sim.export_summary_json(
        result.trace, out / "summary.json", extra={"pattern": pattern.name}
    )
    energy.export_report_csv(report, out / "energy.csv")
    energy.export_report_json(report, out / "energy.json")
    energy.export_cumulative_csv(report, out / "energy_cumulative.csv")
    plots.save_cumulative_energy_figure(report, out / "energy_cumulative.png")
    plots.save_phase_breakdown_figure(report, out / "energy_phases.png")
    with open(out / "verification.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "passed": verification.passed,
                "outputs": [
                    {
                        "name": c.name,
                        "device": c.device,
                        "expected": c.expected,
                        "final_state": c.simulated,
                        "read_back": c.read_back,
                        "match": c.match,
                    }
                    for c in verification.outputs
                ],
            },
            fh,
            indent=1,
        )
        fh.write("\n")
    return {
        "pattern": pattern.name,
        "passed": verification.passed,
        "lines": verification.summary_lines(),
        "grand_total_J": report.grand_total,
        "out_dir": str(out),
    }


def _sweep_worker(payload):
    mapping_path, cfg, pattern_text, out_dir = payload
    return _run_one_sim(mapping_path, cfg, pattern_text, out_dir)


def cmd_sim(args) -> int:
    try:
        cfg = _config_from_args(args)
    except (ConfigError, ScheduleError, ValueError) as e:
        _err(str(e))
        return EXIT_CONFIG
    patterns = (
        [p.strip() for p in args.sweep_patterns.split(",") if p.strip()]
        if args.sweep_patterns
        else [args.pattern]
    )
    if not patterns:
        _err("no patterns given")
        return EXIT_CONFIG
    jobs = []
    for p in patterns:
        sub = Path(args.out) / p if len(patterns) > 1 else Path(args.out)
        jobs.append((args.mapping, cfg, p, str(sub)))

    results = []
    try:
        if args.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(_sweep_worker, jobs))
        else:
            for payload in jobs:
                results.append(_sweep_worker(payload))
    except MappingError as e:
        _err(str(e))
        return EXIT_PARSE
    except (ConfigError, ScheduleError, DeviceError) as e:
        _err(str(e))
        return EXIT_CONFIG
    except SimulationError as e:
        _err(str(e))
        return EXIT_SIM

    all_passed = True
    for r in results:
        print(f"pattern {r['pattern']}: files in {r['out_dir']}")
        for line in r["lines"]:
            print(f"  {line}")
        print(f"  total energy: {r['grand_total_J']:.6e} J")
        all_passed = all_passed and r["passed"]
    return EXIT_OK if all_passed else EXIT_VERIFY


TABLE_PATTERNS = ("I1", "I2", "I3")


def cmd_energy_table(args) -> int:
    try:
        cfg = _config_from_args(args)
    except (ConfigError, ScheduleError, ValueError) as e:
        _err(str(e))
        return EXIT_CONFIG
    rows = []
    failures = 0
    for mapping_path in args.mappings:
        name = Path(mapping_path).stem
        try:
            plan = _load_padded_plan(mapping_path, cfg)
            if plan is None:
                raise MappingError("plan failed validation")
            row = {
                "circuit": name,
                "pi_po": f"{len(plan.inputs)}/{len(plan.outputs)}",
                "cycles": len(plan.sequence),
                "not": plan.not_count,
                "nor": plan.nor_count,
                "reinit": plan.reinit_count,
            }
            nominal = cfg.device_params()
            per_device = params_for_row(nominal, cfg.variation, plan.row_size)
            for pat_text in TABLE_PATTERNS:
                pattern = parse_pattern(pat_text, len(plan.inputs))
                schedule = build_schedule(plan, pattern, cfg.timing, cfg.volts)
                result = sim.run_transient(plan, schedule, per_device, cfg.sim)
                report = energy.integrate_energy(result)
                from .schedule import PhaseKind

                # init column = first-cycle init + every reuse re-init
                row[f"{pat_text}_exec_J"] = report.phase_total(PhaseKind.EXEC)
                row[f"{pat_text}_init_J"] = report.phase_total(
                    PhaseKind.INIT
                ) + report.phase_total(PhaseKind.REINIT)
                row[f"{pat_text}_total_J"] = report.grand_total
            rows.append(row)
        except (MappingError, ConfigError, ScheduleError, DeviceError, SimulationError, OSError) as e:
            failures += 1
            _err(f"{name}: {e}")

    header = ["circuit", "pi_po", "cycles", "not", "nor", "reinit"]
    for pat in TABLE_PATTERNS:
        header += [f"{pat}_exec_J", f"{pat}_init_J", f"{pat}_total_J"]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in header})
    plots.save_energy_table_figure(rows, out.with_suffix(".png"))
    print(f"wrote {out} ({len(rows)} circuits, {failures} failures)")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    try:
        params = calibrate(
            set_voltage=args.set_voltage,
            reset_voltage=args.reset_voltage,
            pulse_width=args.pulse_width,
        )
        save_params(params, args.out)
    except DeviceError as e:
        _err(str(e))
        return EXIT_CONFIG
    print(f"wrote {args.out}")
    for line in Path(args.out).read_text(encoding="utf-8").splitlines():
        print(f"  {line}")
    return EXIT_OK


def cmd_fixtures(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, producer in fixtures.FIXTURE_FILES.items():
        target = out / name
        target.write_text(producer(), encoding="utf-8")
        print(target)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magicrow",
        description="Single-row MAGIC crossbar toolkit: netlist generation, "
        "transient simulation, verification and energy reports.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="emit the Spectre-compatible testbench tree")
    p.add_argument("mapping", help="mapping JSON file")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--pattern", default="I1", help="input pattern: I1|I2|I3|bits")
    p.add_argument(
        "--model-include",
        default="./models/vteam.va",
        help="model path written into the netlist",
    )
    _add_config_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sim", help="run the built-in transient simulation")
    p.add_argument("mapping", help="mapping JSON file")
    p.add_argument("--out", default="simout", help="output directory")
    p.add_argument("--pattern", default="I1", help="input pattern: I1|I2|I3|bits")
    p.add_argument(
        "--sweep-patterns",
        help="comma-separated pattern list; each gets its own output subdirectory",
    )
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sim)

    p = sub.add_parser("energy-table", help="consolidated energy table over I1/I2/I3")
    p.add_argument("mappings", nargs="*", help="mapping JSON files")
    p.add_argument("--out", default="energy_table.csv", help="output CSV path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_energy_table)

    p = sub.add_parser("calibrate", help="solve a device preset and save it")
    p.add_argument("--out", default="params.txt", help="parameter file to write")
    p.add_argument("--set-voltage", type=float, default=2.0)
    p.add_argument("--reset-voltage", type=float, default=-0.5)
    p.add_argument("--pulse-width", type=float, default=1.3e-9)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("fixtures", help="write the committed example mappings")
    p.add_argument("--out", default="fixtures", help="output directory")
    p.set_defaults(func=cmd_fixtures)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
