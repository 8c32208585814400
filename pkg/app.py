"""
Command line entry point: sweep, single, oracle and selftest
"""

import argparse
import logging
import os
import sys
import unittest

from config import Config, field_paths, apply_overrides, load_scenario_file
from exceptions import ConfigError, OutputError, SimulationError
from models import ScenarioConfig

logger = logging.getLogger('SIM')

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILED_ROWS = 2


def setup_logging(level):
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, str(level).upper(), logging.INFO),
                        format='[%(name)s] %(message)s')


def build_parser():
    parser = argparse.ArgumentParser(prog='app.py', description='FD self-backhaul power allocation simulator')
    parser.add_argument('--log-level', default=Config.LOG_LEVEL)
    sub = parser.add_subparsers(dest='command', required=True)

    def scenario_flags(p):
        p.add_argument('--config', help='flat key=value scenario file')
        for name in sorted(field_paths(ScenarioConfig())):
            p.add_argument('--' + name.replace('_', '-'), dest=name, default=None, metavar='VALUE')
        p.add_argument('--no-pdf', action='store_true', help='skip report.pdf')

    sweep = sub.add_parser('sweep', help='Monte Carlo sweep over droppings')
    scenario_flags(sweep)

    single = sub.add_parser('single', help='one realization with the full objective trace')
    scenario_flags(single)
    single.add_argument('--dropping', type=int, default=0)
    single.add_argument('--starts', type=int, default=1, help='number of starting points')

    oracle = sub.add_parser('oracle', help='brute force against the solver on K=1, N=1 instances')
    scenario_flags(oracle)
    oracle.add_argument('--instances', type=int, default=20)
    oracle.add_argument('--points', type=int, default=50, help='grid points per power variable')

    sub.add_parser('selftest', help='run the test suite')
    return parser


def resolve_config(args):
    """Defaults, then the scenario file, then OUTPUT_DIR / SIM_WORKERS, then command line flags"""
    config = ScenarioConfig()
    if args.config:
        config = apply_overrides(config, load_scenario_file(args.config))
    env = {}
    if os.environ.get('OUTPUT_DIR'):
        env['output_dir'] = Config.OUTPUT_DIR
    if os.environ.get('SIM_WORKERS'):
        env['workers'] = Config.WORKERS
    config = apply_overrides(config, env)
    flags = {name: getattr(args, name) for name in field_paths(config) if getattr(args, name, None) is not None}
    return apply_overrides(config, flags).validate()


# ==================== COMMANDS ====================

def cmd_sweep(args):
    from report_service import emit_outputs
    from simulation_service import aggregate, run_sweep

    config = resolve_config(args)
    rows = run_sweep(config)
    summary = aggregate(rows, config)
    emit_outputs(rows, config, summary, pdf=not args.no_pdf)
    for s in summary:
        print(f"{s.scheme:<18} {s.sweep_param}={s.sweep_value:<10g} total SE {s.total_se_mean:.4f} "
              f"± {s.total_se_ci95:.4f} (n={s.n}, failed={s.failed})")
    return EXIT_FAILED_ROWS if any(not r.succeeded for r in rows) else EXIT_OK


def cmd_single(args):
    from report_service import ensure_output_dir, write_convergence_script, write_manifest, write_trace_csv
    from simulation_service import run_single

    config = resolve_config(args)
    if args.starts < 1:
        raise ConfigError("--starts must be >= 1")
    _, reports = run_single(config, dropping=args.dropping, starts=args.starts)
    ensure_output_dir(config.output_dir)
    trace = write_trace_csv(reports, os.path.join(config.output_dir, 'trace.csv'))
    write_convergence_script(trace, config.output_dir)
    write_manifest(config, os.path.join(config.output_dir, 'run_manifest.json'),
                   {'command': 'single', 'dropping': args.dropping, 'starts': args.starts})

    for start, report in enumerate(reports):
        if report.final_rates is None:
            print(f"start {start}: {report.termination.value}")
            continue
        rates = report.final_rates
        print(f"start {start}: {report.termination.value}, total SE {rates.total:.6f} "
              f"(MU {rates.mu_sum:.4f}, SU {rates.su_sum:.4f}), backhaul power {report.backhaul_power:.4g} W, "
              f"{report.outer_iterations} outer / {report.inner_iterations} inner iterations")
    return EXIT_OK if all(r.final_rates is not None for r in reports) else EXIT_FAILED_ROWS


def cmd_oracle(args):
    from simulation_service import run_oracle

    config = resolve_config(args)
    results = run_oracle(config, instances=args.instances, points=args.points)
    missing = 0
    for r in results:
        cccp = '-' if r['cccp'] is None else f"{r['cccp']:.6f}"
        bfs = '-' if r['bfs'] is None else f"{r['bfs']:.6f}"
        missing += r['cccp'] is None or r['bfs'] is None
        print(f"dropping {r['dropping']:>3}: cccp {cccp:>10}  bfs {bfs:>10}  slack {r['slack']:.4f}")
    return EXIT_FAILED_ROWS if missing else EXIT_OK


def cmd_selftest(args):
    suite = unittest.defaultTestLoader.discover(os.path.join(os.path.dirname(os.path.abspath(__file__)), 'tests'))
    result = unittest.TextTestRunner(verbosity=1).run(suite)
    return EXIT_OK if result.wasSuccessful() else EXIT_FAILED_ROWS


COMMANDS = {
    'sweep': cmd_sweep,
    'single': cmd_single,
    'oracle': cmd_oracle,
    'selftest': cmd_selftest,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error("Configuration error: %s", e)
        return EXIT_CONFIG
    except (OutputError, SimulationError) as e:
        logger.error("%s", e)
        return EXIT_FAILED_ROWS


if __name__ == '__main__':
    sys.exit(main())
