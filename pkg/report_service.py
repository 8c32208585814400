# -*- coding: utf-8 -*-
"""
Report Service - Writes sweep results, summaries, plot scripts and the run manifest
All timestamps are UTC
"""

import csv
import json
import logging
import os
from dataclasses import fields, is_dataclass
from datetime import datetime
from enum import Enum

import pytz

from openpyxl import Workbook
from openpyxl.styles import Font, Alignment, PatternFill, Border, Side
from openpyxl.utils import get_column_letter

from config import APP_VERSION
from exceptions import OutputError
from models import ResultRow

logger = logging.getLogger('REPORT')

RESULTS_HEADER = ['scheme', 'sweep_param', 'sweep_value', 'dropping', 'total_se', 'mu_se', 'su_se',
                  'backhaul_power_w', 'iterations', 'termination', 'wall_time_ms']
SUMMARY_HEADER = ['scheme', 'sweep_param', 'sweep_value', 'n', 'failed', 'total_se_mean', 'total_se_ci95',
                  'mu_se_mean', 'su_se_mean', 'backhaul_power_mean', 'paired_n', 'paired_total_se_mean']

# Plot families: (file stem, y label, summary columns written to the .dat files)
PLOT_FAMILIES = [
    ('total_se', 'Total spectrum efficiency (bit/s/Hz)', ['total_se_mean', 'total_se_ci95']),
    ('tier_se', 'Spectrum efficiency per tier (bit/s/Hz)', ['mu_se_mean', 'su_se_mean']),
    ('backhaul_power', 'Backhaul power (W)', ['backhaul_power_mean']),
]

AXIS_LABELS = {
    'num_mus': 'Number of MUs',
    'num_sbs': 'Number of SBSs',
    'gamma_si': 'Self-interference coefficient',
    'none': 'Scenario',
}


def utc_now():
    return datetime.now(pytz.utc)


def format_float(value):
    """Shortest decimal that reads back to the same float"""
    return repr(float(value))


def ensure_output_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create output directory {path}: {e}") from e
    if not os.access(path, os.W_OK):
        raise OutputError(f"output directory {path} is not writable")


def _open(path):
    try:
        return open(path, 'w', encoding='utf-8', newline='')
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e


# ==================== CSV ====================

def result_fields(row):
    return [
        row.scheme,
        row.sweep_param,
        format_float(row.sweep_value),
        str(int(row.dropping)),
        format_float(row.total_se),
        format_float(row.mu_se),
        format_float(row.su_se),
        format_float(row.backhaul_power_w),
        str(int(row.iterations)),
        row.termination,
        '' if row.wall_time_ms is None else format_float(row.wall_time_ms),
    ]


def write_results_csv(rows, path):
    """results.csv: fixed header, UTF-8, LF line endings, full precision floats"""
    with _open(path) as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(RESULTS_HEADER)
        for row in rows:
            writer.writerow(result_fields(row))
    return path


def read_results(path):
    """Parse a results.csv back into ResultRows"""
    rows = []
    with open(path, encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != RESULTS_HEADER:
            raise OutputError(f"{path} does not have the results header")
        for record in reader:
            rows.append(ResultRow(
                scheme=record['scheme'],
                sweep_param=record['sweep_param'],
                sweep_value=float(record['sweep_value']),
                dropping=int(record['dropping']),
                total_se=float(record['total_se']),
                mu_se=float(record['mu_se']),
                su_se=float(record['su_se']),
                backhaul_power_w=float(record['backhaul_power_w']),
                iterations=int(record['iterations']),
                termination=record['termination'],
                wall_time_ms=float(record['wall_time_ms']) if record['wall_time_ms'] else None,
            ))
    return rows


def write_summary_csv(summary, path):
    with _open(path) as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(SUMMARY_HEADER)
        for s in summary:
            writer.writerow([s.scheme, s.sweep_param, format_float(s.sweep_value), s.n, s.failed,
                             format_float(s.total_se_mean), format_float(s.total_se_ci95),
                             format_float(s.mu_se_mean), format_float(s.su_se_mean),
                             format_float(s.backhaul_power_mean), s.paired_n,
                             format_float(s.paired_total_se_mean)])
    return path


def write_trace_csv(reports, path):
    """Objective trace of one or more solver runs, one line per trace point"""
    with _open(path) as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['start', 'phase', 'outer', 'inner', 'relaxed_objective', 'true_objective',
                         'max_violation'])
        for start, report in enumerate(reports):
            for p in report.objective_trace:
                writer.writerow([start, p.phase, p.outer, p.inner, format_float(p.relaxed_objective),
                                 format_float(p.true_objective), format_float(p.max_violation)])
    return path


# ==================== PLOT SCRIPTS ====================

def _write_dat(path, summary_rows, columns):
    with _open(path) as f:
        f.write('# sweep_value ' + ' '.join(columns) + '\n')
        for s in summary_rows:
            f.write(' '.join([format_float(s.sweep_value)] + [format_float(getattr(s, c)) for c in columns]) + '\n')


def write_plot_scripts(summary, out_dir):
    """
    One gnuplot script per figure family plus one .dat file per scheme and family

    Returns:
        list of written script paths
    """
    schemes = list(dict.fromkeys(s.scheme for s in summary))
    axis = summary[0].sweep_param if summary else 'none'
    scripts = []
    for stem, ylabel, columns in PLOT_FAMILIES:
        plots = []
        for scheme in schemes:
            dat = f"{stem}_{scheme}.dat"
            _write_dat(os.path.join(out_dir, dat), [s for s in summary if s.scheme == scheme], columns)
            if stem == 'total_se':
                plots.append(f"'{dat}' using 1:2:3 with yerrorlines title '{scheme}'")
            else:
                for i, column in enumerate(columns, start=2):
                    plots.append(f"'{dat}' using 1:{i} with linespoints title '{scheme} {column}'")

        path = os.path.join(out_dir, f"{stem}.gp")
        with _open(path) as f:
            f.write("set terminal pngcairo size 900,600\n")
            f.write(f"set output '{stem}.png'\n")
            f.write(f"set xlabel '{AXIS_LABELS.get(axis, axis)}'\n")
            f.write(f"set ylabel '{ylabel}'\n")
            if axis == 'gamma_si':
                f.write("set logscale x\n")
            f.write("set grid\nset key outside right\n")
            f.write("plot " + ", \\\n     ".join(plots) + "\n" if plots else "")
        scripts.append(path)
    return scripts


def write_convergence_script(trace_csv, out_dir):
    """gnuplot script drawing the outer objective trace of every start"""
    path = os.path.join(out_dir, 'convergence.gp')
    name = os.path.basename(trace_csv)
    with _open(path) as f:
        f.write("set terminal pngcairo size 900,600\n")
        f.write("set output 'convergence.png'\n")
        f.write("set datafile separator ','\n")
        f.write("set xlabel 'Iteration'\nset ylabel 'Total spectrum efficiency (bit/s/Hz)'\nset grid\n")
        f.write(f"plot '{name}' every ::1 using 0:6 with linespoints title 'true objective', \\\n")
        f.write(f"     '{name}' every ::1 using 0:5 with lines title 'relaxed objective'\n")
    return path


# ==================== MANIFEST ====================

def _plain(value):
    if isinstance(value, Enum):
        return value.value
    if is_dataclass(value):
        return {f.name: _plain(getattr(value, f.name)) for f in fields(value)}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def write_manifest(config, path, extra=None):
    """run_manifest.json: config echo, seed, code version and UTC timestamp"""
    manifest = {
        'version': APP_VERSION,
        'seed': config.seed,
        'generated_at': utc_now().isoformat(),
        'config': _plain(config),
    }
    manifest.update(extra or {})
    with _open(path) as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write('\n')
    return path


# ==================== EXCEL GENERATION ====================

def _style_excel_header(ws, header_row=1):
    """Apply styling to Excel header row"""
    header_fill = PatternFill(start_color='3498db', end_color='3498db', fill_type='solid')
    header_font = Font(bold=True, color='FFFFFF')
    thin_border = Border(
        left=Side(style='thin'),
        right=Side(style='thin'),
        top=Side(style='thin'),
        bottom=Side(style='thin')
    )

    for cell in ws[header_row]:
        cell.fill = header_fill
        cell.font = header_font
        cell.alignment = Alignment(horizontal='center', vertical='center')
        cell.border = thin_border


def _auto_width(ws):
    for col_num, column in enumerate(ws.columns, 1):
        max_length = max((len(str(cell.value)) for cell in column if cell.value is not None), default=0)
        ws.column_dimensions[get_column_letter(col_num)].width = min(max_length + 2, 40)


def write_summary_excel(rows, summary, config, path):
    """
    summary.xlsx with the summary table, every result row and a run info sheet
    """
    wb = Workbook()
    ws = wb.active
    ws.title = "Summary"
    ws.append(SUMMARY_HEADER)
    _style_excel_header(ws)
    for s in summary:
        ws.append([s.scheme, s.sweep_param, s.sweep_value, s.n, s.failed, s.total_se_mean,
                   s.total_se_ci95, s.mu_se_mean, s.su_se_mean, s.backhaul_power_mean,
                   s.paired_n, s.paired_total_se_mean])
    _auto_width(ws)

    ws_rows = wb.create_sheet(title="Results")
    ws_rows.append(RESULTS_HEADER)
    _style_excel_header(ws_rows)
    for row in rows:
        ws_rows.append([row.scheme, row.sweep_param, row.sweep_value, row.dropping, row.total_se, row.mu_se,
                        row.su_se, row.backhaul_power_w, row.iterations, row.termination, row.wall_time_ms])
    _auto_width(ws_rows)

    ws_meta = wb.create_sheet(title="Info")
    ws_meta.append(["Self-backhaul power allocation sweep"])
    ws_meta.append([])
    ws_meta.append([f"Generated: {utc_now().strftime('%Y-%m-%d %H:%M')} UTC"])
    ws_meta.append([f"Version: {APP_VERSION}"])
    ws_meta.append([f"Seed: {config.seed}"])
    ws_meta.append([f"Antennas: {config.num_antennas}, MUs: {config.num_mus}, SBSs: {config.num_sbs}"])
    ws_meta.append([f"Droppings: {config.droppings}"])
    ws_meta.append([f"Total rows: {len(rows)}"])

    try:
        wb.save(path)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    return path


# ==================== ENTRY POINT ====================

def emit_outputs(rows, config, summary, out_dir=None, pdf=True):
    """
    Write every artifact of a sweep

    Args:
        rows: list of ResultRow
        config: ScenarioConfig
        summary: list of SummaryRow
        out_dir: overrides config.output_dir
        pdf: also render report.pdf

    Returns:
        dict of artifact name to path

    Raises:
        OutputError: output directory or a file cannot be written
    """
    out_dir = out_dir or config.output_dir
    ensure_output_dir(out_dir)
    paths = {
        'results': write_results_csv(rows, os.path.join(out_dir, 'results.csv')),
        'summary': write_summary_csv(summary, os.path.join(out_dir, 'summary.csv')),
        'manifest': write_manifest(config, os.path.join(out_dir, 'run_manifest.json'),
                                   {'rows': len(rows), 'failed_rows': sum(not r.succeeded for r in rows)}),
        'excel': write_summary_excel(rows, summary, config, os.path.join(out_dir, 'summary.xlsx')),
    }
    paths['plots'] = write_plot_scripts(summary, out_dir)
    if pdf:
        from executive_report_service import generate_sweep_report_pdf
        paths['pdf'] = generate_sweep_report_pdf(summary, config, os.path.join(out_dir, 'report.pdf'))
    logger.info("Wrote %d rows to %s", len(rows), out_dir)
    return paths
