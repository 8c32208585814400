# -*- coding: utf-8 -*-
"""
Executive Report Service - PDF summary of a Monte Carlo sweep
One line chart per figure family plus the summary table, timestamps in UTC
"""

import math
from functools import partial

from reportlab.lib import colors
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import getSampleStyleSheet, ParagraphStyle
from reportlab.lib.units import cm
from reportlab.platypus import SimpleDocTemplate, Table, TableStyle, Paragraph, Spacer
from reportlab.graphics.shapes import Drawing, String
from reportlab.graphics.charts.legends import Legend
from reportlab.graphics.charts.lineplots import LinePlot
from reportlab.graphics.widgets.markers import makeMarker

from config import APP_VERSION
from exceptions import OutputError
from models import SweepAxis
from report_service import AXIS_LABELS, PLOT_FAMILIES, utc_now

COLORS = {
    'primary': colors.HexColor('#1a365d'),
    'secondary': colors.HexColor('#2c5282'),
    'accent': colors.HexColor('#3182ce'),
    'text_dark': colors.HexColor('#1a202c'),
    'text_muted': colors.HexColor('#718096'),
    'bg_light': colors.HexColor('#f7fafc'),
    'border': colors.HexColor('#e2e8f0'),
}

# a scheme keeps its color on every chart
SCHEME_COLORS = {
    'proposed_fd_mmimo': colors.HexColor('#3182ce'),
    'hd_mmimo': colors.HexColor('#38a169'),
    'wired_no_mmimo': colors.HexColor('#d69e2e'),
    'fd_no_mmimo': colors.HexColor('#e53e3e'),
}
FALLBACK_COLOR = colors.HexColor('#805ad5')


def _fix_range(axis, values):
    """A single distinct value gets a padded range so the axis can be scaled"""
    low, high = min(values), max(values)
    if low == high:
        pad = max(abs(low) * 0.1, 0.5)
        axis.valueMin = low - pad
        axis.valueMax = high + pad


def create_line_chart(series, xlabel, width=440, height=180):
    """
    Multi-series line chart with a legend

    Args:
        series: list of (label, scheme, dashed, [(x, y), ...]); points with NaN y are skipped
        xlabel: text under the x axis
    """
    series = [(label, scheme, dashed, [(x, y) for x, y in points if not math.isnan(y)])
              for label, scheme, dashed, points in series]
    series = [s for s in series if s[3]]
    if not series:
        return None

    drawing = Drawing(width, height)
    lp = LinePlot()
    lp.x, lp.y = 45, 30
    lp.width, lp.height = width - 190, height - 45
    lp.data = [points for *_, points in series]

    for i, (_, scheme, dashed, _) in enumerate(series):
        color = SCHEME_COLORS.get(scheme, FALLBACK_COLOR)
        lp.lines[i].strokeColor = color
        lp.lines[i].strokeWidth = 1.5
        lp.lines[i].symbol = makeMarker('FilledCircle', size=3, fillColor=color)
        if dashed:
            lp.lines[i].strokeDashArray = (3, 2)

    for axis in (lp.xValueAxis, lp.yValueAxis):
        axis.labels.fontName = 'Helvetica'
        axis.labels.fontSize = 7
        axis.labelTextFormat = '%.3g'
    lp.yValueAxis.strokeColor = COLORS['border']
    lp.yValueAxis.gridStrokeColor = COLORS['border']
    lp.yValueAxis.gridStrokeWidth = 0.3
    lp.yValueAxis.visibleGrid = True
    _fix_range(lp.xValueAxis, [x for *_, points in series for x, _ in points])
    _fix_range(lp.yValueAxis, [y for *_, points in series for _, y in points])
    drawing.add(lp)

    drawing.add(String(lp.x + lp.width / 2, 5, xlabel, fontName='Helvetica', fontSize=7,
                       fillColor=COLORS['text_muted'], textAnchor='middle'))

    legend = Legend()
    legend.x, legend.y = width - 135, height - 20
    legend.dx = legend.dy = 8
    legend.fontName = 'Helvetica'
    legend.fontSize = 7
    legend.boxAnchor = 'nw'
    legend.columnMaximum = 8
    legend.strokeWidth = 0
    legend.deltay = 10
    legend.dxTextSpace = 4
    legend.colorNamePairs = [(SCHEME_COLORS.get(scheme, FALLBACK_COLOR), label) for label, scheme, _, _ in series]
    drawing.add(legend)
    return drawing


def _family_series(summary, columns):
    """One series per scheme and column; SU columns are dashed; the row index stands in when nothing is swept"""
    series = []
    for scheme in dict.fromkeys(s.scheme for s in summary):
        rows = [s for s in summary if s.scheme == scheme]
        for column in columns:
            if column.endswith('_ci95'):
                continue
            tier = column.split('_')[0]
            label = scheme if len(columns) == 1 or column == 'total_se_mean' else f"{scheme} {tier.upper()}"
            points = [(s.sweep_value if s.sweep_param != 'none' else float(i), getattr(s, column))
                      for i, s in enumerate(rows)]
            series.append((label, scheme, tier == 'su', points))
    return series


def _table_style(header_background, *commands):
    return TableStyle([
        ('BACKGROUND', (0, 0), (-1, 0), header_background),
        ('TEXTCOLOR', (0, 0), (-1, 0), colors.white),
        ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
        *commands,
    ])


def add_page_header_footer(canvas, doc, title):
    """Add header and footer to each page"""
    canvas.saveState()
    width, height = A4

    canvas.setFillColor(COLORS['primary'])
    canvas.rect(0, height - 50, width, 50, fill=True, stroke=False)
    canvas.setFillColor(COLORS['accent'])
    canvas.rect(0, height - 54, width, 4, fill=True, stroke=False)

    canvas.setFillColor(colors.white)
    canvas.setFont('Helvetica-Bold', 16)
    canvas.drawString(30, height - 35, title)
    now = utc_now()
    canvas.setFont('Helvetica', 9)
    canvas.drawRightString(width - 30, height - 30, f"Generated: {now.strftime('%Y-%m-%d %H:%M')} UTC")
    canvas.drawRightString(width - 30, height - 42, f"Version {APP_VERSION}")

    canvas.setStrokeColor(COLORS['border'])
    canvas.setLineWidth(1)
    canvas.line(30, 30, width - 30, 30)
    canvas.setFillColor(COLORS['text_muted'])
    canvas.setFont('Helvetica', 8)
    canvas.drawCentredString(width / 2, 15, f"Page {canvas.getPageNumber()}")
    canvas.restoreState()


def generate_sweep_report_pdf(summary, config, path):
    """
    Render report.pdf for a sweep

    Args:
        summary: list of SummaryRow
        config: ScenarioConfig
        path: output file

    Returns:
        path
    """
    doc = SimpleDocTemplate(path, pagesize=A4, rightMargin=25, leftMargin=25, topMargin=70, bottomMargin=50)
    styles = getSampleStyleSheet()
    section_title = ParagraphStyle('SectionTitle', parent=styles['Heading1'], fontSize=14,
                                   textColor=COLORS['primary'], spaceAfter=12, spaceBefore=15)
    small_style = ParagraphStyle('SmallText', parent=styles['Normal'], fontSize=8,
                                 textColor=COLORS['text_muted'], spaceAfter=3)
    elements = []

    # ==================== SCENARIO ====================
    elements.append(Paragraph("Scenario", section_title))
    failed = sum(s.failed for s in summary)
    stats_data = [
        ['ANTENNAS', 'MUs', 'SBSs', 'DROPPINGS', 'SEED', 'FAILED ROWS'],
        [str(config.num_antennas), str(config.num_mus), str(config.num_sbs), str(config.droppings),
         str(config.seed), str(failed)],
    ]
    stats_table = Table(stats_data, colWidths=[2.6 * cm] * 6)
    stats_table.setStyle(_table_style(
        COLORS['primary'],
        ('FONTSIZE', (0, 0), (-1, 0), 8),
        ('FONTSIZE', (0, 1), (-1, -1), 11),
        ('ALIGN', (0, 0), (-1, -1), 'CENTER'),
        ('TEXTCOLOR', (0, 1), (-1, -1), COLORS['text_dark']),
        ('BACKGROUND', (0, 1), (-1, -1), COLORS['bg_light']),
        ('BOX', (0, 0), (-1, -1), 1, COLORS['border']),
        ('VALIGN', (0, 0), (-1, -1), 'MIDDLE'),
    ))
    elements.append(stats_table)
    elements.append(Paragraph(
        f"Self-interference gamma = {config.fading.gamma_si:g}, SINR gap omega = {config.fading.omega:.3f}, "
        f"sweep axis {AXIS_LABELS[SweepAxis(config.sweep_axis).value]}.", small_style))
    elements.append(Spacer(1, 10))

    # ==================== CHARTS ====================
    axis = summary[0].sweep_param if summary else 'none'
    for stem, ylabel, columns in PLOT_FAMILIES:
        chart = create_line_chart(_family_series(summary, columns), AXIS_LABELS.get(axis, axis))
        if chart is None:
            continue
        elements.append(Paragraph(ylabel, section_title))
        elements.append(chart)

    # ==================== SUMMARY TABLE ====================
    elements.append(Paragraph("Summary", section_title))
    table_data = [['Scheme', 'Value', 'n', 'Failed', 'Total SE', '95% CI', 'MU SE', 'SU SE', 'BH power (W)']]
    for s in summary:
        table_data.append([s.scheme, f"{s.sweep_value:.3g}", str(s.n), str(s.failed), f"{s.total_se_mean:.3f}",
                           f"±{s.total_se_ci95:.3f}", f"{s.mu_se_mean:.3f}", f"{s.su_se_mean:.3f}",
                           f"{s.backhaul_power_mean:.3g}"])
    table = Table(table_data, repeatRows=1)
    table.setStyle(_table_style(
        COLORS['secondary'],
        ('FONTSIZE', (0, 0), (-1, -1), 7),
        ('ALIGN', (1, 0), (-1, -1), 'RIGHT'),
        ('ROWBACKGROUNDS', (0, 1), (-1, -1), [colors.white, COLORS['bg_light']]),
        ('GRID', (0, 0), (-1, -1), 0.5, COLORS['border']),
    ))
    elements.append(table)
    elements.append(Spacer(1, 8))
    elements.append(Paragraph("Means over droppings with a solution; 95% intervals use the normal approximation.",
                              small_style))

    header = partial(add_page_header_footer, title="Self-Backhaul Power Allocation Sweep")
    try:
        doc.build(elements, onFirstPage=header, onLaterPages=header)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    return path
