import logging
from datetime import datetime, timezone
from io import BytesIO
from pathlib import Path

import pandas as pd
from reportlab.lib.colors import Color, HexColor, black, white
from reportlab.lib.pagesizes import A4
from reportlab.pdfgen import canvas

logger = logging.getLogger(__name__)

# Tables picked up from an output directory, in report order
REPORT_TABLES = [
    ('summary.csv', 'Hit Ratio Summary'),
    ('sweep_cache_size.csv', 'Cache Size Sweep'),
    ('sweep_predictable.csv', 'Predictable Fraction Sweep'),
]


def _fmt(value) -> str:
    if isinstance(value, float):
        if value != value:
            return 'undefined'
        return f'{value:.4f}'
    return str(value)


def build_report(out_dir) -> bytes:
    """Render the resolved config and result tables of ``out_dir`` as a PDF."""
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        raise FileNotFoundError(f'output directory not found: {out_dir}')

    buffer = BytesIO()
    c = canvas.Canvas(buffer, pagesize=A4)
    width, height = A4

    COLOR_PRIMARY = HexColor("#00897B")
    SECTION_BG = Color(0.95, 0.95, 0.95)

    LEFT_X = 40
    TOP = height - 100
    BOTTOM = 60

    y = TOP

    def new_page():
        nonlocal y
        c.showPage()
        draw_header()
        y = TOP

    def ensure_space(h):
        if y - h < BOTTOM:
            new_page()

    def draw_header():
        c.setFillColor(COLOR_PRIMARY)
        c.rect(0, height - 75, width, 75, fill=1, stroke=0)

        title = "Rule Caching Simulation Report"
        c.setFont("Helvetica-Bold", 20)
        c.setFillColor(white)
        tw = c.stringWidth(title, "Helvetica-Bold", 20)
        c.drawString((width - tw) / 2, height - 45, title)

        c.setFont("Helvetica", 10)
        c.drawString(40, height - 65, f"Results: {out_dir.name}")

        created = f"Created: {datetime.now(timezone.utc):%Y-%m-%d %H:%M:%S} UTC"
        cw = c.stringWidth(created, "Helvetica", 10)
        c.drawString(width - 40 - cw, height - 65, created)

    def section(title):
        nonlocal y
        ensure_space(40)
        c.setFont("Helvetica-Bold", 13)
        c.setFillColor(COLOR_PRIMARY)
        c.drawString(LEFT_X, y, title)
        y -= 18
        c.setFillColor(SECTION_BG)
        c.rect(LEFT_X, y, 200, 3, fill=1, stroke=0)
        y -= 15

    def line(txt, indent=0, font="Helvetica"):
        nonlocal y
        ensure_space(15)
        c.setFont(font, 10)
        c.setFillColor(black)
        c.drawString(LEFT_X + indent, y, txt)
        y -= 14

    def table(frame: pd.DataFrame):
        nonlocal y
        col_width = (width - 2 * LEFT_X) / max(len(frame.columns), 1)
        cells = [list(frame.columns)] + [[_fmt(v) for v in row] for row in frame.itertuples(index=False)]
        for ridx, row in enumerate(cells):
            ensure_space(15)
            # header row in bold
            c.setFont("Helvetica-Bold" if ridx == 0 else "Helvetica", 9)
            c.setFillColor(black)
            for cidx, cell in enumerate(row):
                c.drawString(LEFT_X + cidx * col_width, y, str(cell))
            y -= 13

    draw_header()

    section("Configuration")
    resolved = out_dir / 'resolved.conf'
    if resolved.is_file():
        for entry in resolved.read_text().splitlines():
            if entry.strip():
                line(entry, indent=10, font="Courier")
    else:
        line("(no resolved.conf in this directory)")

    found = 0
    for filename, title in REPORT_TABLES:
        path = out_dir / filename
        if not path.is_file():
            continue
        try:
            frame = pd.read_csv(path)
        except Exception as exc:
            logger.warning("Skipping table '%s' in report: %s", filename, exc)
            continue
        found += 1
        section(title)
        table(frame)

    if not found:
        section("Results")
        line("(no result tables found)")

    c.save()
    buffer.seek(0)
    return buffer.getvalue()
