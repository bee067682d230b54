"""
Optional SVG rendering of curve CSVs.

Output is deterministic: fixed hash salt, no date metadata.
"""
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402

from .report_writer import read_csv  # noqa: E402

matplotlib.rcParams['svg.hashsalt'] = 'echelon'
matplotlib.rcParams['svg.fonttype'] = 'path'


def render_curve_svg(csv_path: Union[str, Path], svg_path: Optional[Union[str, Path]] = None) -> Path:
    """
    Plot every value column of a curve CSV against x; NaN rows show as breaks.
    A header carrying epsilon_I adds dashed lines at +/- epsilon_I.
    """
    csv_path = Path(csv_path)
    svg_path = Path(svg_path) if svg_path else csv_path.with_suffix('.svg')
    header, columns, rows = read_csv(csv_path)

    fig, ax = plt.subplots(figsize=(6, 4))
    if len(rows):
        for k, label in enumerate(columns[1:], start=1):
            ax.plot(rows[:, 0], rows[:, k], linewidth=1.2, label=label)
    epsilon = header.get('epsilon_I')
    if epsilon not in (None, 'None'):
        for level in (float(epsilon), -float(epsilon)):
            ax.axhline(level, color='0.3', linestyle='--', linewidth=0.8)
    ax.axhline(0.0, color='0.6', linewidth=0.6)
    if len(columns) > 2:
        ax.legend()
    ax.set_xlabel('x (m)')
    ax.set_ylabel(header.get('quantity', columns[1] if len(columns) > 1 else 'value'))
    ax.set_title(header.get('title', csv_path.stem))
    ax.grid(True, linewidth=0.3)

    fig.savefig(svg_path, format='svg', metadata={'Date': None})
    plt.close(fig)
    return svg_path
