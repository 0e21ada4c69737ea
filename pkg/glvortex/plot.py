import logging
import pathlib
import re

import matplotlib as mpl
import pandas as pd
import seaborn as sns

from .utilities import read_table, write_table

mpl.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

# fixed ids inside the svg files
mpl.rcParams['svg.hashsalt'] = 'glvortex'
SVG_METADATA = {'Date': None}
PLOT_FILES = {'C3': 'plotdata_C3.csv', 'm': 'plotdata_m.csv', 'profile': 'plotdata_profile.csv'}
PROFILE_PLOT_R_MAX = 10.0


def _degree(path, prefix):
    return float(re.match(rf'{prefix}_d(.+)\.csv$', path.name).group(1))


def _c3_series(input_dir):
    tables = []
    for path in sorted(input_dir.glob('scan_d*.csv')):
        data, _ = read_table(path)
        data = data[data['error'].isna() | (data['error'] == '')] if 'error' in data else data
        tables.append(data[['d', 'n', 'C3_normalized']])
    if not tables:
        return None
    return pd.concat(tables, ignore_index=True).sort_values(['d', 'n']).reset_index(drop=True)


def _m_series(input_dir):
    path = input_dir / 'eig.csv'
    if not path.exists():
        return None
    data, _ = read_table(path)
    data = data[data['m'].notna()].copy()
    data['mode'] = [f'({g1:g}, {g2:g})' if pd.notna(g1) else 'scalar'
                    for g1, g2 in zip(data['gamma1'], data['gamma2'])]
    return data[['d', 'mode', 'n', 'epsilon', 'm']].sort_values(['d', 'mode', 'epsilon']).reset_index(drop=True)


def _profile_series(input_dir):
    tables = []
    for path in sorted(input_dir.glob('profile_d*.csv')):
        data, _ = read_table(path)
        data = data[data['r'] <= PROFILE_PLOT_R_MAX]
        tables.append(pd.DataFrame({'d': _degree(path, 'profile'), 'r': data['r'], 'f': data['f']}))
    if not tables:
        return None
    return pd.concat(tables, ignore_index=True)


def _plot(data, x, y, hue, path, xlabel, ylabel, style=None, zero_line=False):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    sns.lineplot(data=data, x=x, y=y, hue=hue, style=style, ax=ax, marker='o' if x != 'r' else None,
                 palette='tab10', estimator=None, sort=True)
    if zero_line:
        ax.axhline(0, color='grey', linewidth=0.5)
    ax.set(xlabel=xlabel, ylabel=ylabel)
    sns.despine(ax=ax)
    fig.tight_layout()
    fig.savefig(path, metadata=SVG_METADATA)
    plt.close(fig)
    log.info(f'Write {path}')
    return path


def emit_plotdata(input_dir, output_dir=None, svg=False):
    """
    Collect C3 vs n, m vs epsilon and f vs r series from result files.

    Reads scan_d*.csv, eig.csv and profile_d*.csv in input_dir and writes
    plotdata_C3.csv, plotdata_m.csv and plotdata_profile.csv for those that
    exist, plus one SVG per series with svg. Raises FileNotFoundError when
    none of the inputs exist.
    """
    input_dir = pathlib.Path(input_dir)
    output_dir = input_dir if output_dir is None else pathlib.Path(output_dir)
    series = {'C3': _c3_series(input_dir), 'm': _m_series(input_dir), 'profile': _profile_series(input_dir)}
    series = {k: v for k, v in series.items() if v is not None}
    if not series:
        raise FileNotFoundError(f'No scan_d*.csv, eig.csv or profile_d*.csv found in {input_dir}')

    written = []
    for name, data in series.items():
        written.append(write_table(data, output_dir / PLOT_FILES[name]))
    if svg:
        if 'C3' in series:
            written.append(_plot(series['C3'], 'n', 'C3_normalized', 'd', output_dir / 'plot_C3.svg',
                                 'n', 'normalized $C_3$', zero_line=True))
        if 'm' in series:
            written.append(_plot(series['m'], 'epsilon', 'm', 'mode', output_dir / 'plot_m.svg',
                                 r'$\varepsilon$', 'm', style='d'))
        if 'profile' in series:
            written.append(_plot(series['profile'], 'r', 'f', 'd', output_dir / 'plot_profile.svg',
                                 'r', '$f_d$'))
    return written
