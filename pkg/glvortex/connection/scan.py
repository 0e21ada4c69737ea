import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import bisect, minimize_scalar

from ..basis import ModeParams
from ..utilities import run_parallel
from .connect import connect, ZERO_THRESHOLD

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

SCAN_COLUMNS = ['d', 'n', 'C1', 'C2', 'C3', 'C4', 'C3_normalized', 'condition', 'residual', 'match_radius',
                'error']
BISECT_XTOL = 1e-6
MERGE_DISTANCE = 2e-3


def scan_point(d, n, profile, tol=1e-10, picard_tol=1e-10, far_r_max=40.0, far_step=0.02, R_mid=None, ratio=1.05,
               floor=1e-6):
    """One scan row; runs in a worker process."""
    params = ModeParams.from_mode(d, n)
    coeffs = connect(params, profile, R_mid=R_mid, tol=tol, picard_tol=picard_tol,
                     far_r_max=far_r_max, far_step=far_step, ratio=ratio, floor=floor)
    row = coeffs.row()
    row['n'] = float(n)
    row['error'] = ''
    return row


@dataclass
class ScanRoot:
    n: float
    kind: str
    C3_normalized: float
    dC3_dn: float
    dC3_dn_left: float
    dC3_dn_right: float
    bracket: tuple

    def to_dict(self):
        return {'n': self.n, 'kind': self.kind, 'C3_normalized': self.C3_normalized,
                'dC3_dn': self.dC3_dn, 'dC3_dn_left': self.dC3_dn_left,
                'dC3_dn_right': self.dC3_dn_right, 'bracket': list(self.bracket)}


@dataclass
class ScanResult:
    d: float
    table: pd.DataFrame
    roots: list = field(default_factory=list)
    max_jump_ratio: float = float('nan')

    @property
    def failures(self):
        return int((self.table['error'] != '').sum())

    def summary(self):
        return {'d': self.d, 'n_min': float(self.table['n'].min()), 'n_max': float(self.table['n'].max()),
                'points': len(self.table), 'failures': self.failures,
                'roots': [root.to_dict() for root in self.roots],
                'max_jump_ratio': self.max_jump_ratio,
                'C3_normalization': 'InfPoly+ at unit norm at the match radius'}


class _C3Function:
    """n -> C3_normalized at fixed d, evaluated serially for root refinement."""

    def __init__(self, d, profile, **kwargs):
        self.d = d
        self.profile = profile
        self.kwargs = kwargs
        self.calls = 0

    def __call__(self, n):
        self.calls += 1
        return scan_point(self.d, n, self.profile, **self.kwargs)['C3_normalized']

    def derivative(self, n, h):
        """
        Central difference with one Richardson step, plus one sided estimates.

        The zero side regular branch depends on |n - d|, so C3 can have a kink at
        n = d; the one sided slopes expose it.
        """
        def central(step):
            return (self(n + step) - self(n - step)) / (2 * step)

        d_h, d_half = central(h), central(h / 2)
        richardson = (4 * d_half - d_h) / 3
        value = self(n)
        left = (3 * value - 4 * self(n - h / 2) + self(n - h)) / h
        right = (-3 * value + 4 * self(n + h / 2) - self(n + h)) / h
        log.debug(f'dC3/dn at n={n:.8g}: central {d_h:.6e}, {d_half:.6e}, Richardson {richardson:.6e}')
        return richardson, left, right


def _sign_change_root(c3, n_lo, n_hi, step):
    n_root = bisect(c3, n_lo, n_hi, xtol=BISECT_XTOL)
    slope, left, right = c3.derivative(n_root, step / 4)
    value = c3(n_root)
    if slope != 0 and np.isfinite(slope):
        newton = n_root - value / slope
        if n_lo <= newton <= n_hi:
            n_root = newton
            value = c3(n_root)
    return ScanRoot(n=float(n_root), kind='sign_change', C3_normalized=float(value), dC3_dn=float(slope),
                    dC3_dn_left=float(left), dC3_dn_right=float(right), bracket=(float(n_lo), float(n_hi)))


def _touch_root(c3, n_lo, n_hi, step):
    opt = minimize_scalar(lambda n: abs(c3(n)), bounds=(n_lo, n_hi), method='bounded',
                          options={'xatol': BISECT_XTOL})
    if opt.fun >= ZERO_THRESHOLD:
        log.debug(f'Local minimum {opt.fun:.3e} of |C3| at n={opt.x:.8g} is not a root')
        return None
    slope, left, right = c3.derivative(opt.x, step / 4)
    return ScanRoot(n=float(opt.x), kind='touch', C3_normalized=float(c3(opt.x)), dC3_dn=float(slope),
                    dC3_dn_left=float(left), dC3_dn_right=float(right), bracket=(float(n_lo), float(n_hi)))


def _merge_roots(roots):
    """Roots closer than MERGE_DISTANCE are one root; a pair of sign changes collapses into a touch."""
    merged = []
    for root in sorted(roots, key=lambda x: x.n):
        if merged and root.n - merged[-1][-1].n < MERGE_DISTANCE:
            merged[-1].append(root)
        else:
            merged.append([root])
    result = []
    for group in merged:
        best = min(group, key=lambda x: abs(x.C3_normalized))
        sign_changes = sum(root.kind == 'sign_change' for root in group)
        if sign_changes >= 2 and sign_changes % 2 == 0:
            best.kind = 'touch'
        result.append(best)
    return result


def _max_jump_ratio(values):
    diffs = np.abs(np.diff(values))
    if diffs.size < 3:
        return float('nan')
    neighbour = np.maximum(np.r_[diffs[1], diffs[:-1]], np.r_[diffs[1:], diffs[-2]])
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = diffs / neighbour
    ratio = ratio[np.isfinite(ratio)]
    return float(ratio.max()) if ratio.size else float('nan')


def _find_roots(c3, n, values, step):
    roots = []
    finite = np.isfinite(values)
    for i in range(len(n) - 1):
        if not (finite[i] and finite[i + 1]):
            continue
        if values[i] == 0:
            roots.append(ScanRoot(n=float(n[i]), kind='sign_change', C3_normalized=0.0, dC3_dn=float('nan'),
                                  dC3_dn_left=float('nan'), dC3_dn_right=float('nan'),
                                  bracket=(float(n[i]), float(n[i]))))
        elif values[i] * values[i + 1] < 0:
            roots.append(_sign_change_root(c3, n[i], n[i + 1], step))
    magnitude = np.abs(values)
    for i in range(1, len(n) - 1):
        if not finite[i - 1:i + 2].all():
            continue
        if (magnitude[i] <= magnitude[i - 1] and magnitude[i] <= magnitude[i + 1]
                and magnitude[i] < 10 * ZERO_THRESHOLD
                and values[i - 1] * values[i] > 0 and values[i] * values[i + 1] > 0):
            root = _touch_root(c3, n[i - 1], n[i + 1], step)
            if root is not None:
                roots.append(root)
    return _merge_roots(roots)


def scan_C3(d, n_range, steps, profile, tol=1e-10, picard_tol=1e-10, far_r_max=40.0, far_step=0.02,
            R_mid=None, workers=1, refine=True, ratio=1.05, floor=1e-6):
    """
    C3(n, d) on a uniform n grid, with roots refined and slopes at the roots.

    Points that fail are kept in the table with their error text and NaN
    coefficients. Roots come from sign changes (bisection, then one Newton
    step) and from local minima of |C3| below the zero threshold.
    """
    n_lo, n_hi = (float(x) for x in n_range)
    if steps < 2 or n_hi <= n_lo:
        raise ValueError(f'Need steps >= 2 and n_min < n_max, got steps={steps}, n_range={n_range}')
    n_values = np.linspace(n_lo, n_hi, int(steps))
    outside = [n for n in n_values if not ModeParams.from_mode(d, n).in_D]
    if outside:
        raise ValueError(f'd={d}: n values {outside} leave the domain D')

    settings = dict(tol=tol, picard_tol=picard_tol, far_r_max=far_r_max, far_step=far_step, R_mid=R_mid,
                    ratio=ratio, floor=floor)
    jobs = [dict(d=d, n=float(n), profile=profile, **settings) for n in n_values]
    log.info(f'Scan C3 for d={d} over {steps} points in [{n_lo}, {n_hi}]')
    rows = run_parallel(scan_point, jobs, workers=workers, key='n')
    for row in rows:
        row['d'] = d
    table = pd.DataFrame(rows).reindex(columns=SCAN_COLUMNS)
    table['error'] = table['error'].fillna('')
    table = table.sort_values('n').reset_index(drop=True)

    values = table['C3_normalized'].to_numpy(dtype=float)
    result = ScanResult(d=d, table=table, max_jump_ratio=_max_jump_ratio(values[np.isfinite(values)]))
    if refine:
        step = (n_hi - n_lo) / (steps - 1)
        c3 = _C3Function(d, profile, **settings)
        result.roots = _find_roots(c3, table['n'].to_numpy(), values, step)
        for root in result.roots:
            log.info(f'd={d}: {root.kind} root of C3 at n={root.n:.8f}, dC3/dn={root.dC3_dn:.6e}')
        log.debug(f'Root refinement used {c3.calls} connection solves')
    if result.failures:
        log.warning(f'd={d}: {result.failures} scan points failed')
    return result
