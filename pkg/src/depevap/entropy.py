"""Bipartite entanglement entropy, three ways.

* `entropy_exact`: Schmidt weights of an explicitly built sparse state,
  via per-sector Gram blocks.
* `entropy_formula`: closed form S = <N_c> + S_uncolored in bits from a
  mid-cut surface distribution; each unmatched deposited pair below the
  cut contributes one bit, and pairs number A/2 for cut area A.
* `midcut_distribution`: forward-backward dynamic program over zigzag
  profiles, conditioned to bridge back to the horizon, scaling far past
  exact enumeration.

Cut convention: cut_row = c bisects the lattice right after update slice
c; the bottom part holds spin rows 0..c and color vertices with t <= c,
the top part everything else.  The interface data visible to both sides
is the zigzag profile after slice c plus the colors of unmatched pairs
beneath it, which is exactly the Schmidt sector label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codec import (
    colored_area,
    decode_config,
    key_to_config,
    spin_sites,
    vertex_sites,
    zigzag_profile,
)
from .errors import CapacityError, InvalidParameterError
from .exact import SparseState, slice_outcomes
from .params import ModelParams
from .surface import horizon_profile

MAX_PROFILES = 10_000_000


@dataclass
class SurfaceDistribution:
    """Conditioned distribution of the zigzag profile at a cut."""

    table: dict               # profile tuple -> probability
    cut_row: int
    mean_area: float
    mean_color_units: float
    params: ModelParams


@dataclass
class EntropyReport:
    S_total: float
    S_uncolored: float
    color_term: float
    method: str               # "svd" | "formula" | "dp"


def mid_cut_row(L: int) -> int:
    return (L - 1) // 2


# ---------------------------------------------------------------------------
# forward-backward dynamic program


def _transitions(profile, t, params, cache):
    key = (profile, t % 2)
    hit = cache.get(key)
    if hit is None:
        hit = {}
        for new_prof, w, _ in slice_outcomes(profile, t, params, split_colors=False):
            hit[new_prof] = hit.get(new_prof, 0.0) + w
        cache[key] = hit
    return hit


def midcut_distribution(params: ModelParams, cut_row: int,
                        max_profiles: int = MAX_PROFILES) -> SurfaceDistribution:
    """p(profile at the cut) from forward weights times backward bridge weights.

    Color choices cancel from profile marginals, so one DP serves colored
    and uncolored states alike; only the entropy formula differs.
    """
    params.require_odd_L()
    L = params.L
    if not 1 <= cut_row <= L - 1:
        raise InvalidParameterError(f"cut_row must lie in 1..{L - 1}, got {cut_row}")
    horizon = tuple(int(h) for h in horizon_profile(L))
    cache = {}

    forward = [{horizon: 1.0}]  # forward[t] = weights of profiles after slice t
    for t in range(1, L + 1):
        nxt = {}
        for prof, w in forward[-1].items():
            for new_prof, tw in _transitions(prof, t, params, cache).items():
                nxt[new_prof] = nxt.get(new_prof, 0.0) + w * tw
        forward.append(nxt)
        if len(nxt) > max_profiles:
            raise CapacityError(f"profile space exceeded {max_profiles} at slice {t}")

    backward = {horizon: 1.0}  # backward = P[bridge | profile after slice t]
    for t in range(L, cut_row, -1):
        prev = {}
        for prof in forward[t - 1]:
            total = 0.0
            for new_prof, tw in _transitions(prof, t, params, cache).items():
                b = backward.get(new_prof)
                if b:
                    total += tw * b
            if total > 0:
                prev[prof] = total
        backward = prev

    raw = {prof: fw * backward.get(prof, 0.0) for prof, fw in forward[cut_row].items()}
    total = math.fsum(raw.values())
    if total <= 0:
        raise InvalidParameterError("no bridge passes through the requested cut")
    table = {prof: w / total for prof, w in raw.items() if w > 0}
    mean_area = math.fsum(p * colored_area(prof)[0] for prof, p in table.items())
    return SurfaceDistribution(table=table, cut_row=cut_row,
                               mean_area=mean_area, mean_color_units=mean_area / 2,
                               params=params)


def entropy_formula(dist: SurfaceDistribution) -> EntropyReport:
    """S in bits from the cut distribution; color term <N_c> when colored."""
    probs = np.array(list(dist.table.values()))
    S_unc = float(-(probs * np.log2(probs)).sum()) if len(probs) else 0.0
    color = dist.mean_color_units if dist.params.colored else 0.0
    return EntropyReport(S_total=S_unc + color, S_uncolored=S_unc,
                         color_term=color, method="formula")


def entropy_dp(params: ModelParams, cut_row: int = None,
               max_profiles: int = MAX_PROFILES) -> EntropyReport:
    """midcut_distribution + entropy_formula, tagged as the dp method."""
    if cut_row is None:
        cut_row = mid_cut_row(params.L)
    report = entropy_formula(midcut_distribution(params, cut_row, max_profiles))
    return EntropyReport(S_total=report.S_total, S_uncolored=report.S_uncolored,
                         color_term=report.color_term, method="dp")


# ---------------------------------------------------------------------------
# exact Schmidt spectrum


def _bipartition(L, colored, cut, axis):
    """(bottom sites, top sites) as (kind, coordinate) lists in fixed order."""
    spins = [("s",) + s for s in spin_sites(L)]
    verts = [("c",) + v for v in vertex_sites(L)] if colored else []
    if axis == "space":
        bottom = [s for s in spins if s[2] <= cut] + [v for v in verts if v[2] <= cut]
    elif axis == "time":
        bottom = [s for s in spins if s[1] <= cut] + [v for v in verts if v[1] <= cut]
    else:
        raise InvalidParameterError(f"axis must be 'space' or 'time', got {axis!r}")
    bottom_set = set(bottom)
    top = [s for s in spins + verts if s not in bottom_set]
    return bottom, top


def _site_value(config, site):
    kind, a, b = site
    return config.spins[(a, b)] if kind == "s" else config.colors[(a, b)]


def schmidt_spectrum(state: SparseState, cut_row: int, axis: str = "space",
                     tol: float = 1e-14):
    """Schmidt weights with sector labels, grouped Gram-block by sector.

    Space-axis sectors are labelled (zigzag profile at the cut, unmatched
    pair colors below it); time-axis cuts have no such closed structure
    and fall into a single block labelled by index.
    """
    params = state.params
    L = params.L
    norm = state.norm()
    if abs(norm - 1.0) > 1e-8:
        raise InvalidParameterError(f"state is not normalized: |norm - 1| = {abs(norm - 1):.2e}")
    if axis == "space" and not 1 <= cut_row <= L - 1:
        raise InvalidParameterError(f"cut_row must lie in 1..{L - 1}, got {cut_row}")
    bottom_sites, top_sites = _bipartition(L, params.colored, cut_row, axis)

    groups = {}  # label -> {bottom tuple -> {top tuple -> amp}}
    bottom_label = {}
    for key, amp in state.amplitudes.items():
        config = key_to_config(key, params)
        bot = tuple(_site_value(config, s) for s in bottom_sites)
        top = tuple(_site_value(config, s) for s in top_sites)
        if axis == "space":
            label = _sector_label(config, params, cut_row)
        else:
            label = "time"
        prev = bottom_label.get(bot)
        if prev is None:
            bottom_label[bot] = label
        elif prev != label:
            raise AssertionError("bottom part does not determine the sector label")
        groups.setdefault(label, {}).setdefault(bot, {})[top] = amp

    spectrum = []
    for label, block in sorted(groups.items()):
        bottoms = sorted(block)
        tops = sorted({t for row in block.values() for t in row})
        top_index = {t: k for k, t in enumerate(tops)}
        M = np.zeros((len(bottoms), len(tops)))
        for r, b in enumerate(bottoms):
            for t, a in block[b].items():
                M[r, top_index[t]] = a
        gram = M @ M.T
        for lam in np.linalg.eigvalsh(gram):
            if lam >= tol:
                spectrum.append((label, float(lam)))
    spectrum.sort(key=lambda item: -item[1])
    return spectrum


def _sector_label(config, params, cut_row):
    """(profile, unmatched colors per site) at the cut, from the bottom half."""
    traj = decode_config(config, params)
    prof = tuple(int(h) for h in zigzag_profile(traj.heights, cut_row, L=params.L))
    pending = {i: [] for i in range(1, params.L + 1)}
    for t in range(1, cut_row + 1):
        for i in range(1, params.L + 1):
            if (i + t) % 2 != 1:
                continue
            kind, color = traj.events[(i, t)]
            if kind == "deposit":
                pending[i].append(color)
            elif kind == "evaporate" and pending[i]:
                pending[i].pop()
    colors = tuple(tuple(pending[i]) for i in range(1, params.L + 1)) if params.colored else ()
    return (prof, colors)


def entropy_exact(state: SparseState, cut_row: int, axis: str = "space") -> EntropyReport:
    """-sum(lam log2 lam) over the Schmidt spectrum; method 'svd'."""
    spectrum = schmidt_spectrum(state, cut_row, axis=axis)
    lams = np.array([lam for _, lam in spectrum])
    S_total = float(-(lams * np.log2(lams)).sum())
    by_profile = {}
    for label, lam in spectrum:
        prof = label[0] if isinstance(label, tuple) else label
        by_profile[prof] = by_profile.get(prof, 0.0) + lam
    q = np.array(list(by_profile.values()))
    S_unc = float(-(q * np.log2(q)).sum())
    return EntropyReport(S_total=S_total, S_uncolored=S_unc,
                         color_term=S_total - S_unc, method="svd")


# ---------------------------------------------------------------------------
# exponent fitting


def fit_power_law(xs, ys):
    """Least-squares fit of log y on log x: (exponent, amplitude, r_squared)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3 or xs.size != ys.size:
        raise InvalidParameterError("need at least 3 (x, y) pairs")
    if (xs <= 0).any() or (ys <= 0).any():
        raise InvalidParameterError("power-law fitting needs positive data")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(((ly - pred) ** 2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(np.exp(intercept)), r2
