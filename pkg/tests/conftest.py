"""Shared fixtures and independent brute-force oracles.

The oracle enumerator below re-derives trajectory weights from the
attempt semantics (an event fires with probability 1/2 and is then a
deposition attempt with probability p or an evaporation attempt with
1-p; attempts apply the min/max rules and may be height-neutral), with
no eager pruning and post-selection applied only at the end.  It shares
no event-table or branching code with the package and serves as the
reference for counts, weights and marginals.
"""

import itertools
import math

import numpy as np
import pytest


def oracle_site_outcomes(h, hl, hr, p, mode, colored):
    """{(new_h, color): probability} from the attempt semantics."""
    out = {}

    def add(new_h, color, prob):
        out[(new_h, color)] = out.get((new_h, color), 0.0) + prob

    dep_h = min(hl, hr) + 1
    eva_h = max(hl, hr) - 1
    add(h, 0, 0.5)  # no event
    if mode == "reflecting" and eva_h < 0 and eva_h < h:
        # lowering is forbidden here; the event becomes a certain deposition
        dep_branches = [(dep_h, 0.5)]
        eva_branches = []
    else:
        dep_branches = [(dep_h, 0.5 * p)]
        eva_branches = [(eva_h, 0.5 * (1 - p))]
    for new_h, prob in dep_branches:
        if new_h > h and colored:
            add(new_h, 1, prob / 2)
            add(new_h, 2, prob / 2)
        elif new_h > h:
            add(new_h, 1, prob)
        else:
            add(h, 0, prob)
    for new_h, prob in eva_branches:
        if new_h < h:
            add(new_h, -1, prob)  # color resolved from the stack
        else:
            add(h, 0, prob)
    return out


def oracle_enumerate(L, p, mode, colored, bridge=True):
    """All (slice-profile history, vertex colors, weight) triples.

    Sites 1..L all participate (the frozen boundary sites included, which
    is where the absorbing survival factors come from); trajectories
    that touch h < 0 are discarded at the end in absorbing mode, and the
    bridge filter keeps only returns to the horizon.
    """
    horizon = tuple(i % 2 for i in range(L + 2))
    results = []

    def rec(prof, t, weight, events, stacks, ok):
        if t > L:
            if ok and (not bridge or prof == horizon):
                results.append((tuple(events), weight))
            return
        sites = [i for i in range(1, L + 1) if (i + t) % 2 == 1]
        tables = [oracle_site_outcomes(prof[i], prof[i - 1], prof[i + 1], p, mode, colored)
                  for i in sites]
        for combo in itertools.product(*[sorted(tb.items()) for tb in tables]):
            new_prof = list(prof)
            w = weight
            ev = []
            new_stacks = {i: list(stacks[i]) for i in sites}
            valid = ok
            for i, ((new_h, color), prob) in zip(sites, combo):
                w *= prob
                if new_h < prof[i] and color == -1:
                    color = new_stacks[i].pop() if new_stacks[i] else 0
                elif new_h > prof[i]:
                    new_stacks[i].append(color)
                new_prof[i] = new_h
                if new_h < 0:
                    valid = False
                ev.append(((i, t), (new_h - prof[i]) // 2, color))
            if mode == "reflecting" and not valid:
                raise AssertionError("reflecting oracle produced a negative height")
            merged = dict(stacks)
            merged.update({i: tuple(v) for i, v in new_stacks.items()})
            rec(tuple(new_prof), t + 1, w, events + ev, merged, valid)

    rec(horizon, 1, 1.0, [], {i: () for i in range(1, L + 1)}, True)
    return results


def oracle_success(L, p, mode, colored):
    return math.fsum(w for _, w in oracle_enumerate(L, p, mode, colored))


def oracle_midcut_marginal(L, p, mode, colored, cut_row):
    """Distribution of the zigzag profile after slice cut_row, from the oracle."""
    table = {}
    for events, w in oracle_enumerate(L, p, mode, colored):
        heights = {i: (i % 2) for i in range(L + 2)}
        by_slice = {}
        for (i, t), delta, _ in events:
            by_slice.setdefault(t, []).append((i, delta))
        for t in range(1, cut_row + 1):
            for i, delta in by_slice.get(t, []):
                heights[i] += 2 * delta
        prof = tuple(heights[i] for i in range(L + 2))
        table[prof] = table.get(prof, 0.0) + w
    total = math.fsum(table.values())
    return {prof: w / total for prof, w in table.items()}


def dense_schmidt_weights(state, cut_row, axis="space"):
    """Global dense SVD over the bottom/top split, independent of the
    Gram-block production path."""
    from depevap.entropy import _bipartition, _site_value
    from depevap.codec import key_to_config

    params = state.params
    bottom_sites, top_sites = _bipartition(params.L, params.colored, cut_row, axis)
    bottoms, tops = {}, {}
    entries = []
    for key, amp in state.amplitudes.items():
        config = key_to_config(key, params)
        b = tuple(_site_value(config, s) for s in bottom_sites)
        t = tuple(_site_value(config, s) for s in top_sites)
        bi = bottoms.setdefault(b, len(bottoms))
        ti = tops.setdefault(t, len(tops))
        entries.append((bi, ti, amp))
    M = np.zeros((len(bottoms), len(tops)))
    for bi, ti, amp in entries:
        M[bi, ti] = amp
    svals = np.linalg.svd(M, compute_uv=False)
    return sorted((s * s for s in svals if s * s > 1e-14), reverse=True)


@pytest.fixture(scope="session")
def l3_state_reflecting():
    from depevap import ModelParams, build_state
    return build_state(ModelParams(L=3, p=0.5, boundary_mode="reflecting", colored=True))


@pytest.fixture(scope="session")
def l3_state_absorbing():
    from depevap import ModelParams, build_state
    return build_state(ModelParams(L=3, p=0.5, boundary_mode="absorbing", colored=True))
