"""Classical deposition-evaporation dynamics on a 1D substrate.

A configuration is an integer height profile h[0..L+1] with pinned ends,
unit neighbour steps |h[i] - h[i+1]| = 1, and the parity rule
h[i] == i (mod 2).  The initial condition is the horizon (a block on
every second site).  One time slice updates all eligible sites of one
parity sublattice independently; a site gains or loses a column of two
blocks, so heights move in steps of +-2 and the neighbour constraint is
preserved automatically because the other sublattice is frozen during
the slice.

Sites 1 and L are frozen at height 1 for all times: site 0 is pinned at
0, so neither rule can move them.  The eligible (updatable) sites are
2..L-1.

Reflecting mode forbids any move that would take a height below 0; the
only case where this bites is a Peak at h=1, which becomes a certain
no-change (no-event 1/2 plus forced height-neutral deposition 1/2).
Absorbing mode applies the unconstrained rules; trajectories that touch
h < 0 are discarded by the caller's post-selection.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .params import ModelParams

COLOR_NONE = 0
COLOR_R = 1
COLOR_G = 2


class SiteShape(enum.Enum):
    VALLEY = "valley"
    PEAK = "peak"
    SLOPE_UP = "slope_up"
    SLOPE_DOWN = "slope_down"


@dataclass(frozen=True)
class EventOutcome:
    """One entry of a per-site event table."""

    kind: str          # "deposit" | "evaporate" | "no_change"
    color: int         # COLOR_* (COLOR_NONE for no_change and uncolored tables)
    height_delta: int  # -2, 0, +2
    probability: float


@dataclass(frozen=True)
class SliceEvent:
    site: int
    kind: str
    color: int | None  # None: evaporation color unresolved (no stack given)
    probability: float


def horizon_profile(L: int) -> np.ndarray:
    """Initial surface [0,1,0,...,1,0] of length L+2; requires odd L."""
    if not isinstance(L, int) or L < 3:
        raise InvalidParameterError(f"L must be an integer >= 3, got {L!r}")
    if L % 2 == 0:
        raise InvalidParameterError(f"the horizon needs odd L, got {L}")
    return np.array([i % 2 for i in range(L + 2)], dtype=np.int64)


def free_horizon(L: int) -> np.ndarray:
    """Horizon for free dynamics; for even L the right wall sits at height 1."""
    if not isinstance(L, int) or L < 3:
        raise InvalidParameterError(f"L must be an integer >= 3, got {L!r}")
    return np.array([i % 2 for i in range(L + 2)], dtype=np.int64)


def deposit_rule(profile, i):
    """h_i <- min(h_{i-1}, h_{i+1}) + 1; total rule, may be a no-op."""
    out = np.array(profile, dtype=np.int64, copy=True)
    out[i] = min(out[i - 1], out[i + 1]) + 1
    return out


def evaporate_rule(profile, i):
    """h_i <- max(h_{i-1}, h_{i+1}) - 1; may go negative, caller decides legality."""
    out = np.array(profile, dtype=np.int64, copy=True)
    out[i] = max(out[i - 1], out[i + 1]) - 1
    return out


def site_shape(profile, i) -> SiteShape:
    dl = profile[i - 1] - profile[i]
    dr = profile[i + 1] - profile[i]
    if dl == 1 and dr == 1:
        return SiteShape.VALLEY
    if dl == -1 and dr == -1:
        return SiteShape.PEAK
    if dl == -1 and dr == 1:
        return SiteShape.SLOPE_UP
    if dl == 1 and dr == -1:
        return SiteShape.SLOPE_DOWN
    raise InvalidParameterError(f"profile violates |dh| = 1 around site {i}")


def event_distribution(shape: SiteShape, h: int, params: ModelParams) -> list[EventOutcome]:
    """Exact per-vertex event table for one eligible site.

    The colored table splits deposition and evaporation equally over the
    two colors.  For evaporation this is the marginal over the (uniform)
    color of the pair beneath the surface; trajectory-level weights use
    the full (1-p)/2 with the color fixed by the matching deposition.
    """
    p = params.p
    if shape is SiteShape.VALLEY:
        if params.colored:
            events = [
                EventOutcome("deposit", COLOR_R, +2, p / 4),
                EventOutcome("deposit", COLOR_G, +2, p / 4),
            ]
        else:
            events = [EventOutcome("deposit", COLOR_NONE, +2, p / 2)]
        events.append(EventOutcome("no_change", COLOR_NONE, 0, 1 - p / 2))
        return events
    if shape is SiteShape.PEAK:
        if params.boundary_mode == "reflecting" and h <= 1:
            return [EventOutcome("no_change", COLOR_NONE, 0, 1.0)]
        if params.colored:
            events = [
                EventOutcome("evaporate", COLOR_R, -2, (1 - p) / 4),
                EventOutcome("evaporate", COLOR_G, -2, (1 - p) / 4),
            ]
        else:
            events = [EventOutcome("evaporate", COLOR_NONE, -2, (1 - p) / 2)]
        events.append(EventOutcome("no_change", COLOR_NONE, 0, (1 + p) / 2))
        return events
    return [EventOutcome("no_change", COLOR_NONE, 0, 1.0)]


def site_branches(h, hl, hr, params: ModelParams):
    """Trajectory branches (new_h, kind, color, prob) for one eligible site.

    Unlike event_distribution, evaporation is a single branch of weight
    (1-p)/2 with color None: the color is owned by the matching deposit
    and resolved by the caller from its per-site stack.
    """
    p = params.p
    dl, dr = hl - h, hr - h
    if dl == 1 and dr == 1:  # valley
        branches = []
        if params.colored:
            branches += [(h + 2, "deposit", COLOR_R, p / 4), (h + 2, "deposit", COLOR_G, p / 4)]
        else:
            branches += [(h + 2, "deposit", COLOR_R, p / 2)]
        branches.append((h, "no_change", COLOR_NONE, 1 - p / 2))
        return branches
    if dl == -1 and dr == -1:  # peak
        if params.boundary_mode == "reflecting" and h <= 1:
            return [(h, "no_change", COLOR_NONE, 1.0)]
        return [
            (h - 2, "evaporate", None, (1 - p) / 2),
            (h, "no_change", COLOR_NONE, (1 + p) / 2),
        ]
    return [(h, "no_change", COLOR_NONE, 1.0)]


def updatable_sites(L: int, parity: str) -> list[int]:
    """Eligible sites of one parity sublattice; 1 and L stay frozen."""
    if parity not in ("even", "odd"):
        raise InvalidParameterError(f"parity must be 'even' or 'odd', got {parity!r}")
    want = 0 if parity == "even" else 1
    return [i for i in range(2, L) if i % 2 == want]


def slice_parity(t: int) -> str:
    """Site parity updated at slice t: vertex (i, t) exists for i + t odd."""
    return "even" if t % 2 == 1 else "odd"


def advance_slice(profile, parity, rng, params: ModelParams, stacks=None):
    """Advance one sublattice slice, sampling one event per eligible site.

    Returns (new_profile, events, weight) where weight is the product of
    the sampled branch probabilities.  When `stacks` (per-site lists of
    pending pair colors) is given, deposits push their color and
    evaporations pop it, resolving evaporation colors exactly.
    Reflecting mode never produces a negative height; absorbing mode may
    (the caller post-selects).
    """
    out = np.array(profile, dtype=np.int64, copy=True)
    events = []
    weight = 1.0
    for i in updatable_sites(params.L, parity):
        branches = site_branches(profile[i], profile[i - 1], profile[i + 1], params)
        u = rng.random()
        acc = 0.0
        chosen = branches[-1]
        for br in branches:
            acc += br[3]
            if u < acc:
                chosen = br
                break
        new_h, kind, color, prob = chosen
        if stacks is not None:
            if kind == "deposit":
                stacks[i].append(color)
            elif kind == "evaporate":
                color = stacks[i].pop() if stacks[i] else COLOR_R
        out[i] = new_h
        weight *= prob
        events.append(SliceEvent(i, kind, color, prob))
    if params.boundary_mode == "reflecting" and (out < 0).any():
        raise AssertionError("reflecting dynamics produced a negative height")
    return out, events, weight


def validate_profile(profile, L, mode="reflecting"):
    """Assert the HeightProfile invariants; raises InvalidParameterError."""
    profile = np.asarray(profile)
    if profile.shape != (L + 2,):
        raise InvalidParameterError(f"profile must have length L+2={L + 2}")
    if profile[0] != 0:
        raise InvalidParameterError("h[0] must be 0")
    if L % 2 == 1 and profile[L + 1] != 0:
        raise InvalidParameterError("h[L+1] must be 0")
    if (np.abs(np.diff(profile)) != 1).any():
        raise InvalidParameterError("neighbour height steps must be exactly 1")
    if ((profile - np.arange(L + 2)) % 2 != 0).any():
        raise InvalidParameterError("height parity must match site parity")
    if mode == "reflecting" and (profile < 0).any():
        raise InvalidParameterError("reflecting profiles must be nonnegative")
