"""Stack-emitter sequential generation of the reflecting colored state.

The emitter holds one stack per surface site.  Stack i records site i's
height (the marker position; markers on even sites are E, on odd sites
F, and never leave their stack) and the colors of the deposited,
not-yet-evaporated block pairs beneath the marker, most recent on top.
Odd rounds update the E stacks (even sites), even rounds the F stacks
(odd interior sites) plus the deterministic boundary emissions; round n
radiates the L+1 spin qubits of lattice spin row n and the color
qutrits of vertex row n.

Per eligible site the channel branches mirror the classical event table:

    valley   deposit(c)  amp sqrt(p/4) each color   emits up,up    c
             no change   amp sqrt(1-p/2)            emits dn,dn    0
    peak     evaporate   amp sqrt((1-p)/2)          emits dn,dn    pair color
             no change   amp sqrt((1+p)/2)          emits up,up    0
    peak with no pairs beneath (surface at the horizon): no change,
             amplitude 1, emits up,up and color 0 (the reflecting rule)
    slopes   no change   amp 1, emits the height-difference pair, 0

Every column of a channel restricted to its reachable domain has unit
norm, so each round is an isometry and the joint state stays normalized
until the final projection onto the reference emitter, whose squared
weight is the post-selection success probability.

The optional cooling phase reruns the later rounds (after ceil(L/2))
with p = 0 and the deposition branches removed; no extra rounds or
registers are introduced, and the post-selection success grows because
every peak then drains with amplitude sqrt(1/2) per round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .codec import LatticeConfig, canonical_key, spin_sites, vertex_sites
from .errors import CapacityError, InvalidParameterError, UnsupportedModeError
from .exact import SparseState
from .params import ModelParams

MAX_BRANCHES = 2_000_000


@dataclass(frozen=True)
class EmitterConfig:
    """Stacks as a tuple over sites 1..L of (height, pair colors bottom-up)."""

    L: int
    stacks: tuple

    def marker(self, i):
        return "E" if i % 2 == 0 else "F"

    def to_bytes(self) -> bytes:
        out = bytearray([self.L])
        for h, blocks in self.stacks:
            out.append(h)
            out.append(len(blocks))
            out.extend(blocks)
        return bytes(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "EmitterConfig":
        L = data[0]
        stacks = []
        pos = 1
        for _ in range(L):
            h = data[pos]
            n = data[pos + 1]
            blocks = tuple(data[pos + 2:pos + 2 + n])
            stacks.append((h, blocks))
            pos += 2 + n
        if pos != len(data):
            raise InvalidParameterError("trailing bytes in emitter serialization")
        return cls(L=L, stacks=tuple(stacks))


def init_emitter(L: int) -> EmitterConfig:
    """Markers at horizon positions, no deposited pairs."""
    if L % 2 == 0 or L < 3:
        raise InvalidParameterError(f"the emitter needs odd L >= 3, got {L}")
    return EmitterConfig(L=L, stacks=tuple((i % 2, ()) for i in range(1, L + 1)))


def channel_branches(dh_left, dh_right, top_color, p, colored, cooling=False):
    """Branches of one local channel: (height delta, stack op, spins, color, amp).

    `top_color` is the color of the most recent pair beneath the marker,
    or None when the marker rests at the horizon.  Spins are the emitted
    (left, right) qubits of the site's vertex.
    """
    if cooling:
        p = 0.0
    if dh_left == -1 and dh_right == -1:  # valley
        branches = []
        if not cooling:
            if colored:
                branches += [(+2, ("push", c), (1, 1), c, math.sqrt(p / 4)) for c in (1, 2)]
            else:
                branches += [(+2, ("push", 1), (1, 1), 1, math.sqrt(p / 2))]
        branches.append((0, ("none",), (0, 0), 0, math.sqrt(1 - p / 2)))
        return branches
    if dh_left == 1 and dh_right == 1:  # peak
        if top_color is None:  # marker at the horizon: height cannot decrease
            return [(0, ("none",), (1, 1), 0, 1.0)]
        return [
            (-2, ("pop",), (0, 0), top_color, math.sqrt((1 - p) / 2)),
            (0, ("none",), (1, 1), 0, math.sqrt((1 + p) / 2)),
        ]
    if dh_left == 1 and dh_right == -1:
        return [(0, ("none",), (1, 0), 0, 1.0)]
    if dh_left == -1 and dh_right == 1:
        return [(0, ("none",), (0, 1), 0, 1.0)]
    raise InvalidParameterError(f"illegal height differences ({dh_left}, {dh_right})")


def local_channel(marker, j, p, colored=True, cooling=False):
    """Matrix elements of one stack-update isometry over its reachable domain.

    Returned as {in_label: [(stack op, emitted spins, emitted color, amplitude)]}
    with in_label one of ("valley",), ("peak", pair color or None),
    ("slope_up",), ("slope_down",).  The elements do not depend on the
    marker symbol or the stack position j; both are accepted to mirror
    the per-site operator layout.
    """
    if marker not in ("E", "F"):
        raise InvalidParameterError(f"marker must be 'E' or 'F', got {marker!r}")
    table = {}
    top_colors = (1, 2, None) if colored else (1, None)
    for tc in top_colors:
        table[("peak", tc)] = [
            (op, spins, color, amp)
            for _, op, spins, color, amp in channel_branches(1, 1, tc, p, colored, cooling)
        ]
    table[("valley",)] = [
        (op, spins, color, amp)
        for _, op, spins, color, amp in channel_branches(-1, -1, None, p, colored, cooling)
    ]
    table[("slope_up",)] = [
        (op, spins, color, amp)
        for _, op, spins, color, amp in channel_branches(1, -1, None, p, colored, cooling)
    ]
    table[("slope_down",)] = [
        (op, spins, color, amp)
        for _, op, spins, color, amp in channel_branches(-1, 1, None, p, colored, cooling)
    ]
    return table


def boundary_channels(p):
    """U_b flips the outermost qubits; U_L/U_R radiate the height difference.

    Elements are unit-amplitude: {"U_b": ((0,0) -> (1,1)),
    "U_L": {height of site 2: emitted bit}, "U_R": {height of site L-1: bit}}.
    """
    return {
        "U_b": (((0, 0), (1, 1), 1.0),),
        "U_L": ({0: 1, 2: 0}, 1.0),
        "U_R": ({0: 1, 2: 0}, 1.0),
    }


def _round_sites(L, n):
    """Interior sites updated in round n (even sites for odd n)."""
    want = 0 if n % 2 == 1 else 1
    return [i for i in range(2, L) if i % 2 == want]


def cooling_start(L: int) -> int:
    """Rounds after this index run the evaporation-only channels."""
    return (L + 1) // 2


def apply_round(joint, n, p, params: ModelParams, cooling_active=False,
                max_branches=MAX_BRANCHES):
    """One round of local channels on every branch of the joint state.

    Branch keys are (stacks, record) tuples; records grow by one
    (spin row, color row) pair.  Norm is conserved exactly because the
    channels are isometries on the reachable domain.
    """
    L = params.L
    out = {}
    for (stacks, record), amp in joint.items():
        heights = [0] + [s[0] for s in stacks] + [0]
        sites = _round_sites(L, n)
        per_site = []
        for i in sites:
            dh_l = heights[i] - heights[i - 1]
            dh_r = heights[i] - heights[i + 1]
            blocks = stacks[i - 1][1]
            top = blocks[-1] if blocks else None
            per_site.append(channel_branches(dh_l, dh_r, top, p, params.colored,
                                             cooling=cooling_active))
        vertex_cols = [i for i in range(1, L + 1) if (i + n) % 2 == 1]

        def emit(k, cur_stacks, row, colors, a):
            if k == len(sites):
                if n % 2 == 0:  # boundary emissions of the F rounds
                    row[0] = 1
                    row[L] = 1
                    row[1] = 1 if heights[2] == 0 else 0
                    row[L - 1] = 1 if heights[L - 1] == 0 else 0
                key = (tuple(cur_stacks), record + ((tuple(row), tuple(colors)),))
                if key in out:
                    raise AssertionError("two distinct branches emitted the same record")
                out[key] = a
                return
            i = sites[k]
            h, blocks = cur_stacks[i - 1]
            for delta, op, spins, color, branch_amp in per_site[k]:
                if branch_amp == 0.0:
                    continue
                if op[0] == "push":
                    new_stack = (h + 2, blocks + (op[1],))
                elif op[0] == "pop":
                    new_stack = (h - 2, blocks[:-1])
                else:
                    new_stack = (h, blocks)
                if new_stack[0] > L + 2:
                    raise CapacityError(f"stack {i} overflowed its L+2 depth cap")
                cur_stacks[i - 1] = new_stack
                row[i - 1], row[i] = spins
                colors[vertex_cols.index(i)] = color
                emit(k + 1, cur_stacks, row, colors, a * branch_amp)
            cur_stacks[i - 1] = (h, blocks)

        emit(0, list(stacks), [0] * (L + 1), [0] * len(vertex_cols), amp)
        if len(out) > max_branches:
            raise CapacityError(f"joint state exceeded {max_branches} branches")
    return out


def run_generation(params: ModelParams, cooling=False, max_branches=MAX_BRANCHES):
    """Run L rounds, post-select the reference emitter, and re-key the record.

    Returns (state, success_probability); the state lives on the same
    canonical keys as the exact construction, with the pinned bottom spin
    row prepended.  Only the reflecting target is generable with finite
    stacks.
    """
    params.require_odd_L()
    if params.boundary_mode != "reflecting":
        raise UnsupportedModeError("generation targets the reflecting state; "
                                   "the absorbing one needs unbounded stacks")
    L = params.L
    reference = init_emitter(L).stacks
    joint = {(reference, ()): 1.0}
    start = cooling_start(L)
    for n in range(1, L + 1):
        active = cooling and n > start
        joint = apply_round(joint, n, params.p, params, cooling_active=active,
                            max_branches=max_branches)
        norm = math.fsum(a * a for a in joint.values())
        if abs(norm - 1.0) > 1e-12:
            raise AssertionError(f"round {n} broke norm conservation: {norm!r}")
    kept = {rec: amp for (stacks, rec), amp in joint.items() if stacks == reference}
    success = math.fsum(a * a for a in kept.values())
    if success <= 0:
        raise InvalidParameterError("post-selection removed every branch")
    scale = 1.0 / math.sqrt(success)
    amplitudes = {}
    for rec, amp in kept.items():
        key = canonical_key(_record_to_config(rec, params))
        if key in amplitudes:
            raise AssertionError("two records mapped to one canonical key")
        amplitudes[key] = amp * scale
    return SparseState(amplitudes=amplitudes, params=params), success


def _record_to_config(record, params: ModelParams) -> LatticeConfig:
    """Emitted rows plus the fixed initial spin row, as a lattice config."""
    L = params.L
    config = LatticeConfig(L=L, colored=params.colored)
    for x in range(L + 1):
        config.spins[(x, 0)] = 1
    for n, (row, colors) in enumerate(record, start=1):
        for x in range(L + 1):
            config.spins[(x, n)] = row[x]
        cols = [i for i in range(1, L + 1) if (i + n) % 2 == 1]
        if params.colored:
            for i, c in zip(cols, colors):
                config.colors[(i, n)] = c
    return config


def fidelity(a: SparseState, b: SparseState) -> float:
    """(sum_k a_k b_k)^2 for normalized nonnegative states on one key space."""
    if a.params.L != b.params.L or a.params.colored != b.params.colored:
        raise InvalidParameterError("states live on different key spaces")
    overlap = math.fsum(amp * b.amplitudes.get(key, 0.0)
                        for key, amp in a.amplitudes.items())
    return overlap * overlap
