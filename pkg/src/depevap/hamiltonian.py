"""Frustration-free parent Hamiltonian of the absorbing colored state.

The Hamiltonian is a sum of local terms: boundary-row and boundary-column
pin projectors, below-horizon projectors adjacent to the initial/final
rows, a diagonal Gauss penalty per vertex, per-vertex color-validity
projectors, and the update projectors that pin the local superposition
ratios to the dynamics.

Update projectors act on a 14-site window around one deformable
plaquette (i, t): the site's height value h~_i(t) can be toggled between
two values separated by 2, relabelling its two adjacent update vertices
(below and above) and changing the no-change probabilities of the two
spatial-neighbour vertices (left and right).  The window holds 12 spins
(4 around the plaquette, 2 below, 2 above, 2 on each side) and the 2
color qutrits of the site's own vertices.  Within a window instance,
classified by the endpoint pattern k (1: equal endpoints, deformation
between a spike and a flat; 2: rising endpoints, early versus late rise;
3: falling endpoints, late versus early fall), the side pattern S, and
the color c, the two branches carry relative weights

    w(v) = P_down * P_up * P_left * P_right

with each factor the single-vertex event probability implied by the
branch's center value v.  The falling-spike case (equal endpoints with a
dip between) is deliberately not deformable: that is what disconnects
below-horizon histories and lets local terms pin h >= 0.

All terms are built in the absorbing normalization; the reflecting state
is not the kernel of any local term set (its Peak-at-1 rule is height
dependent, hence nonlocal in the spins), and requesting it raises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .codec import (
    DOWN,
    UP,
    LatticeConfig,
    canonical_key,
    spin_endpoints,
    spin_sites,
    vertex_sites,
    vertex_spin_indices,
    _unpack_bits,
    _unpack_codes,
    _pack_bits,
    _pack_codes,
)
from .errors import CapacityError, InvalidParameterError, NoDeformationError, UnsupportedModeError
from .exact import SparseState, _history_to_heights
from .params import ModelParams
from .surface import horizon_profile

# 4-spin vertex patterns, in (ll, lu, rl, ru) order
DEPOSIT_PATTERN = (1, 1, 1, 1)
EVAPORATE_PATTERN = (0, 0, 0, 0)
NO_CHANGE_PATTERNS = ((1, 0, 1, 0), (0, 1, 0, 1), (0, 1, 1, 0), (1, 0, 0, 1))


@dataclass(frozen=True)
class LocalTerm:
    kind: str
    support: tuple
    weight: float
    states: tuple          # active local configurations, one per matrix index
    matrix: np.ndarray     # symmetric real, over `states`
    meta: dict = field(default_factory=dict)

    @property
    def state_index(self):
        idx = self.meta.get("_index")
        if idx is None:
            idx = {s: k for k, s in enumerate(self.states)}
            self.meta["_index"] = idx
        return idx


@dataclass(frozen=True)
class DeformationState:
    """Two-branch local superposition pinned by the update rules."""

    k: int
    c: int | None          # 1/2, or None for the uncolored variant
    S: tuple               # (left, right) outer-neighbour directions, each +-1
    states: tuple          # window configurations of the branches
    coeffs: tuple          # branch amplitudes (unnormalized)
    norm_exact: float      # <D|D>
    norm_printed: float    # w_hi + w_lo, the textbook normalizer


def single_vertex_probability(shape_class: str, p: float) -> float:
    """Event probability of one vertex, by local shape and outcome."""
    table = {
        "valley_no_change": 1 - p / 2,
        "deposit": p / 2,
        "peak_no_change": (1 + p) / 2,
        "evaporate": (1 - p) / 2,
        "slope": 1.0,
    }
    if shape_class not in table:
        raise InvalidParameterError(f"unknown shape class {shape_class!r}")
    return table[shape_class]


def _endpoint_pattern(k):
    if k == 1:
        return -1, -1
    if k == 2:
        return -1, +1
    if k == 3:
        return +1, -1
    raise InvalidParameterError(f"deformation case k must be 1, 2 or 3, got {k}")


def _branch_weight(v, e_down, e_up, s_left, s_right, p):
    """w(v) = P_down * P_up * P_left * P_right for center value v (+-1)."""
    def vertical(e_from, e_to):
        if e_from == -1:  # site below its neighbours: valley
            return single_vertex_probability("deposit" if e_to == +1 else "valley_no_change", p)
        return single_vertex_probability("evaporate" if e_to == -1 else "peak_no_change", p)

    def side(delta):
        if delta == v == +1:
            return single_vertex_probability("valley_no_change", p)
        if delta == v == -1:
            return single_vertex_probability("peak_no_change", p)
        return single_vertex_probability("slope", p)

    return vertical(e_down, v) * vertical(v, e_up) * side(s_left) * side(s_right)


def _window_support(i, t):
    """Window sites of plaquette (i, t): 12 spins then the 2 own qutrits."""
    spins = [
        ("s", i - 1, t - 2), ("s", i, t - 2),                    # bottom pair
        ("s", i - 1, t - 1), ("s", i, t - 1),                    # center lower
        ("s", i - 1, t), ("s", i, t),                            # center upper
        ("s", i - 1, t + 1), ("s", i, t + 1),                    # top pair
        ("s", i - 2, t - 1), ("s", i - 2, t),                    # left outer
        ("s", i + 1, t - 1), ("s", i + 1, t),                    # right outer
    ]
    return tuple(spins), (("c", i, t - 1), ("c", i, t + 1))


def _window_spin_bits(k, S, v):
    """The 12 window spin bits for branch center value v."""
    e_down, e_up = _endpoint_pattern(k)
    s_left, s_right = S
    bot = (1 - e_down) // 2
    top = (1 + e_up) // 2
    lo_bit = (1 + v) // 2
    s1 = (1 + s_left) // 2
    s4 = (1 + s_right) // 2
    return (
        bot, bot,
        lo_bit, lo_bit,
        1 - lo_bit, 1 - lo_bit,
        top, top,
        s1, 1 - s1,
        s4, 1 - s4,
    )


def build_deformation_state(k, c, S, p, local_heights=None) -> DeformationState:
    """The two-branch superposition for case k, color c and side pattern S.

    `local_heights`, when given as the (h_before, h_after) endpoint pair
    of the site's two-slice window, must match case k.  Weights follow
    the product of the four adjacent vertex probabilities; for the
    colored spike case (k=1) the upper branch carries the extra 1/2 of
    its single free color choice.
    """
    if S[0] not in (-1, 1) or S[1] not in (-1, 1):
        raise InvalidParameterError(f"S must be a pair of +-1, got {S!r}")
    e_down, e_up = _endpoint_pattern(k)
    if local_heights is not None:
        h0, h1 = local_heights
        if h1 - h0 != e_up - e_down:
            raise NoDeformationError(f"case k={k} incompatible with endpoint heights {local_heights}")
        if min(h0, h1) < 0:
            raise NoDeformationError("deformation window sits below h = 0")
    w_hi = _branch_weight(+1, e_down, e_up, S[0], S[1], p)
    w_lo = _branch_weight(-1, e_down, e_up, S[0], S[1], p)
    hi_spins = _window_spin_bits(k, S, +1)
    lo_spins = _window_spin_bits(k, S, -1)
    if c is None:
        states = (hi_spins, lo_spins)
        coeffs = (math.sqrt(w_hi), math.sqrt(w_lo))
    else:
        if c not in (1, 2):
            raise InvalidParameterError(f"color must be 1 or 2, got {c!r}")
        qd_hi, qu_hi, qd_lo, qu_lo = {
            1: (c, c, 0, 0),    # spike: deposit below, matching evaporation above
            2: (c, 0, 0, c),    # rise: deposit below (early) or above (late)
            3: (0, c, c, 0),    # fall: evaporation above (late) or below (early)
        }[k]
        states = (hi_spins + (qd_hi, qu_hi), lo_spins + (qd_lo, qu_lo))
        color_split = 0.5 if k == 1 else 1.0
        coeffs = (math.sqrt(w_hi * color_split), math.sqrt(w_lo))
    norm_exact = coeffs[0] ** 2 + coeffs[1] ** 2
    return DeformationState(k=k, c=c, S=tuple(S), states=states, coeffs=coeffs,
                            norm_exact=norm_exact, norm_printed=w_hi + w_lo)


def build_update_projector(i, t, k, c, S, p) -> LocalTerm:
    """Pi = I_sub - |D><D| / <D|D> on the window of plaquette (i, t).

    I_sub spans the per-vertex-valid window states of this (k, c, S)
    instance; for k=1 that includes the cross-color evaporation states
    (deposit c, evaporation c'), which is what gives mismatched colorings
    their energy.  With <D|D> = 0 (degenerate p) the projector is I_sub.
    """
    d = build_deformation_state(k, c, S, p)
    spins, qutrits = _window_support(i, t)
    support = spins + (qutrits if c is not None else ())
    states = list(d.states)
    coeffs = list(d.coeffs)
    if c is not None and k == 1:
        other = 2 if c == 1 else 1
        hi_spins = states[0][:12]
        states.insert(1, hi_spins + (c, other))
        coeffs.insert(1, 0.0)
    vec = np.array(coeffs)
    eye = np.eye(len(states))
    if d.norm_exact > 0:
        matrix = eye - np.outer(vec, vec) / d.norm_exact
    else:
        matrix = eye
    return LocalTerm(kind="update", support=support, weight=1.0,
                     states=tuple(states), matrix=matrix,
                     meta={"i": i, "t": t, "k": k, "c": c, "S": tuple(S),
                           "norm_exact": d.norm_exact, "norm_printed": d.norm_printed})


def _pin_term(kind, site, bad_value, weight):
    return LocalTerm(kind=kind, support=(site,), weight=weight,
                     states=((bad_value,),), matrix=np.array([[1.0]]))


def build_boundary_terms(params: ModelParams):
    """Initial/final row pins plus below-horizon projectors, and column pins.

    The below-horizon projectors put energy on an evaporation at any
    first-row odd-site vertex (the site would fall from 1 to -1) and on a
    deposition at any last-row odd-site vertex (the site would have been
    below the horizon); dips elsewhere deform into these under the update
    terms.
    """
    params.require_odd_L()
    L = params.L
    w = 1.0 / L
    terms = []
    for x in range(L + 1):
        terms.append(_pin_term("initial", ("s", x, 0), 0, w))
    for i in range(1, L + 1, 2):
        support = tuple(("s",) + s for s in vertex_spin_indices(i, 2))
        terms.append(LocalTerm(kind="initial", support=support, weight=w,
                               states=(EVAPORATE_PATTERN,), matrix=np.array([[1.0]]),
                               meta={"vertex": (i, 2)}))
    for x in range(L + 1):
        terms.append(_pin_term("final", ("s", x, L), 1, w))
    for i in range(1, L + 1, 2):
        support = tuple(("s",) + s for s in vertex_spin_indices(i, L - 1))
        terms.append(LocalTerm(kind="final", support=support, weight=w,
                               states=(DEPOSIT_PATTERN,), matrix=np.array([[1.0]]),
                               meta={"vertex": (i, L - 1)}))
    for y in range(L + 1):
        good = 1 if y % 2 == 0 else 0
        terms.append(_pin_term("left", ("s", 0, y), 1 - good, w))
        terms.append(_pin_term("right", ("s", L, y), 1 - good, w))
    return terms


def build_gauss_term(params: ModelParams):
    """Diagonal penalty (left pair sum - right pair sum)^2 per vertex."""
    params.require_odd_L()
    terms = []
    for v in vertex_sites(params.L):
        support = tuple(("s",) + s for s in vertex_spin_indices(*v))
        states = []
        diag = []
        for bits in np.ndindex(2, 2, 2, 2):
            ll, lu, rl, ru = (int(b) for b in bits)
            res = (2 * ll - 1) + (2 * lu - 1) - (2 * rl - 1) - (2 * ru - 1)
            if res != 0:  # res is twice the spin-unit residual; penalty is its square
                states.append((ll, lu, rl, ru))
                diag.append(float(res * res) / 4)
        terms.append(LocalTerm(kind="gauss", support=support, weight=1.0,
                               states=tuple(states), matrix=np.diag(diag),
                               meta={"vertex": v}))
    return terms


def build_color_term(params: ModelParams):
    """Penalize change vertices colored 0 and no-change vertices colored r/g."""
    params.require_odd_L()
    if not params.colored:
        return []
    terms = []
    for v in vertex_sites(params.L):
        support = tuple(("s",) + s for s in vertex_spin_indices(*v)) + (("c",) + v,)
        states = [DEPOSIT_PATTERN + (0,), EVAPORATE_PATTERN + (0,)]
        for pattern in NO_CHANGE_PATTERNS:
            for c in (1, 2):
                states.append(pattern + (c,))
        terms.append(LocalTerm(kind="color", support=support, weight=1.0,
                               states=tuple(states), matrix=np.eye(len(states)),
                               meta={"vertex": v}))
    return terms


def update_plaquettes(L):
    return [(i, t) for t in range(2, L) for i in range(2, L) if (i + t) % 2 == 0]


def assemble_hamiltonian(params: ModelParams):
    """All local terms of the parent Hamiltonian (absorbing mode only)."""
    params.require_odd_L()
    if params.boundary_mode != "absorbing":
        raise UnsupportedModeError(
            "only the absorbing state has a local parent Hamiltonian; "
            "the reflecting Peak-at-1 rule depends on the absolute height")
    terms = []
    terms += build_boundary_terms(params)
    terms += build_gauss_term(params)
    terms += build_color_term(params)
    colors = (1, 2) if params.colored else (None,)
    for (i, t) in update_plaquettes(params.L):
        for k in (1, 2, 3):
            for s_left in (-1, 1):
                for s_right in (-1, 1):
                    for c in colors:
                        terms.append(build_update_projector(i, t, k, c, (s_left, s_right), params.p))
    return terms


# ---------------------------------------------------------------------------
# sparse application over canonical keys


def site_order(params: ModelParams):
    sites = [("s",) + s for s in spin_sites(params.L)]
    if params.colored:
        sites += [("c",) + v for v in vertex_sites(params.L)]
    return sites


def _key_to_values(key, params):
    L = params.L
    n_spins = (L + 1) ** 2
    spin_bytes = (n_spins + 7) // 8
    values = _unpack_bits(key[:spin_bytes], n_spins)
    if params.colored:
        n_verts = (L * L - 1) // 2
        values += _unpack_codes(key[spin_bytes:], n_verts)
    return values


def _values_to_key(values, params):
    n_spins = (params.L + 1) ** 2
    key = _pack_bits(values[:n_spins])
    if params.colored:
        key += _pack_codes(values[n_spins:])
    return key


def _support_indices(term, index_of):
    cached = term.meta.get("_support_idx")
    if cached is None:
        cached = [index_of[s] for s in term.support]
        term.meta["_support_idx"] = cached
    return cached


def apply_operator(terms, state: SparseState):
    """H |psi> as an unnormalized key -> coefficient map."""
    params = state.params
    index_of = {s: k for k, s in enumerate(site_order(params))}
    out = {}
    decoded = {key: _key_to_values(key, params) for key in state.amplitudes}
    for term in terms:
        idx = _support_indices(term, index_of)
        lookup = term.state_index
        for key, amp in state.amplitudes.items():
            values = decoded[key]
            window = tuple(values[j] for j in idx)
            r = lookup.get(window)
            if r is None:
                continue
            col = term.matrix[:, r]
            for r2 in np.nonzero(col)[0]:
                coeff = term.weight * col[r2] * amp
                if r2 == r:
                    out[key] = out.get(key, 0.0) + coeff
                else:
                    new_values = list(values)
                    for j, val in zip(idx, term.states[r2]):
                        new_values[j] = val
                    key2 = _values_to_key(new_values, params)
                    out[key2] = out.get(key2, 0.0) + coeff
    return out


def expectation(terms, state: SparseState) -> float:
    out = apply_operator(terms, state)
    return math.fsum(state.amplitudes.get(k, 0.0) * v for k, v in out.items())


def term_residuals(terms, state: SparseState):
    """||T_j |psi>|| per term."""
    residuals = []
    for term in terms:
        out = apply_operator([term], state)
        residuals.append(math.sqrt(math.fsum(v * v for v in out.values())))
    return residuals


# ---------------------------------------------------------------------------
# restricted-sector spectrum


def sector_keys(params: ModelParams, max_states: int = 200_000):
    """Canonical keys of the Gauss + boundary + per-vertex-color-valid sector.

    Enumerates all bridge height histories (dips below the horizon
    included; they are legal spin configurations) and, for colored
    params, all independent color assignments on change vertices,
    mismatched ones included.
    """
    params.require_odd_L()
    L = params.L
    horizon = tuple(int(h) for h in horizon_profile(L))
    histories = []

    def remaining(i, t):
        first = t + 1 if (i + t + 1) % 2 == 1 else t + 2
        return 0 if first > L else (L - first) // 2 + 1

    def rec(prof, t, hist):
        if t > L:
            if tuple(prof) == horizon:
                histories.append(list(hist))
            return
        sites = [i for i in range(2, L) if (i + t) % 2 == 1]
        moves = []
        for i in sites:
            lo = max(prof[i - 1], prof[i + 1]) - 1
            hi = min(prof[i - 1], prof[i + 1]) + 1
            moves.append(sorted({lo, hi, prof[i]} & {prof[i] - 2, prof[i], prof[i] + 2}))

        def walk(k, acc):
            if k == len(sites):
                tup = tuple(acc)
                for i in range(2, L):
                    if abs(tup[i] - horizon[i]) > 2 * remaining(i, t):
                        return
                hist.append(tup)
                rec(tup, t + 1, hist)
                hist.pop()
                return
            i = sites[k]
            for v in moves[k]:
                acc[i] = v
                walk(k + 1, acc)
            acc[i] = prof[i]

        walk(0, list(prof))

    rec(list(horizon), 1, [horizon])
    keys = []
    for hist in histories:
        H = _history_to_heights(L, hist)
        traj_events = {}
        change_vertices = []
        for t in range(1, L + 1):
            for i in range(1, L + 1):
                if (i + t) % 2 != 1:
                    continue
                before, after = int(H[t - 1][i]), int(H[t + 1][i])
                if after > before:
                    kind = "deposit"
                elif after < before:
                    kind = "evaporate"
                else:
                    kind = "no_change"
                traj_events[(i, t)] = kind
                if kind != "no_change":
                    change_vertices.append((i, t))
        config = LatticeConfig(L=L, colored=params.colored)
        for (x, y) in spin_sites(L):
            (i0, t0), (i1, t1) = spin_endpoints(x, y)
            d = int(H[t1][i1]) - int(H[t0][i0])
            config.spins[(x, y)] = UP if d == 1 else DOWN
        if not params.colored:
            keys.append(canonical_key(config))
            continue
        n_change = len(change_vertices)
        if len(keys) + 2 ** n_change > max_states:
            raise CapacityError(f"sector exceeds {max_states} states")
        for assignment in np.ndindex(*([2] * n_change)):
            for v in vertex_sites(L):
                config.colors[v] = 0
            for v, a in zip(change_vertices, assignment):
                config.colors[v] = 1 + a
            keys.append(canonical_key(config))
    if len(keys) > max_states:
        raise CapacityError(f"sector exceeds {max_states} states")
    return sorted(keys)


def sector_matrix(terms, keys, params: ModelParams) -> np.ndarray:
    """Dense H restricted to the sector basis (closed under every term)."""
    index_of = {s: k for k, s in enumerate(site_order(params))}
    key_index = {key: n for n, key in enumerate(keys)}
    n = len(keys)
    H = np.zeros((n, n))
    decoded = [_key_to_values(key, params) for key in keys]
    for term in terms:
        idx = _support_indices(term, index_of)
        lookup = term.state_index
        for a in range(n):
            values = decoded[a]
            window = tuple(values[j] for j in idx)
            r = lookup.get(window)
            if r is None:
                continue
            col = term.matrix[:, r]
            for r2 in np.nonzero(col)[0]:
                if r2 == r:
                    H[a, a] += term.weight * col[r2]
                    continue
                new_values = list(values)
                for j, val in zip(idx, term.states[r2]):
                    new_values[j] = val
                key2 = _values_to_key(new_values, params)
                b = key_index.get(key2)
                if b is None:
                    raise AssertionError("sector basis is not closed under a term")
                H[b, a] += term.weight * col[r2]
    return H


def sector_spectrum(terms, params: ModelParams, k: int, return_vectors=False,
                    max_states: int = 200_000):
    """Lowest-k eigenvalues of H in the constrained sector, ascending.

    Uses a Lanczos eigensolver (full reorthogonalization) with a fixed
    deterministic start vector; falls back to dense diagonalization when
    k is not well below the sector dimension.
    """
    keys = sector_keys(params, max_states=max_states)
    H = sector_matrix(terms, keys, params)
    n = H.shape[0]
    if k >= n - 1 or n < 8:
        vals, vecs = np.linalg.eigh(H)
        vals, vecs = vals[:k], vecs[:, :k]
    else:
        from scipy.sparse.linalg import eigsh
        v0 = np.full(n, 1.0 / math.sqrt(n))
        vals, vecs = eigsh(H, k=k, which="SA", v0=v0)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    if return_vectors:
        return list(map(float, vals)), vecs, keys
    return list(map(float, vals))


# ---------------------------------------------------------------------------
# export


def export_terms_text(terms) -> str:
    """Documented text dump: kind, weight, support, states, matrix rows, norms."""
    lines = []
    for n, term in enumerate(terms):
        meta = {k: v for k, v in term.meta.items() if not k.startswith("_")}
        lines.append(f"term {n} kind={term.kind} weight={term.weight!r} meta={meta}")
        lines.append("  support " + " ".join("/".join(map(str, s)) for s in term.support))
        for state, row in zip(term.states, term.matrix):
            entries = " ".join(repr(float(x)) for x in row)
            lines.append("  state " + "".join(map(str, state)) + " row " + entries)
    return "\n".join(lines) + "\n"
