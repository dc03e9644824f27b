"""Dynamic-programming reference for tiny state spaces.

The belief simplex over ``N + 1`` states (``N`` pixels plus out-of-image) is
discretised to all compositions of ``R`` into ``N + 1`` parts. The optimal
stopping value

    V(x) = min( C(x) + sum_y P(y | x) V(x+(x, y)),  min_i S_i(x) )

is computed by value iteration, with off-grid updated beliefs evaluated by
piecewise-linear (Freudenthal / Kuhn) interpolation. Around the solution sit
numerical checks: stopping regions are convex and contain their vertex, the
greedy region lies inside the optimal one, the value function is concave,
and the greedy stopper's false-alarm rate respects ``c_m / (c_m + c2)``.

Observations here come from a normalised emission table rather than the
image likelihoods used by the main pipeline.
"""
import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import sparse

from .detection import CostModel
from .hmm_filter import BeliefState, TransitionModel, transition_matrix

MAX_PIXELS = 3
MIN_RESOLUTION = 20


class ObservationError(ValueError):
    """Observed symbol has zero probability under the predicted belief."""


@dataclass(frozen=True)
class DiscreteObservationModel:
    """Row-stochastic emission table ``P(y = m | state)``, shape ``(N+1, M)``."""

    emission: np.ndarray

    def __post_init__(self):
        e = np.array(self.emission, dtype=np.float64)
        if e.ndim != 2 or e.shape[1] < 1:
            raise ValueError(f"emission table must be 2-D with at least one symbol, got {e.shape}")
        if np.any(e < 0):
            raise ValueError("emission probabilities must be nonnegative")
        if np.any(np.abs(e.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("emission rows must sum to 1")
        e.setflags(write=False)
        object.__setattr__(self, "emission", e)

    @property
    def alphabet_size(self):
        return self.emission.shape[1]

    @property
    def n_states(self):
        return self.emission.shape[0]

    @classmethod
    def symmetric(cls, n_states, alphabet_size=None, correct=0.6):
        """State ``s`` emits symbol ``s mod M`` with prob ``correct``, others share the rest."""
        m = n_states if alphabet_size is None else alphabet_size
        if m < 2:
            raise ValueError("need at least two symbols")
        e = np.full((n_states, m), (1.0 - correct) / (m - 1))
        e[np.arange(n_states), np.arange(n_states) % m] = correct
        return cls(e)

    @classmethod
    def identity(cls, n_states):
        return cls(np.eye(n_states))


@dataclass(frozen=True)
class SimplexGrid:
    """All ``x`` with ``R * x`` a nonnegative integer vector summing to ``R``."""

    n_pixels: int
    resolution: int
    counts: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.n_pixels < 1:
            raise ValueError("n_pixels must be >= 1")
        if self.resolution < 1:
            raise ValueError("resolution must be >= 1")
        if self.counts is None:
            object.__setattr__(self, "counts", _compositions(self.resolution, self.n_pixels + 1))

    @property
    def points(self):
        return self.counts / self.resolution

    @property
    def size(self):
        return self.counts.shape[0]

    def expected_size(self):
        return comb(self.resolution + self.n_pixels, self.n_pixels)

    def vertex(self, state):
        c = np.zeros(self.n_pixels + 1, dtype=np.int64)
        c[state] = self.resolution
        return self.index_of(c)

    def index_of(self, counts):
        return int(self._lookup[tuple(_cumulative(np.asarray(counts)[None, :])[0])])

    @property
    def _lookup(self):
        lut = self.__dict__.get("_lut")
        if lut is None:
            r, n = self.resolution, self.n_pixels
            lut = np.full((r + 1,) * n, -1, dtype=np.int64)
            lut[tuple(_cumulative(self.counts).T)] = np.arange(self.size)
            object.__setattr__(self, "_lut", lut)
        return lut

    def nearest(self, x):
        """Grid index of the nearest point (largest-remainder rounding of ``R x``)."""
        x = np.asarray(x, dtype=np.float64)
        scaled = x * self.resolution
        base = np.floor(scaled).astype(np.int64)
        short = self.resolution - int(base.sum())
        if short > 0:
            order = np.argsort(-(scaled - base), kind="stable")
            base[order[:short]] += 1
        return self.index_of(base)

    def interpolation(self, x):
        """Vertex indices and weights of ``x`` inside its Freudenthal cell.

        ``x`` has shape ``(..., N+1)``; returns arrays of shape ``(..., N+1)``.
        """
        x = np.asarray(x, dtype=np.float64)
        r, n = self.resolution, self.n_pixels
        shape = x.shape[:-1]
        x = x.reshape(-1, n + 1)
        # z_j = R * sum_{k >= j} x_k for j = 1..N, a nonincreasing sequence in [0, R]
        z = r * np.cumsum(x[:, ::-1], axis=1)[:, ::-1][:, 1:]
        z = np.minimum.accumulate(np.clip(z, 0.0, r), axis=1)
        base = np.floor(z).astype(np.int64)
        frac = z - base
        order = np.argsort(-frac, axis=1, kind="stable")
        sorted_frac = np.take_along_axis(frac, order, axis=1)
        weights = np.empty((x.shape[0], n + 1))
        weights[:, 0] = 1.0 - sorted_frac[:, 0]
        weights[:, 1:n] = sorted_frac[:, :-1] - sorted_frac[:, 1:]
        weights[:, n] = sorted_frac[:, -1]
        verts = np.empty((x.shape[0], n + 1), dtype=np.int64)
        cur = base.copy()
        rows = np.arange(x.shape[0])
        verts[:, 0] = self._safe_lookup(cur)
        for k in range(n):
            cur[rows, order[:, k]] += 1
            verts[:, k + 1] = self._safe_lookup(cur)
        # vertices pushed off the grid only ever carry zero weight
        bad = verts < 0
        if np.any(weights[bad] > 1e-9):
            raise FloatingPointError("interpolation left the simplex")
        weights[bad] = 0.0
        verts[bad] = verts[:, :1].repeat(n + 1, axis=1)[bad]
        return verts.reshape(*shape, n + 1), weights.reshape(*shape, n + 1)

    def _safe_lookup(self, cum):
        r = self.resolution
        ok = np.all((cum >= 0) & (cum <= r), axis=1)
        ok &= np.all(np.diff(cum, axis=1) <= 0, axis=1)
        out = np.full(cum.shape[0], -1, dtype=np.int64)
        out[ok] = self._lookup[tuple(cum[ok].T)]
        return out

    def interpolate(self, values, x):
        verts, w = self.interpolation(x)
        return (np.asarray(values)[verts] * w).sum(axis=-1)


def _compositions(total, parts):
    """Integer vectors of length ``parts`` with nonnegative entries summing to ``total``."""
    rows = []
    for cut in itertools.combinations(range(total + parts - 1), parts - 1):
        edges = (-1,) + cut + (total + parts - 1,)
        rows.append([edges[j + 1] - edges[j] - 1 for j in range(parts)])
    return np.array(rows, dtype=np.int64)


def _cumulative(counts):
    """Tail sums ``sum_{k >= j} counts_k`` for ``j = 1..N``."""
    return np.cumsum(counts[:, ::-1], axis=1)[:, ::-1][:, 1:]


# ----------------------------------------------------------------- dynamics


@dataclass(frozen=True)
class OracleModel:
    """Complete stopping problem on a ``width x height`` image."""

    tm: TransitionModel
    obs: DiscreteObservationModel
    cm: CostModel

    def __post_init__(self):
        n = self.cm.width * self.cm.height
        if n > MAX_PIXELS:
            raise ValueError(f"oracle supports at most {MAX_PIXELS} pixels, got {n}")
        if self.obs.n_states != n + 1:
            raise ValueError(f"emission table has {self.obs.n_states} rows, expected {n + 1}")

    @property
    def n_pixels(self):
        return self.cm.width * self.cm.height

    @property
    def matrix(self):
        a = self.__dict__.get("_a")
        if a is None:
            a = transition_matrix(self.tm, self.cm.width, self.cm.height)
            object.__setattr__(self, "_a", a)
        return a


def default_model(width=2, height=1, alphabet_size=3, correct=0.6, c2=9.0, delay=1.0, w=0.0,
                  tm=None):
    tm = TransitionModel.from_weights() if tm is None else tm
    n = width * height
    return OracleModel(tm, DiscreteObservationModel.symmetric(n + 1, alphabet_size, correct),
                       CostModel.uniform(width, height, delay=delay, c2=c2, w=w))


def belief_update(belief, tm, obs, y):
    """Exact Bayes step ``B(y) A x / <1, B(y) A x>`` with ``B(y)`` the emission column."""
    probs = belief.probs if isinstance(belief, BeliefState) else np.asarray(belief, float)
    w, h = (belief.width, belief.height) if isinstance(belief, BeliefState) else (probs.size - 1, 1)
    a = transition_matrix(tm, w, h)
    post = _update_probs(a, obs.emission, probs, y)
    return BeliefState(w, h, post)


def _update_probs(a, emission, probs, y):
    pred = a @ probs
    un = emission[:, y] * pred
    z = un.sum()
    if not z > 0:
        raise ObservationError(f"symbol {y} has zero probability under the predicted belief")
    return un / z


# ---------------------------------------------------------- value iteration


@dataclass
class ValueSolution:
    grid: SimplexGrid
    values: np.ndarray
    q_values: np.ndarray
    stop_costs: np.ndarray          # (points, N) S_i at every grid point
    continue_costs: np.ndarray      # C at every grid point
    stop_action: np.ndarray         # argmin_i S_i where stopping is optimal, else -1
    converged: bool
    sweeps: int
    deltas: list
    tol: float

    def stops(self):
        return self.stop_action >= 0

    def to_dict(self):
        return {
            "n_pixels": self.grid.n_pixels, "resolution": self.grid.resolution,
            "converged": self.converged, "sweeps": self.sweeps, "tol": self.tol,
            "final_delta": self.deltas[-1] if self.deltas else None,
            "points": self.grid.counts.tolist(),
            "values": self.values.tolist(), "q_values": self.q_values.tolist(),
            "stop_action": [None if a < 0 else int(a) for a in self.stop_action],
        }

    def to_csv(self):
        """One row per grid point: belief coordinates, V, Q and action."""
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        n = self.grid.n_pixels
        wr.writerow([f"x{j}" for j in range(n)] + ["x_out", "V", "Q", "action"])
        for pt, v, q, a in zip(self.grid.points, self.values, self.q_values, self.stop_action):
            wr.writerow([repr(float(p)) for p in pt] + [repr(float(v)), repr(float(q)),
                                                        "continue" if a < 0 else f"stop:{a}"])
        return buf.getvalue()


def _expectation_operators(grid, model):
    """Sparse interpolation matrices ``W_y`` and symbol probabilities ``P(y | x)`` per point."""
    a = model.matrix
    em = model.obs.emission
    pts = grid.points
    pred = pts @ a.T                                   # rows are A x
    mats, probs = [], []
    for y in range(model.obs.alphabet_size):
        un = pred * em[:, y]
        py = un.sum(axis=1)
        post = np.divide(un, py[:, None], out=np.zeros_like(pred), where=py[:, None] > 0)
        # zero-probability symbols get weight 0; route them to a harmless vertex
        post[py <= 0] = pts[py <= 0]
        verts, wts = grid.interpolation(post)
        rows = np.repeat(np.arange(grid.size), verts.shape[1])
        mats.append(sparse.csr_matrix((wts.ravel(), (rows, verts.ravel())),
                                      shape=(grid.size, grid.size)))
        probs.append(py)
    return mats, np.array(probs)


def value_iteration(grid, model, tol=1e-10, max_sweeps=20000):
    """Iterate the recursion from ``V = min_i S_i`` until the sup-norm change is below ``tol``."""
    if grid.n_pixels != model.n_pixels:
        raise ValueError("grid and model disagree on the number of pixels")
    if grid.n_pixels > MAX_PIXELS:
        raise ValueError(f"grid too large: N = {grid.n_pixels} > {MAX_PIXELS}")
    if grid.resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION}, got {grid.resolution}")
    return _solve(grid, model, tol, max_sweeps)


def _solve(grid, model, tol, max_sweeps):
    cm = model.cm
    pts = grid.points
    stop = np.array([cm.stop_costs(p) for p in pts])
    cont = pts @ cm.c_bar1
    s_bar = stop.min(axis=1)
    mats, py = _expectation_operators(grid, model)

    def q_of(v):
        exp = sum(p * (m @ v) for m, p in zip(mats, py))
        return cont + exp

    v = s_bar.copy()
    deltas = []
    converged = False
    for _ in range(max_sweeps):
        new = np.minimum(q_of(v), s_bar)
        deltas.append(float(np.max(np.abs(new - v))))
        v = new
        if deltas[-1] < tol:
            converged = True
            break
    q = q_of(v)
    action = np.where(s_bar <= q, np.argmin(stop, axis=1), -1)
    return ValueSolution(grid, v, q, stop, cont, action, converged, len(deltas), deltas, tol)


def solve_small(grid, model, tol=1e-10, max_sweeps=20000):
    """:func:`value_iteration` without the resolution floor, for quick coarse runs."""
    if grid.n_pixels > MAX_PIXELS:
        raise ValueError(f"grid too large: N = {grid.n_pixels} > {MAX_PIXELS}")
    return _solve(grid, model, tol, max_sweeps)


# ---------------------------------------------------------------- regions


def stopping_region(sol, i):
    """Grid indices where stopping at pixel ``i`` is no worse than continuing."""
    return np.flatnonzero(sol.stop_costs[:, i] <= sol.q_values)


def greedy_region(sol, i):
    return np.flatnonzero(sol.stop_costs[:, i] <= sol.continue_costs)


def check_convexity(region, grid, max_pairs=None, rng=None):
    """Discrete convexity with a one-cell tolerance.

    For each pair of region points the connecting segment is sampled at
    cell midpoints; a sample is fine if some region point lies within one
    grid step of it in every coordinate. Returns ``(a, b, sample)`` triples
    for the samples that fail, with ``a`` and ``b`` grid indices and
    ``sample`` in count units.
    """
    region = np.unique(np.asarray(region, dtype=np.int64))
    if region.size < 2:
        return []
    r, n = grid.resolution, grid.n_pixels
    member = np.zeros((r + 1,) * n, dtype=bool)
    cnt = grid.counts[region]
    member[tuple(cnt[:, :n].T)] = True

    ia, ib = np.triu_indices(region.size, k=1)
    if max_pairs is not None and ia.size > max_pairs:
        rng = np.random.default_rng(0) if rng is None else rng
        pick = rng.choice(ia.size, size=max_pairs, replace=False)
        ia, ib = ia[pick], ib[pick]

    offsets = np.array(list(itertools.product(range(-1, 3), repeat=n)), dtype=np.int64)
    violations = []
    chunk = 4096
    for s in range(0, ia.size, chunk):
        a = cnt[ia[s:s + chunk]].astype(np.float64)
        b = cnt[ib[s:s + chunk]].astype(np.float64)
        steps = np.maximum(np.abs(b - a).max(axis=1).astype(np.int64), 1)
        pair = np.repeat(np.arange(a.shape[0]), steps)
        j = np.arange(pair.size) - np.repeat(np.cumsum(steps) - steps, steps)
        t = ((j + 0.5) / np.repeat(steps, steps))[:, None]
        samp = a[pair] + t * (b[pair] - a[pair])
        ok = _near_member(member, samp, offsets, r, n)
        for p, smp in zip(pair[~ok], samp[~ok]):
            violations.append((int(region[ia[s + p]]), int(region[ib[s + p]]), smp.tolist()))
    return violations


def _near_member(member, samp, offsets, r, n):
    """Whether any member grid point lies within L-inf distance 1 of each sample."""
    base = np.floor(samp[:, :n]).astype(np.int64)
    found = np.zeros(samp.shape[0], dtype=bool)
    for off in offsets:
        g = base + off
        last = r - g.sum(axis=1)
        close = np.all(np.abs(g - samp[:, :n]) <= 1.0 + 1e-9, axis=1)
        close &= np.abs(last - samp[:, n]) <= 1.0 + 1e-9
        close &= np.all(g >= 0, axis=1) & (last >= 0)
        idx = np.flatnonzero(close & ~found)
        if idx.size:
            found[idx] = member[tuple(g[idx].T)]
    return found


def check_greedy_containment(sol, tol=1e-9):
    """Grid points in a greedy region ``S_i <= C`` but outside ``S_i <= Q``.

    Returns ``(point index, i)`` pairs.
    """
    greedy = sol.stop_costs <= sol.continue_costs[:, None]
    optimal = sol.stop_costs <= sol.q_values[:, None] + tol
    bad = np.argwhere(greedy & ~optimal)
    return [(int(p), int(i)) for p, i in bad]


def check_concavity(sol, pairs=10000, tol=None, seed=0):
    """Midpoint test ``V(mid) >= (V(a) + V(b)) / 2 - tol`` on random grid-point pairs.

    ``tol`` defaults to ``2 / R``. Returns ``(a, b, shortfall)`` for failures.
    """
    grid = sol.grid
    tol = 2.0 / grid.resolution if tol is None else tol
    rng = np.random.default_rng(seed)
    a = rng.integers(0, grid.size, pairs)
    b = rng.integers(0, grid.size, pairs)
    mid = 0.5 * (grid.points[a] + grid.points[b])
    vm = grid.interpolate(sol.values, mid)
    short = 0.5 * (sol.values[a] + sol.values[b]) - vm
    bad = np.flatnonzero(short > tol)
    return [(int(a[k]), int(b[k]), float(short[k])) for k in bad]


def check_vertices(sol):
    """Pixels ``i`` whose vertex ``e_i`` is missing from their own stopping region."""
    missing = []
    for i in range(sol.grid.n_pixels):
        if sol.grid.vertex(i) not in set(stopping_region(sol, i).tolist()):
            missing.append(i)
    return missing


def check_value_bounds(sol, tol=1e-9):
    """Points violating ``0 <= V <= min_i S_i`` or ``V = min(Q, min_i S_i)``."""
    s_bar = sol.stop_costs.min(axis=1)
    bad = (sol.values < -tol) | (sol.values > s_bar + tol)
    bad |= np.abs(sol.values - np.minimum(sol.q_values, s_bar)) > 1e-6 + sol.tol * 10
    return np.flatnonzero(bad).tolist()


# ------------------------------------------------------------- simulation


def _sample_categorical(rng, probs):
    """One draw per row of ``probs``."""
    u = rng.random(probs.shape[0])[:, None]
    return np.minimum((np.cumsum(probs, axis=1) < u).sum(axis=1), probs.shape[1] - 1)


def _run_batch(model, trials, seed, max_steps, stop_fn):
    """Simulate ``trials`` hidden chains with filtered beliefs until ``stop_fn`` fires.

    ``stop_fn(beliefs) -> bool mask`` is evaluated at every step including
    ``k = 0``. Returns stop steps (-1 if capped), true states at stopping,
    and the per-step belief history when requested by the caller.
    """
    a = model.matrix
    em = model.obs.emission
    n1 = a.shape[0]
    rng = np.random.default_rng(seed)
    prior = np.full(n1, 1.0 / n1)
    beliefs = np.tile(prior, (trials, 1))
    state = _sample_categorical(rng, beliefs)
    stop_k = np.full(trials, -1, dtype=np.int64)
    stop_state = np.full(trials, -1, dtype=np.int64)
    active = np.ones(trials, dtype=bool)
    for k in range(max_steps + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        hit = stop_fn(beliefs[idx])
        done = idx[hit]
        stop_k[done] = k
        stop_state[done] = state[done]
        active[done] = False
        if k == max_steps:
            break
        idx = np.flatnonzero(active)
        state[idx] = _sample_categorical(rng, a[:, state[idx]].T)
        y = _sample_categorical(rng, em[state[idx]])
        pred = beliefs[idx] @ a.T
        un = pred * em[:, y].T
        beliefs[idx] = un / un.sum(axis=1, keepdims=True)
    return stop_k, stop_state


@dataclass(frozen=True)
class PfaResult:
    pfa: float
    standard_error: float
    stopped: int
    capped: int
    bound: float

    def to_dict(self):
        return {"pfa": self.pfa, "standard_error": self.standard_error, "stopped": self.stopped,
                "capped": self.capped, "bound": self.bound}


def simulate_pfa(model, trials=10000, seed=0, max_steps=10000):
    """Monte Carlo false-alarm rate of the greedy stopper.

    Chains start from the uniform prior; the stopper declares at the first
    ``k >= 0`` whose belief enters any greedy region. Trials still running
    after ``max_steps`` are excluded and counted in ``capped``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cm = model.cm
    n = model.n_pixels

    def greedy(b):
        stop = np.array([cm.stop_costs(p) for p in b]) if cm.w else \
            np.repeat(cm.c2 * b[:, -1:], n, axis=1)
        return np.any(stop <= (b @ cm.c_bar1)[:, None], axis=1)

    stop_k, stop_state = _run_batch(model, trials, seed, max_steps, greedy)
    ok = stop_k >= 0
    m = int(ok.sum())
    if m == 0:
        return PfaResult(float("nan"), float("nan"), 0, trials, _bound(cm))
    fa = (stop_state[ok] == n).astype(np.float64)
    p = float(fa.mean())
    se = float(np.sqrt(p * (1.0 - p) / m))
    return PfaResult(p, se, m, trials - m, _bound(cm))


def _bound(cm):
    return cm.c_m / (cm.c_m + cm.c2)


def policy_member(sol, beliefs):
    """Union stopping-region membership of the grid point nearest each belief."""
    idx = np.array([sol.grid.nearest(b) for b in np.atleast_2d(beliefs)])
    return sol.stop_action[idx] >= 0


def simulate_policy(sol, model, trials=200, seed=0, max_steps=2000):
    """Run the grid policy and keep each trajectory's belief history.

    Returns a list of ``(beliefs, stop_k)`` with ``beliefs`` of shape
    ``(steps, N+1)``; ``stop_k`` is -1 when the cap was hit.
    """
    a = model.matrix
    em = model.obs.emission
    n1 = a.shape[0]
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        b = np.full(n1, 1.0 / n1)
        s = int(rng.choice(n1, p=b))
        hist = [b.copy()]
        stop_k = -1
        for k in range(max_steps + 1):
            if policy_member(sol, b)[0]:
                stop_k = k
                break
            if k == max_steps:
                break
            s = int(rng.choice(n1, p=a[:, s]))
            y = int(rng.choice(em.shape[1], p=em[s]))
            b = _update_probs(a, em, b, y)
            hist.append(b.copy())
        out.append((np.array(hist), stop_k))
    return out


def check_first_entry(sol, trajectories):
    """Trajectories whose stop step differs from their first region entry on replay."""
    bad = []
    for t, (hist, stop_k) in enumerate(trajectories):
        inside = np.flatnonzero(policy_member(sol, hist))
        first = int(inside[0]) if inside.size else -1
        if first != stop_k:
            bad.append(t)
    return bad


# ----------------------------------------------------------------- report


@dataclass
class OracleReport:
    solution: ValueSolution
    regions: dict
    convexity: dict
    containment: list
    concavity: list
    vertices_missing: list
    value_bound_violations: list
    pfa: PfaResult
    first_entry: list
    monotone_tail: bool

    @property
    def violations(self):
        return (sum(len(v) for v in self.convexity.values()) + len(self.containment)
                + len(self.concavity) + len(self.vertices_missing)
                + len(self.value_bound_violations) + len(self.first_entry)
                + (0 if self.monotone_tail else 1)
                + (0 if self.pfa_ok else 1))

    @property
    def pfa_ok(self):
        p = self.pfa
        return bool(np.isfinite(p.pfa) and p.pfa <= p.bound + 3.0 * p.standard_error)

    def to_dict(self):
        sol = self.solution
        return {
            "schema_version": 1,
            "converged": sol.converged,
            "sweeps": sol.sweeps,
            "grid_points": sol.grid.size,
            "stopping_region_sizes": {str(i): len(r) for i, r in self.regions.items()},
            "convexity_violations": {str(i): len(v) for i, v in self.convexity.items()},
            "containment_violations": len(self.containment),
            "concavity_violations": len(self.concavity),
            "vertices_missing": self.vertices_missing,
            "value_bound_violations": len(self.value_bound_violations),
            "first_entry_mismatches": len(self.first_entry),
            "monotone_tail": self.monotone_tail,
            "pfa": self.pfa.to_dict(),
            "pfa_within_bound": self.pfa_ok,
            "violations": self.violations,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def run_checks(model, resolution=50, tol=1e-10, max_sweeps=20000, trials=10000, seed=0,
               concavity_pairs=10000, policy_trials=200, small=False):
    """Solve, then run every numerical check. Returns an :class:`OracleReport`."""
    grid = SimplexGrid(model.n_pixels, resolution)
    solver = solve_small if small else value_iteration
    sol = solver(grid, model, tol=tol, max_sweeps=max_sweeps)
    regions = {i: stopping_region(sol, i) for i in range(grid.n_pixels)}
    convexity = {i: check_convexity(r, grid) for i, r in regions.items()}
    tail = np.diff(sol.deltas[1:][-11:])
    rng_seeds = np.random.SeedSequence(seed).spawn(3)
    pfa = simulate_pfa(model, trials=trials, seed=rng_seeds[0])
    traj = simulate_policy(sol, model, trials=policy_trials, seed=rng_seeds[1])
    return OracleReport(
        solution=sol, regions=regions, convexity=convexity,
        containment=check_greedy_containment(sol),
        concavity=check_concavity(sol, pairs=concavity_pairs, seed=rng_seeds[2]),
        vertices_missing=check_vertices(sol) if model.cm.w == 0 else [],
        value_bound_violations=check_value_bounds(sol),
        pfa=pfa, first_entry=check_first_entry(sol, traj),
        monotone_tail=bool(np.all(tail <= 1e-15)))


__all__ = [
    "DiscreteObservationModel", "SimplexGrid", "OracleModel", "ValueSolution", "PfaResult",
    "OracleReport", "ObservationError", "default_model", "belief_update", "value_iteration",
    "solve_small", "stopping_region", "greedy_region", "check_convexity",
    "check_greedy_containment", "check_concavity", "check_vertices", "check_value_bounds",
    "simulate_pfa", "simulate_policy", "policy_member", "check_first_entry", "run_checks",
]
