"""Metropolis-Hastings proposal distributions.

Three proposal families:

* uniform: a uniformly random free dyad, symmetric (log q-ratio 0);
* TNT ("tie / no tie"): with probability 1/2 a uniformly random current
  edge, else a uniformly random dyad, so a specific edge is proposed
  with probability 1/(2E) + 1/(2N) and a non-edge with 1/(2N);
* BDStratTNT: TNT generalized with stratification over attribute mixing
  cells, block (forbidden mixing-type) constraints, and bounded-degree
  constraints, implemented rejection-free by maintaining, per mixing
  cell, the unsaturated-vertex sets and an exact eligible-dyad count.

A dyad is proposable under BDStratTNT iff it is not blocked and either
hosts a current edge or has both endpoints below their degree caps.
Within the drawn stratum the proposal is a 1/2-1/2 TNT mixture over
(stratum edges) and (stratum eligible dyads); the q-ratio accounts for
the stratum weights, the post-toggle eligibility counts, and the
renormalization over proposable strata.  Zero-weight strata freeze
their dyads' edge states, like blocks.
"""

import math
import random
from bisect import bisect_right
from typing import NamedTuple
from warnings import warn

from .errors import ConstraintError, DataError, FrozenStateError

__all__ = ["Proposal", "UniformProposal", "TntProposal", "BDStratTNT",
           "ConstraintChecker", "make_proposal"]


class Proposal(NamedTuple):
    i: int
    j: int
    log_q_ratio: float


_ZERO = 0.0


class UniformProposal:
    """Uniformly random free dyad; symmetric."""

    name = "uniform"

    def propose(self, net, rng):
        i, j = net.random_dyad(rng)
        return Proposal(i, j, _ZERO)

    def commit(self, net, i, j, added):
        pass


class TntProposal:
    """Tie/no-tie mixture with exact forward/backward ratio.

    With no edges the dyad branch fires with probability 1 and the
    reverse edge-branch term enters the ratio, so the chain remains
    exactly reversible from the empty network.
    """

    name = "tnt"

    def propose(self, net, rng):
        E = len(net.edges)
        N = net.dyad_count()
        if E == 0:
            i, j = net.random_dyad(rng)
            # forward: dyad branch forced; reverse state has one edge
            q_fwd = 1.0 / N
            q_rev = 0.5 + 0.5 / N
            return Proposal(i, j, math.log(q_rev / q_fwd))
        if rng.random() < 0.5:
            i, j = net.edges[rng.randrange(E)]
            is_edge = True
        else:
            i, j = net.random_dyad(rng)
            is_edge = j in net.adj[i]
        if is_edge:
            q_fwd = 0.5 / E + 0.5 / N
            q_rev = 0.5 / N if E > 1 else 1.0 / N
        else:
            q_fwd = 0.5 / N
            q_rev = 0.5 / (E + 1) + 0.5 / N
        return Proposal(i, j, math.log(q_rev / q_fwd))

    def commit(self, net, i, j, added):
        pass


class ConstraintChecker:
    """Validates toggles against bd caps and blocks.

    Used to reject constraint-violating proposals from plain proposals
    (the target assigns them zero probability) and, in tests, to wrap
    BDStratTNT and assert it never emits a violating proposal.
    """

    def __init__(self, net, constraints, attrs=None):
        n = net.n
        self.caps_out = _resolve_caps(constraints.bd_maxout, n)
        if net.directed:
            self.caps_in = _resolve_caps(constraints.bd_maxin, n)
        else:
            if constraints.bd_maxin is not None:
                raise DataError("maxin applies to directed networks only")
            self.caps_in = None
        self.blocked = None
        if constraints.blocks_attr is not None:
            if attrs is None or constraints.blocks_attr not in attrs:
                raise DataError(f"network has no attribute {constraints.blocks_attr!r}")
            levels, lev = attrs.categorical(constraints.blocks_attr)
            forbid = _blocks_matrix(constraints.blocks_levels2, len(levels), net.directed)
            self.block_level = lev
            self.forbid = forbid
            self.blocked = True

    def allowed(self, net, i, j):
        """May dyad (i, j) be toggled from the current state?"""
        if self.blocked is not None and self.forbid[self.block_level[i]][self.block_level[j]]:
            return False
        if j in net.adj[i]:
            return True  # removals never violate caps
        if self.caps_in is None:
            return net.deg[i] < self.caps_out[i] and net.deg[j] < self.caps_out[j]
        return net.deg[i] < self.caps_out[i] and net.in_deg[j] < self.caps_in[j]

    def validate_network(self, net):
        if self.blocked is not None:
            lev, forbid = self.block_level, self.forbid
            for i, j in net.edges:
                if forbid[lev[i]][lev[j]]:
                    raise ConstraintError(f"edge ({i + 1}, {j + 1}) violates blocks")
        if self.caps_in is None:
            for v, d in enumerate(net.deg):
                if d > self.caps_out[v]:
                    raise ConstraintError(f"vertex {v + 1} exceeds its degree cap")
        else:
            for v in range(net.n):
                if net.deg[v] > self.caps_out[v] or net.in_deg[v] > self.caps_in[v]:
                    raise ConstraintError(f"vertex {v + 1} exceeds its degree cap")


def _resolve_caps(spec_cap, n):
    """Scalar, per-vertex sequence, or None (no cap) -> per-vertex list."""
    if spec_cap is None:
        return [n] * n
    if isinstance(spec_cap, int):
        if spec_cap < 0:
            raise DataError("degree caps must be nonnegative")
        return [spec_cap] * n
    caps = [int(c) for c in spec_cap]
    if len(caps) != n or any(c < 0 for c in caps):
        raise DataError("per-vertex caps need one nonnegative entry per vertex")
    return caps


def _blocks_matrix(levels2, L, directed):
    if levels2 == "diag":
        return [[a == b for b in range(L)] for a in range(L)]
    forbid = [[bool(x) for x in row] for row in levels2]
    if len(forbid) != L or any(len(row) != L for row in forbid):
        raise DataError(f"blocks matrix must be {L}x{L} over the attribute levels")
    if not directed:
        for a in range(L):
            for b in range(L):
                if forbid[a][b] != forbid[b][a]:
                    raise DataError("blocks matrix must be symmetric for undirected networks")
    return forbid


def reduce_bd_matrix(attribs, maxout):
    """Reduce the (membership, per-class cap) matrix form to per-vertex caps."""
    caps = []
    for row_m, row_c in zip(attribs, maxout):
        caps.append(sum(int(c) for m, c in zip(row_m, row_c) if True))
    return caps


class BDStratTNT:
    """Stratified, degree-bounded, block-aware TNT proposal.

    The state is organized as mixing *cells*: unordered pairs of
    combined classes, where a vertex's combined class is its
    (stratification level, blocks level) pair.  Each cell belongs to
    the stratum given by its pair of stratification levels.  Per cell
    the proposal maintains the current edge list (with O(1) delete) and
    the count of edges whose endpoints are both unsaturated; per class
    it maintains the unsaturated-vertex set; per stratum the total edge
    and eligible-dyad counts.  All counts are updated incrementally by
    ``commit`` in time proportional to the affected cells.

    Undirected unipartite networks only.
    """

    name = "bdstrat"

    def __init__(self, net, constraints, attrs=None, pmat=None):
        if net.directed or net.bipartite:
            raise DataError("BDStratTNT supports undirected unipartite networks")
        n = net.n
        self.n = n
        self.caps = _resolve_caps(constraints.bd_maxout, n)
        if constraints.bd_maxin is not None:
            raise DataError("maxin applies to directed networks only")

        # blocks level per vertex
        if constraints.blocks_attr is not None:
            if attrs is None or constraints.blocks_attr not in attrs:
                raise DataError(f"network has no attribute {constraints.blocks_attr!r}")
            _, blev = attrs.categorical(constraints.blocks_attr)
            nlev_b = max(blev) + 1
            forbid = _blocks_matrix(constraints.blocks_levels2, nlev_b, False)
        else:
            blev = [0] * n
            forbid = [[False]]

        # stratification level per vertex (cross-classification label)
        if constraints.strat_attr:
            cols = []
            for name in constraints.strat_attr:
                if attrs is None or name not in attrs:
                    raise DataError(f"network has no attribute {name!r}")
                levels, lev = attrs.categorical(name)
                cols.append((levels, lev))
            labels = [".".join(cols[k][0][cols[k][1][v]] for k in range(len(cols)))
                      for v in range(n)]
            self.strat_levels = sorted(set(labels))
            lut = {lab: s for s, lab in enumerate(self.strat_levels)}
            slev = [lut[lab] for lab in labels]
        else:
            self.strat_levels = ["all"]
            slev = [0] * n
        L = len(self.strat_levels)

        # combined classes actually present
        class_lut = {}
        class_of = []
        for v in range(n):
            key = (slev[v], blev[v])
            if key not in class_lut:
                class_lut[key] = len(class_lut)
            class_of.append(class_lut[key])
        self.class_of = class_of
        self.class_key = [None] * len(class_lut)
        for key, c in class_lut.items():
            self.class_key[c] = key
        C = len(self.class_key)

        # strata: unordered strat-level pairs; cells: unordered class pairs
        self.strata = [(a, b) for a in range(L) for b in range(a, L)]
        strat_lut = {pair: s for s, pair in enumerate(self.strata)}
        self.cell_c1 = []
        self.cell_c2 = []
        self.cell_stratum = []
        self.cell_index = {}
        self.cells_of_class = [[] for _ in range(C)]
        for c1 in range(C):
            s1, b1 = self.class_key[c1]
            for c2 in range(c1, C):
                s2, b2 = self.class_key[c2]
                if forbid[b1][b2]:
                    continue
                k = len(self.cell_c1)
                self.cell_c1.append(c1)
                self.cell_c2.append(c2)
                self.cell_stratum.append(strat_lut[(min(s1, s2), max(s1, s2))])
                self.cell_index[(c1, c2)] = k
                self.cells_of_class[c1].append(k)
                if c2 != c1:
                    self.cells_of_class[c2].append(k)
        K = len(self.cell_c1)
        S = len(self.strata)
        self.strat_cells = [[] for _ in range(S)]
        for k in range(K):
            self.strat_cells[self.cell_stratum[k]].append(k)

        # weights over strata
        self.weights = self._stratum_weights(net, constraints, pmat, slev, S, strat_lut)

        # mutable per-class / per-cell / per-stratum state
        caps = self.caps
        self.unsat = [[] for _ in range(C)]
        self.unsat_pos = [{} for _ in range(C)]
        for v in range(n):
            if net.deg[v] < caps[v]:
                c = class_of[v]
                self.unsat_pos[c][v] = len(self.unsat[c])
                self.unsat[c].append(v)
        self.cell_edges = [[] for _ in range(K)]
        self.cell_edge_pos = [{} for _ in range(K)]
        self.cell_unsat_edges = [0] * K
        self._blev = blev
        self._forbid = forbid
        for (i, j) in net.edges:
            if net.deg[i] > caps[i] or net.deg[j] > caps[j]:
                raise ConstraintError("initial network violates the degree caps")
            k = self._cell_of_dyad(i, j)
            if k is None:
                raise ConstraintError(f"initial edge ({i + 1}, {j + 1}) violates blocks")
            if self.weights[self.cell_stratum[k]] > 0.0:
                self.cell_edge_pos[k][(i, j)] = len(self.cell_edges[k])
                self.cell_edges[k].append((i, j))
                if net.deg[i] < caps[i] and net.deg[j] < caps[j]:
                    self.cell_unsat_edges[k] += 1

        self.strat_E = [0] * S
        self.strat_D = [0] * S
        for k in range(K):
            s = self.cell_stratum[k]
            self.strat_E[s] += len(self.cell_edges[k])
        for s in range(S):
            self.strat_D[s] = sum(self._cell_eligible(k) for k in self.strat_cells[s])
        self.active_weight = sum(w for s, w in enumerate(self.weights)
                                 if w > 0.0 and self.strat_D[s] > 0)
        self._cum_weights = []
        acc = 0.0
        for w in self.weights:
            acc += w
            self._cum_weights.append(acc)
        self._total_weight = acc
        if acc <= 0.0:
            raise ConstraintError("all strata have zero weight")

    # -- construction helpers -------------------------------------------

    def _stratum_weights(self, net, constraints, pmat, slev, S, strat_lut):
        L = len(self.strat_levels)
        if pmat is None:
            pmat = constraints.strat_pmat
        if pmat is not None and not isinstance(pmat, str):
            mat = [[float(x) for x in row] for row in pmat]
            if len(mat) != L or any(len(row) != L for row in mat):
                raise DataError(f"pmat must be {L}x{L} over the stratification levels "
                                f"{self.strat_levels}")
            weights = [0.0] * S
            for a in range(L):
                for b in range(a, L):
                    w = mat[a][b] if a == b else 0.5 * (mat[a][b] + mat[b][a])
                    if w < 0:
                        raise DataError("pmat entries must be nonnegative")
                    weights[strat_lut[(a, b)]] = w
        elif constraints.strat_empirical:
            weights = [0.0] * S
            if net.edge_count == 0:
                warn("empirical stratification weights requested on an empty "
                     "network; falling back to uniform weights")
                weights = [1.0] * S
            else:
                for i, j in net.edges:
                    a, b = slev[i], slev[j]
                    weights[strat_lut[(min(a, b), max(a, b))]] += 1.0
        else:
            weights = [1.0] * S
        # strata with no cells can never be proposed
        for s in range(S):
            if not self.strat_cells[s]:
                weights[s] = 0.0
        total = sum(weights)
        if total <= 0.0:
            raise ConstraintError("all strata have zero weight")
        return [w / total for w in weights]

    def _cell_of_dyad(self, i, j):
        c1, c2 = self.class_of[i], self.class_of[j]
        if c2 < c1:
            c1, c2 = c2, c1
        return self.cell_index.get((c1, c2))

    def _cell_eligible(self, k):
        """Eligible dyads in cell k: current edges + unsaturated non-edges."""
        c1, c2 = self.cell_c1[k], self.cell_c2[k]
        if c1 == c2:
            u = len(self.unsat[c1])
            pairs = u * (u - 1) // 2
        else:
            pairs = len(self.unsat[c1]) * len(self.unsat[c2])
        return pairs - self.cell_unsat_edges[k] + len(self.cell_edges[k])

    # -- proposal --------------------------------------------------------

    def propose(self, net, rng):
        if self.active_weight <= 0.0:
            raise FrozenStateError("no stratum has a proposable dyad")
        cum = self._cum_weights
        strat_D = self.strat_D
        while True:
            s = bisect_right(cum, rng.random() * self._total_weight)
            if s < len(strat_D) and strat_D[s] > 0 and self.weights[s] > 0.0:
                break
        E_s = self.strat_E[s]
        D_s = strat_D[s]
        if E_s and rng.random() < 0.5:
            dyad = self._draw_stratum_edge(s, rng)
            is_edge = True
        else:
            dyad, is_edge = self._draw_stratum_dyad(s, rng)
        i, j = dyad
        if is_edge:
            q_fwd = 0.5 / E_s + 0.5 / D_s
        else:
            q_fwd = (0.5 / D_s) if E_s else (1.0 / D_s)
        W = self.active_weight

        # provisional commit to read the reverse-state counts, then roll back
        added = net.toggle(i, j)
        self.commit(net, i, j, added)
        E_r = self.strat_E[s]
        D_r = self.strat_D[s]
        W_r = self.active_weight
        net.toggle(i, j)
        self.commit(net, i, j, not added)

        if is_edge:
            q_rev = (0.5 / D_r) if E_r else (1.0 / D_r)
        else:
            q_rev = 0.5 / E_r + 0.5 / D_r
        return Proposal(i, j, math.log((q_rev * W) / (q_fwd * W_r)))

    def _draw_stratum_edge(self, s, rng):
        r = rng.randrange(self.strat_E[s])
        for k in self.strat_cells[s]:
            m = len(self.cell_edges[k])
            if r < m:
                return self.cell_edges[k][r]
            r -= m
        raise AssertionError("stratum edge count diverged")

    def _draw_stratum_dyad(self, s, rng):
        r = rng.randrange(self.strat_D[s])
        for k in self.strat_cells[s]:
            m = self._cell_eligible(k)
            if r < m:
                edges = self.cell_edges[k]
                if r < len(edges):
                    return edges[r], True
                return self._draw_cell_nonedge(k, rng), False
            r -= m
        raise AssertionError("stratum eligible count diverged")

    def _draw_cell_nonedge(self, k, rng):
        """Uniform unsaturated non-edge in cell k (rejecting current edges)."""
        c1, c2 = self.cell_c1[k], self.cell_c2[k]
        u1 = self.unsat[c1]
        pos = self.cell_edge_pos[k]
        if c1 == c2:
            m = len(u1)
            while True:
                a = rng.randrange(m)
                b = rng.randrange(m - 1)
                if b >= a:
                    b += 1
                i, j = u1[a], u1[b]
                if j < i:
                    i, j = j, i
                if (i, j) not in pos:
                    return (i, j)
        u2 = self.unsat[c2]
        while True:
            i = u1[rng.randrange(len(u1))]
            j = u2[rng.randrange(len(u2))]
            if j < i:
                i, j = j, i
            if (i, j) not in pos:
                return (i, j)

    # -- incremental state maintenance ------------------------------------

    def commit(self, net, i, j, added):
        """Update all bookkeeping for a toggle that was just applied."""
        caps, deg = self.caps, net.deg
        k = self._cell_of_dyad(i, j)
        s = self.cell_stratum[k]
        if added:
            # the new edge joins the cell's lists; both endpoints were
            # unsaturated before a legal add, so it counts as an
            # unsaturated edge until the saturation pass below corrects
            # for endpoints that just reached their cap (the edge and
            # unsaturated-edge bumps to D cancel exactly)
            pos = self.cell_edge_pos[k]
            d = (i, j) if i < j else (j, i)
            pos[d] = len(self.cell_edges[k])
            self.cell_edges[k].append(d)
            self.strat_E[s] += 1
            self.cell_unsat_edges[k] += 1
            if deg[i] == caps[i]:
                self._saturate(net, i)
            if deg[j] == caps[j]:
                self._saturate(net, j)
        else:
            pos = self.cell_edge_pos[k]
            d = (i, j) if i < j else (j, i)
            edges = self.cell_edges[k]
            slot = pos.pop(d)
            last = edges.pop()
            if last != d:
                edges[slot] = last
                pos[last] = slot
            self.strat_E[s] -= 1
            # endpoints that were at cap re-enter the unsat sets
            i_was_sat = deg[i] + 1 == caps[i]
            j_was_sat = deg[j] + 1 == caps[j]
            if i_was_sat or j_was_sat:
                self._add_D(s, -1)
                if i_was_sat:
                    self._unsaturate(net, i)
                if j_was_sat:
                    self._unsaturate(net, j)
            else:
                self.cell_unsat_edges[k] -= 1

    def _saturate(self, net, v):
        c = self.class_of[v]
        lst, pos = self.unsat[c], self.unsat_pos[c]
        slot = pos.pop(v)
        last = lst.pop()
        if last != v:
            lst[slot] = last
            pos[last] = slot
        u_c = len(lst)
        # unsaturated-pair counts shrink in every cell touching class c
        unsat = self.unsat
        cell_c1, cell_c2, cell_stratum = self.cell_c1, self.cell_c2, self.cell_stratum
        for k in self.cells_of_class[c]:
            c1, c2 = cell_c1[k], cell_c2[k]
            if c1 == c2:
                delta = -u_c
            else:
                delta = -len(unsat[c2 if c1 == c else c1])
            if delta:
                self._add_D(cell_stratum[k], delta)
        # v's incident edges with an unsaturated partner stop being
        # unsaturated edges (their dyads stay eligible exactly once,
        # as edges)
        class_of, unsat_pos = self.class_of, self.unsat_pos
        cell_unsat = self.cell_unsat_edges
        for w in net.adj[v]:
            if w in unsat_pos[class_of[w]]:
                k = self._cell_of_dyad(v, w)
                cell_unsat[k] -= 1
                self._add_D(cell_stratum[k], 1)

    def _unsaturate(self, net, v):
        c = self.class_of[v]
        lst, pos = self.unsat[c], self.unsat_pos[c]
        # pair counts grow before v is appended
        u_c = len(lst)
        unsat = self.unsat
        cell_c1, cell_c2, cell_stratum = self.cell_c1, self.cell_c2, self.cell_stratum
        for k in self.cells_of_class[c]:
            c1, c2 = cell_c1[k], cell_c2[k]
            if c1 == c2:
                delta = u_c
            else:
                delta = len(unsat[c2 if c1 == c else c1])
            if delta:
                self._add_D(cell_stratum[k], delta)
        pos[v] = len(lst)
        lst.append(v)
        class_of, unsat_pos = self.class_of, self.unsat_pos
        cell_unsat = self.cell_unsat_edges
        for w in net.adj[v]:
            if w in unsat_pos[class_of[w]]:
                k = self._cell_of_dyad(v, w)
                cell_unsat[k] += 1
                self._add_D(cell_stratum[k], -1)

    def _add_D(self, s, delta):
        D = self.strat_D
        old = D[s]
        new = old + delta
        D[s] = new
        if (old == 0) != (new == 0):
            w = self.weights[s]
            if w > 0.0:
                if old == 0:
                    self.active_weight += w
                else:
                    self.active_weight -= w

    # -- test support ------------------------------------------------------

    def snapshot(self):
        """Canonical view of the mutable state, for rebuild comparisons."""
        return {
            "unsat": [frozenset(lst) for lst in self.unsat],
            "cell_edges": [frozenset(e) for e in self.cell_edges],
            "cell_unsat_edges": list(self.cell_unsat_edges),
            "strat_E": list(self.strat_E),
            "strat_D": list(self.strat_D),
            "active_weight": round(self.active_weight, 12),
        }


def make_proposal(net, constraints, attrs=None, pmat=None):
    """Choose a proposal for a constraint spec; return (proposal, checker).

    The checker is None when the proposal itself respects the
    constraints (BDStratTNT); otherwise the sampler must reject toggles
    the checker disallows.
    """
    forced = constraints.force_proposal
    if forced == "uniform":
        proposal = UniformProposal()
    elif forced == "tnt":
        proposal = TntProposal()
    elif constraints.strat_attr is not None or constraints.constrained():
        proposal = BDStratTNT(net, constraints, attrs, pmat=pmat)
        return proposal, None
    elif constraints.sparse:
        proposal = TntProposal()
    else:
        proposal = UniformProposal()
    if constraints.constrained():
        checker = ConstraintChecker(net, constraints, attrs)
        checker.validate_network(net)
        return proposal, checker
    return proposal, None
