"""Sparse binary network with O(1) toggling and uniform edge sampling.

The edge set is kept both as per-vertex adjacency sets and as a dense
list of dyads with a dyad->slot map, so that toggling an edge and
drawing a uniformly random edge are both constant-time (deletion uses
swap-remove).  Vertex ids are 0-based internally and 1-based in files.
"""

import csv

from .errors import NetworkFormatError

__all__ = ["Network", "VertexAttributes", "read_network", "write_network",
           "read_attributes", "write_attributes"]


class Network:
    """Simple binary graph: undirected, directed, or bipartite.

    Parameters
    ----------
    n : int
        Number of vertices (>= 1).
    directed : bool
        Whether dyads are ordered pairs.
    bipartite : int
        Count of first-mode vertices; 0 means unipartite.  Every edge
        of a bipartite network must join the two modes.
    """

    __slots__ = ("n", "directed", "bipartite", "adj", "in_adj",
                 "edges", "_edge_pos", "deg", "in_deg")

    def __init__(self, n, directed=False, bipartite=0):
        if n < 1:
            raise ValueError("need at least one vertex")
        if bipartite and not (0 < bipartite < n):
            raise ValueError("bipartite boundary must satisfy 0 < b < n")
        if bipartite and directed:
            raise ValueError("bipartite networks are undirected here")
        self.n = n
        self.directed = directed
        self.bipartite = bipartite
        self.adj = [set() for _ in range(n)]       # out-neighbors if directed
        self.in_adj = [set() for _ in range(n)] if directed else None
        self.edges = []                            # list of canonical dyads
        self._edge_pos = {}                        # dyad -> slot in `edges`
        self.deg = [0] * n                         # out-degree if directed
        self.in_deg = [0] * n if directed else None

    # -- basic queries -------------------------------------------------

    @property
    def edge_count(self):
        return len(self.edges)

    def dyad_count(self):
        """Number of free dyads."""
        n = self.n
        if self.bipartite:
            return self.bipartite * (n - self.bipartite)
        if self.directed:
            return n * (n - 1)
        return n * (n - 1) // 2

    def canonical(self, i, j):
        """Canonical form of a dyad: sorted when undirected."""
        if self.directed or i < j:
            return (i, j)
        return (j, i)

    def validate_dyad(self, i, j):
        """Raise unless (i, j) is a free dyad."""
        n = self.n
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"vertex id out of range: ({i}, {j})")
        if i == j:
            raise ValueError(f"self-loop not allowed: {i}")
        if self.bipartite:
            b = self.bipartite
            if (i < b) == (j < b):
                raise ValueError(f"same-mode bipartite dyad: ({i}, {j})")

    def has_edge(self, i, j):
        return j in self.adj[i]

    def degree(self, i):
        return self.deg[i]

    # -- mutation ------------------------------------------------------

    def toggle(self, i, j):
        """Flip the state of dyad (i, j); return True if edge now present."""
        if i == j or not (0 <= i < self.n and 0 <= j < self.n) or \
                (self.bipartite and (i < self.bipartite) == (j < self.bipartite)):
            self.validate_dyad(i, j)  # raises with the precise reason
        if not self.directed and j < i:
            i, j = j, i
        d = (i, j)
        pos = self._edge_pos
        if d in pos:
            slot = pos.pop(d)
            last = self.edges.pop()
            if last != d:
                self.edges[slot] = last
                pos[last] = slot
            self.adj[i].discard(j)
            self.deg[i] -= 1
            if self.directed:
                self.in_adj[j].discard(i)
                self.in_deg[j] -= 1
            else:
                self.adj[j].discard(i)
                self.deg[j] -= 1
            return False
        pos[d] = len(self.edges)
        self.edges.append(d)
        self.adj[i].add(j)
        self.deg[i] += 1
        if self.directed:
            self.in_adj[j].add(i)
            self.in_deg[j] += 1
        else:
            self.adj[j].add(i)
            self.deg[j] += 1
        return True

    # -- sampling helpers ----------------------------------------------

    def random_edge(self, rng):
        """A uniformly random current edge; rng is a random.Random."""
        if not self.edges:
            raise ValueError("network has no edges")
        return self.edges[rng.randrange(len(self.edges))]

    def dyad_at(self, k):
        """Decode index k in [0, dyad_count) to a canonical free dyad."""
        n = self.n
        if self.bipartite:
            b = self.bipartite
            return (k // (n - b), b + k % (n - b))
        if self.directed:
            i, j = divmod(k, n - 1)
            return (i, j if j < i else j + 1)
        # undirected: row-major upper triangle
        i = 0
        row = n - 1
        while k >= row:
            k -= row
            i += 1
            row -= 1
        return (i, i + 1 + k)

    def random_dyad(self, rng):
        return self.dyad_at(rng.randrange(self.dyad_count()))

    # -- structure -----------------------------------------------------

    def copy(self):
        """Deep clone; chains own independent copies."""
        net = Network.__new__(Network)
        net.n = self.n
        net.directed = self.directed
        net.bipartite = self.bipartite
        net.adj = [set(s) for s in self.adj]
        net.in_adj = [set(s) for s in self.in_adj] if self.directed else None
        net.edges = list(self.edges)
        net._edge_pos = dict(self._edge_pos)
        net.deg = list(self.deg)
        net.in_deg = list(self.in_deg) if self.directed else None
        return net

    def edge_set(self):
        return set(self.edges)

    def check_consistency(self):
        """Verify counters against adjacency; used by tests."""
        assert [len(s) for s in self.adj] == self.deg, "degree counters diverged"
        if self.directed:
            assert [len(s) for s in self.in_adj] == self.in_deg
            assert sum(self.deg) == len(self.edges)
        else:
            assert sum(self.deg) == 2 * len(self.edges)
        assert len(self._edge_pos) == len(self.edges)
        for d, slot in self._edge_pos.items():
            assert self.edges[slot] == d
        return True

    def __eq__(self, other):
        return (isinstance(other, Network) and self.n == other.n
                and self.directed == other.directed
                and self.bipartite == other.bipartite
                and self.edge_set() == other.edge_set())

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        bip = f", bipartite={self.bipartite}" if self.bipartite else ""
        return f"Network(n={self.n}, {kind}{bip}, edges={self.edge_count})"


class VertexAttributes:
    """Named per-vertex columns, either numeric or categorical.

    Categorical columns expose sorted level labels and precomputed
    per-vertex level indices; numeric columns are lists of floats.
    """

    def __init__(self, n):
        self.n = n
        self.columns = {}      # name -> list of values (str or float)
        self.kinds = {}        # name -> "numeric" | "categorical"
        self.levels = {}       # name -> sorted level labels (categorical)
        self.level_index = {}  # name -> per-vertex level index

    def add_numeric(self, name, values):
        values = [float(v) for v in values]
        if len(values) != self.n:
            raise ValueError(f"column {name!r} has {len(values)} entries, need {self.n}")
        self.columns[name] = values
        self.kinds[name] = "numeric"

    def add_categorical(self, name, values):
        values = [str(v) for v in values]
        if len(values) != self.n:
            raise ValueError(f"column {name!r} has {len(values)} entries, need {self.n}")
        levels = sorted(set(values))
        lut = {lev: k for k, lev in enumerate(levels)}
        self.columns[name] = values
        self.kinds[name] = "categorical"
        self.levels[name] = levels
        self.level_index[name] = [lut[v] for v in values]

    def add(self, name, values):
        """Add a column, inferring numeric when every entry parses as a real."""
        try:
            floats = [float(v) for v in values]
        except (TypeError, ValueError):
            self.add_categorical(name, values)
        else:
            self.add_numeric(name, floats)

    def numeric(self, name):
        if name not in self.columns:
            raise KeyError(f"no attribute {name!r}")
        if self.kinds[name] != "numeric":
            raise TypeError(f"attribute {name!r} is categorical, need numeric")
        return self.columns[name]

    def categorical(self, name):
        """Return (levels, per-vertex level index); numeric columns are
        coerced by treating each distinct value's string form as a level."""
        if name not in self.columns:
            raise KeyError(f"no attribute {name!r}")
        if self.kinds[name] == "numeric":
            vals = [repr(v) for v in self.columns[name]]
            levels = sorted(set(vals))
            lut = {lev: k for k, lev in enumerate(levels)}
            return levels, [lut[v] for v in vals]
        return self.levels[name], self.level_index[name]

    def __contains__(self, name):
        return name in self.columns


# -- file I/O ----------------------------------------------------------
#
# Network file: UTF-8 text, header lines `%n <count>`, `%directed <0|1>`,
# `%bipartite <0|count>`, then one `tail head` pair per line (1-based).
# Attribute file: CSV with a leading `vertex` column (1-based).

def write_network(net, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"%n {net.n}\n")
        fh.write(f"%directed {1 if net.directed else 0}\n")
        fh.write(f"%bipartite {net.bipartite}\n")
        for i, j in net.edges:
            fh.write(f"{i + 1} {j + 1}\n")


def read_network(path):
    header = {}
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("%"):
                parts = line[1:].split()
                if len(parts) != 2 or parts[0] not in ("n", "directed", "bipartite"):
                    raise NetworkFormatError(f"{path}:{lineno}: bad header line {line!r}")
                try:
                    header[parts[0]] = int(parts[1])
                except ValueError:
                    raise NetworkFormatError(f"{path}:{lineno}: non-integer header value")
                continue
            parts = line.split()
            if len(parts) != 2:
                raise NetworkFormatError(f"{path}:{lineno}: expected 'tail head'")
            try:
                edges.append((int(parts[0]), int(parts[1]), lineno))
            except ValueError:
                raise NetworkFormatError(f"{path}:{lineno}: non-integer vertex id")
    if "n" not in header:
        raise NetworkFormatError(f"{path}: missing %n header")
    net = Network(header["n"], directed=bool(header.get("directed", 0)),
                  bipartite=header.get("bipartite", 0))
    for t, h, lineno in edges:
        if not (1 <= t <= net.n and 1 <= h <= net.n):
            raise NetworkFormatError(f"{path}:{lineno}: vertex id out of range")
        try:
            net.validate_dyad(t - 1, h - 1)
        except ValueError as exc:
            raise NetworkFormatError(f"{path}:{lineno}: {exc}")
        if net.has_edge(t - 1, h - 1):
            raise NetworkFormatError(f"{path}:{lineno}: duplicate edge {t} {h}")
        net.toggle(t - 1, h - 1)
    return net


def write_attributes(attrs, path):
    names = list(attrs.columns)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vertex"] + names)
        for v in range(attrs.n):
            writer.writerow([v + 1] + [attrs.columns[name][v] for name in names])


def read_attributes(path, n):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise NetworkFormatError(f"{path}: empty attribute file")
        if not head or head[0] != "vertex":
            raise NetworkFormatError(f"{path}: first column must be 'vertex'")
        names = head[1:]
        rows = {}
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(names) + 1:
                raise NetworkFormatError(f"{path}:{lineno}: wrong field count")
            try:
                v = int(row[0])
            except ValueError:
                raise NetworkFormatError(f"{path}:{lineno}: non-integer vertex id")
            if not (1 <= v <= n):
                raise NetworkFormatError(f"{path}:{lineno}: vertex id out of range")
            if v in rows:
                raise NetworkFormatError(f"{path}:{lineno}: duplicate vertex {v}")
            rows[v] = row[1:]
    if len(rows) != n:
        raise NetworkFormatError(f"{path}: need one row per vertex (got {len(rows)} of {n})")
    attrs = VertexAttributes(n)
    for k, name in enumerate(names):
        attrs.add(name, [rows[v + 1][k] for v in range(n)])
    return attrs
