"""Triplet label space: the class universe and its component decomposition map."""

from __future__ import annotations

import os
from importlib import resources

import numpy as np

#: Component kinds accepted throughout the package, in canonical order.
COMPONENTS = ("i", "v", "t", "iv", "it", "ivt")

#: Kinds recoverable from triplet vectors by the max-filter (everything but "ivt").
FILTER_COMPONENTS = ("i", "v", "t", "iv", "it")

_DEFAULT_MAP_RESOURCE = "data/cholect50_triplet_map.txt"


def normalize_component(kind):
    """Validate a component kind and return its canonical lowercase form."""
    key = str(kind).lower()
    if key not in COMPONENTS:
        raise ValueError(f"unknown component kind {kind!r}; expected one of {COMPONENTS}")
    return key


class ComponentMap:
    """Immutable triplet -> (instrument, verb, target) decomposition table.

    Rows are indexed by triplet id ``0..n_triplets-1``; exactly one row per id.
    Pair classes use the fixed row-major layout

        iv = instrument * n_verbs + verb
        it = instrument * n_targets + target

    so pair indices agree across tools and reports.
    """

    def __init__(self, rows, n_instruments=6, n_verbs=10, n_targets=15, n_triplets=None):
        rows = [tuple(int(v) for v in row) for row in rows]
        for row in rows:
            if len(row) != 4:
                raise ValueError(f"map row must have 4 fields, got {row!r}")
        if n_triplets is None:
            n_triplets = len(rows)
        if len(rows) != n_triplets:
            raise ValueError(f"map has {len(rows)} rows, expected n_triplets={n_triplets}")

        ids = [r[0] for r in rows]
        if len(set(ids)) != len(ids):
            dup = sorted({t for t in ids if ids.count(t) > 1})
            raise ValueError(f"duplicate triplet id(s) in map: {dup}")
        if set(ids) != set(range(n_triplets)):
            raise ValueError("map must contain every triplet id 0..n_triplets-1 exactly once")

        self.n_triplets = int(n_triplets)
        self.n_instruments = int(n_instruments)
        self.n_verbs = int(n_verbs)
        self.n_targets = int(n_targets)

        table = np.zeros((self.n_triplets, 3), dtype=np.int64)
        for tid, i, v, t in rows:
            if not (0 <= i < self.n_instruments and 0 <= v < self.n_verbs and 0 <= t < self.n_targets):
                raise ValueError(f"component id out of range in map row {(tid, i, v, t)}")
            table[tid] = (i, v, t)

        self.instrument_ids = table[:, 0]
        self.verb_ids = table[:, 1]
        self.target_ids = table[:, 2]
        self.iv_ids = self.instrument_ids * self.n_verbs + self.verb_ids
        self.it_ids = self.instrument_ids * self.n_targets + self.target_ids
        for arr in (self.instrument_ids, self.verb_ids, self.target_ids, self.iv_ids, self.it_ids):
            arr.setflags(write=False)
        self._groups = {}

    # -- introspection -------------------------------------------------------

    def rows(self):
        """The map as a list of (triplet_id, instrument_id, verb_id, target_id) tuples."""
        return [
            (t, int(self.instrument_ids[t]), int(self.verb_ids[t]), int(self.target_ids[t]))
            for t in range(self.n_triplets)
        ]

    def component_size(self, kind):
        """Number of classes in the given component's label space."""
        kind = normalize_component(kind)
        return {
            "i": self.n_instruments,
            "v": self.n_verbs,
            "t": self.n_targets,
            "iv": self.n_instruments * self.n_verbs,
            "it": self.n_instruments * self.n_targets,
            "ivt": self.n_triplets,
        }[kind]

    def component_ids(self, kind):
        """Per-triplet component class id (identity for "ivt")."""
        kind = normalize_component(kind)
        if kind == "ivt":
            ids = np.arange(self.n_triplets)
            ids.setflags(write=False)
            return ids
        return {
            "i": self.instrument_ids,
            "v": self.verb_ids,
            "t": self.target_ids,
            "iv": self.iv_ids,
            "it": self.it_ids,
        }[kind]

    def groups(self, kind):
        """Tuple mapping each component class id to the triplet ids it covers.

        Component classes no triplet maps to get an empty index array.
        """
        kind = normalize_component(kind)
        if kind not in self._groups:
            ids = self.component_ids(kind)
            size = self.component_size(kind)
            members = tuple(np.flatnonzero(ids == k) for k in range(size))
            self._groups[kind] = members
        return self._groups[kind]

    def __eq__(self, other):
        if not isinstance(other, ComponentMap):
            return NotImplemented
        return (
            self.n_triplets == other.n_triplets
            and self.n_instruments == other.n_instruments
            and self.n_verbs == other.n_verbs
            and self.n_targets == other.n_targets
            and bool(np.array_equal(self.instrument_ids, other.instrument_ids))
            and bool(np.array_equal(self.verb_ids, other.verb_ids))
            and bool(np.array_equal(self.target_ids, other.target_ids))
        )

    def __repr__(self):
        return (
            f"ComponentMap(n_triplets={self.n_triplets}, n_instruments={self.n_instruments}, "
            f"n_verbs={self.n_verbs}, n_targets={self.n_targets})"
        )


def parse_component_map(text, n_instruments=6, n_verbs=10, n_targets=15, n_triplets=None):
    """Parse a map document: one ``triplet,instrument,verb,target`` row per line.

    Lines starting with ``#`` and blank lines are ignored.
    """
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 4:
            raise ValueError(f"line {lineno}: expected 4 comma-separated integers, got {line!r}")
        try:
            rows.append(tuple(int(f) for f in fields))
        except ValueError:
            raise ValueError(f"line {lineno}: non-integer field in {line!r}") from None
    return ComponentMap(
        rows,
        n_instruments=n_instruments,
        n_verbs=n_verbs,
        n_targets=n_targets,
        n_triplets=n_triplets,
    )


def load_component_map(source, n_instruments=6, n_verbs=10, n_targets=15, n_triplets=None):
    """Load a component map from a path or an open text file."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(os.fspath(source), "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_component_map(
        text,
        n_instruments=n_instruments,
        n_verbs=n_verbs,
        n_targets=n_targets,
        n_triplets=n_triplets,
    )


def component_size(cmap, kind):
    """Number of classes of the given kind under the map (e.g. "iv" -> 60 by default)."""
    return cmap.component_size(kind)


_default_map = None


def default_component_map():
    """The bundled CholecT50 map: 100 triplets over 6 instruments, 10 verbs, 15 targets."""
    global _default_map
    if _default_map is None:
        text = resources.files("tripletmetrics").joinpath(_DEFAULT_MAP_RESOURCE).read_text("utf-8")
        _default_map = parse_component_map(text)
    return _default_map
