"""Pure-Python leaf statistics kernel.

Fallback twin of the compiled ``streamtree._core`` extension. Both kernels
perform the identical sequence of float operations, so a tree built on either
backend is bit-for-bit the same.
"""

import math


class LeafStats:
    """Per-leaf sufficient statistics over all attributes.

    Numeric attributes keep per-class [count, mean, m2, min, max] rows;
    categorical attributes keep value -> per-class count tables.
    `numeric_pairs` / `categorical_cells` count the observed (attribute,
    class) pairs and (value, class) cells, which back the memory model.
    """

    __slots__ = (
        "n_classes",
        "numeric_pos",
        "categorical_pos",
        "_num",
        "_cat",
        "numeric_pairs",
        "categorical_cells",
    )

    def __init__(self, n_classes, numeric_pos, categorical_pos):
        self.n_classes = n_classes
        self.numeric_pos = tuple(numeric_pos)
        self.categorical_pos = tuple(categorical_pos)
        self._num = [
            [[0, 0.0, 0.0, math.inf, -math.inf] for _ in range(n_classes)]
            for _ in self.numeric_pos
        ]
        self._cat = [dict() for _ in self.categorical_pos]
        self.numeric_pairs = 0
        self.categorical_cells = 0

    def update(self, values, label):
        for j, pos in enumerate(self.numeric_pos):
            x = values[pos]
            row = self._num[j][label]
            cnt = row[0]
            if cnt == 0:
                self.numeric_pairs += 1
            cnt += 1
            row[0] = cnt
            delta = x - row[1]
            row[1] += delta / cnt
            row[2] += delta * (x - row[1])
            if x < row[3]:
                row[3] = x
            if x > row[4]:
                row[4] = x
        for j, pos in enumerate(self.categorical_pos):
            v = values[pos]
            table = self._cat[j]
            counts = table.get(v)
            if counts is None:
                counts = [0] * self.n_classes
                table[v] = counts
            if counts[label] == 0:
                self.categorical_cells += 1
            counts[label] += 1

    def gaussian_by_class(self, pos):
        """Per-class (count, mean, m2, min, max) for the numeric attribute at
        schema position `pos`."""
        j = self.numeric_pos.index(pos)
        return [(int(r[0]), r[1], r[2], r[3], r[4]) for r in self._num[j]]

    def categorical_table(self, pos):
        """Copy of the value -> per-class-count table for the categorical
        attribute at schema position `pos`."""
        j = self.categorical_pos.index(pos)
        return {v: list(c) for v, c in self._cat[j].items()}
