# cython: language_level=3
"""Compiled leaf statistics kernel (the learner's hot path).

Bit-compatible twin of ``streamtree._pycore.LeafStats``: the float operation
sequence is identical, so trees built on either backend match exactly.
Numeric rows live in one flat C double array laid out as
[attribute][class][count, mean, m2, min, max].
"""

from libc.stdlib cimport calloc, free

cdef double INF = float("inf")


cdef class LeafStats:
    cdef readonly int n_classes
    cdef readonly tuple numeric_pos
    cdef readonly tuple categorical_pos
    cdef readonly long numeric_pairs
    cdef readonly long categorical_cells
    cdef int n_numeric
    cdef int n_categorical
    cdef int* npos
    cdef double* num
    cdef list _cat

    def __cinit__(self, int n_classes, numeric_pos, categorical_pos):
        cdef int j
        self.n_classes = n_classes
        self.numeric_pos = tuple(numeric_pos)
        self.categorical_pos = tuple(categorical_pos)
        self.n_numeric = len(self.numeric_pos)
        self.n_categorical = len(self.categorical_pos)
        self.numeric_pairs = 0
        self.categorical_cells = 0
        self.npos = <int*> calloc(self.n_numeric if self.n_numeric else 1, sizeof(int))
        self.num = <double*> calloc(
            (self.n_numeric * n_classes * 5) if self.n_numeric else 1, sizeof(double)
        )
        if self.npos == NULL or self.num == NULL:
            raise MemoryError()
        for j in range(self.n_numeric):
            self.npos[j] = self.numeric_pos[j]
        for j in range(self.n_numeric * n_classes):
            self.num[j * 5 + 3] = INF
            self.num[j * 5 + 4] = -INF
        self._cat = [dict() for _ in range(self.n_categorical)]

    def __dealloc__(self):
        if self.npos != NULL:
            free(self.npos)
        if self.num != NULL:
            free(self.num)

    cpdef update(self, list values, int label):
        cdef int j
        cdef double x, cnt, delta
        cdef double* row
        cdef dict table
        cdef list counts
        cdef object v
        for j in range(self.n_numeric):
            x = values[self.npos[j]]
            row = self.num + (j * self.n_classes + label) * 5
            cnt = row[0]
            if cnt == 0:
                self.numeric_pairs += 1
            cnt = cnt + 1.0
            row[0] = cnt
            delta = x - row[1]
            row[1] = row[1] + delta / cnt
            row[2] = row[2] + delta * (x - row[1])
            if x < row[3]:
                row[3] = x
            if x > row[4]:
                row[4] = x
        for j in range(self.n_categorical):
            v = values[<int> self.categorical_pos[j]]
            table = <dict> self._cat[j]
            counts = <list> table.get(v)
            if counts is None:
                counts = [0] * self.n_classes
                table[v] = counts
            if <long> counts[label] == 0:
                self.categorical_cells += 1
            counts[label] = <long> counts[label] + 1

    def gaussian_by_class(self, pos):
        """Per-class (count, mean, m2, min, max) for the numeric attribute at
        schema position `pos`."""
        cdef int j = self.numeric_pos.index(pos)
        cdef int c
        cdef double* row
        out = []
        for c in range(self.n_classes):
            row = self.num + (j * self.n_classes + c) * 5
            out.append((int(row[0]), row[1], row[2], row[3], row[4]))
        return out

    def categorical_table(self, pos):
        """Copy of the value -> per-class-count table for the categorical
        attribute at schema position `pos`."""
        cdef int j = self.categorical_pos.index(pos)
        return {v: list(c) for v, c in (<dict> self._cat[j]).items()}
