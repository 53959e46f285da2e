"""Dataset ingestion (CSV and a small ARFF subset) and synthetic stream
generation.

File formats are documented in docs/formats.md. Readers validate as they
stream: any cell that cannot be represented under the inferred schema raises
a positioned :class:`DataError` instead of yielding a bad instance.
"""

from __future__ import annotations

import csv
import os
import random

from .errors import ConfigError, DataError
from .tree import CATEGORICAL, NUMERIC, Attribute, Instance, Schema


class StreamSource:
    """A schema plus a one-shot instance iterator; exhaustion is final."""

    def __init__(self, schema, instances, name="stream", count_hint=None):
        self.schema = schema
        self.name = name
        self.count_hint = count_hint
        self._iterator = iter(instances)

    def __iter__(self):
        return self._iterator


def _parse_float(token):
    try:
        return float(token)
    except ValueError:
        return None


def read_csv_stream(
    path,
    header=None,
    label_column=None,
    type_overrides=None,
    infer_rows=1000,
    max_categories=32,
):
    """Stream a comma-separated file, inferring the schema from a prefix.

    Schema inference scans up to `infer_rows` data rows: a feature column is
    categorical when every prefix value is a non-numeric token and at most
    `max_categories` distinct tokens appear; otherwise it is numeric. The
    label column (default: last) is always categorical, with its class set
    frozen after the prefix. `header` may be True/False or None for
    auto-detection; `type_overrides` maps a column name or index to
    "numeric" or "categorical".
    """
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    fh = open(path, newline="", encoding="utf-8")
    try:
        reader = csv.reader(fh)
        rows = []
        try:
            for row in reader:
                if row:
                    rows.append(row)
                if len(rows) > infer_rows:  # +1 potential header row
                    break
        except csv.Error as exc:
            raise DataError(f"{path}: malformed CSV: {exc}") from exc
        if not rows:
            raise DataError(f"{path}: file contains no rows")

        if header is None:
            header = _sniff_header(rows)
        col_names = None
        if header:
            col_names = [c.strip() for c in rows[0]]
            rows = rows[1:]
            if not rows:
                raise DataError(f"{path}: no data rows after the header")
        n_cols = len(rows[0])
        if col_names is None:
            col_names = [f"col{j}" for j in range(n_cols)]
        if len(col_names) != n_cols:
            raise DataError(
                f"{path}: header has {len(col_names)} columns, data has {n_cols}"
            )

        label_idx = _resolve_column(label_column, col_names, n_cols)
        overrides = _resolve_overrides(type_overrides, col_names, n_cols)

        prefix = rows[:infer_rows]
        first_data_line = 2 if header else 1
        for i, row in enumerate(prefix):
            if len(row) != n_cols:
                raise DataError(
                    f"{path}:{first_data_line + i}: expected {n_cols} columns, "
                    f"got {len(row)}"
                )

        feature_cols = [j for j in range(n_cols) if j != label_idx]
        kinds = {}
        value_maps = {}
        for j in feature_cols:
            tokens = [row[j].strip() for row in prefix]
            forced = overrides.get(j)
            if forced == CATEGORICAL or (
                forced is None and all(_parse_float(t) is None for t in tokens)
            ):
                distinct = []
                seen = set()
                for t in tokens:
                    if t not in seen:
                        seen.add(t)
                        distinct.append(t)
                if forced == CATEGORICAL or len(distinct) <= max_categories:
                    kinds[j] = CATEGORICAL
                    value_maps[j] = {t: i for i, t in enumerate(distinct)}
                    continue
            kinds[j] = NUMERIC

        class_map = {}
        classes = []
        for row in prefix:
            t = row[label_idx].strip()
            if t not in class_map:
                class_map[t] = len(classes)
                classes.append(t)
        if len(classes) < 2:
            raise DataError(
                f"{path}: fewer than 2 class labels in the first {len(prefix)} rows"
            )

        attributes = []
        for j in feature_cols:
            if kinds[j] == CATEGORICAL:
                arity = max(2, len(value_maps[j]))
                attributes.append(Attribute(col_names[j], CATEGORICAL, arity))
            else:
                attributes.append(Attribute(col_names[j], NUMERIC))
        try:
            schema = Schema(tuple(attributes), tuple(classes))
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from exc
    except BaseException:
        fh.close()
        raise

    def convert(row, line_no):
        if len(row) != n_cols:
            raise DataError(f"{path}:{line_no}: expected {n_cols} columns, got {len(row)}")
        values = []
        for j in feature_cols:
            token = row[j].strip()
            if token == "":
                raise DataError(f"{path}:{line_no}: empty cell in column {col_names[j]!r}")
            if kinds[j] == NUMERIC:
                x = _parse_float(token)
                if x is None:
                    raise DataError(
                        f"{path}:{line_no}: cannot parse {token!r} as a number "
                        f"in column {col_names[j]!r}"
                    )
                values.append(x)
            else:
                idx = value_maps[j].get(token)
                if idx is None:
                    raise DataError(
                        f"{path}:{line_no}: value {token!r} in column {col_names[j]!r} "
                        "was not seen during schema inference"
                    )
                values.append(idx)
        label_token = row[label_idx].strip()
        label = class_map.get(label_token)
        if label is None:
            raise DataError(
                f"{path}:{line_no}: unknown class label {label_token!r} "
                "after the inference prefix"
            )
        return Instance(values, label)

    def generate():
        with fh:
            line_no = first_data_line
            for row in rows:
                yield convert(row, line_no)
                line_no += 1
            try:
                for row in reader:
                    if not row:
                        continue
                    yield convert(row, line_no)
                    line_no += 1
            except csv.Error as exc:
                raise DataError(f"{path}:{line_no}: malformed CSV: {exc}") from exc

    name = os.path.splitext(os.path.basename(path))[0]
    return StreamSource(schema, generate(), name=name)


def _sniff_header(rows):
    """Header heuristic: some first-row cell is non-numeric while the cell
    below it parses as a number."""
    if len(rows) < 2:
        return False
    first, second = rows[0], rows[1]
    for a, b in zip(first, second):
        if _parse_float(a.strip()) is None and _parse_float(b.strip()) is not None:
            return True
    return False


def _resolve_column(label_column, col_names, n_cols):
    if label_column is None:
        return n_cols - 1
    if isinstance(label_column, int):
        idx = label_column if label_column >= 0 else n_cols + label_column
        if not 0 <= idx < n_cols:
            raise ConfigError(f"label column index {label_column} out of range")
        return idx
    if label_column in col_names:
        return col_names.index(label_column)
    raise ConfigError(f"unknown label column {label_column!r}")


def _resolve_overrides(type_overrides, col_names, n_cols):
    overrides = {}
    for key, kind in (type_overrides or {}).items():
        if kind not in (NUMERIC, CATEGORICAL):
            raise ConfigError(f"type override for {key!r} must be numeric or categorical")
        overrides[_resolve_column(key, col_names, n_cols)] = kind
    return overrides


def read_arff_stream(path, label=None):
    """Stream a dense ARFF file with numeric and nominal attributes.

    The schema is taken verbatim from the @attribute declarations; the last
    attribute is the label unless `label` names another one. Sparse rows and
    missing-value tokens ('?') are rejected with positioned errors.
    """
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    fh = open(path, encoding="utf-8")
    try:
        decls = []  # (name, kind, nominal values or None)
        line_no = 0
        in_data = False
        for raw in fh:
            line_no += 1
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            lower = line.lower()
            if lower.startswith("@relation"):
                continue
            if lower.startswith("@attribute"):
                decls.append(_parse_arff_attribute(line, path, line_no))
                continue
            if lower.startswith("@data"):
                in_data = True
                break
            raise DataError(f"{path}:{line_no}: unexpected line before @data: {line!r}")
        if not in_data:
            raise DataError(f"{path}: no @data section")
        if len(decls) < 2:
            raise DataError(f"{path}: need at least one feature and a label attribute")

        names = [d[0] for d in decls]
        if label is None:
            label_idx = len(decls) - 1
        else:
            label_idx = _resolve_column(label, names, len(decls))
        if decls[label_idx][1] != CATEGORICAL:
            raise DataError(f"{path}: label attribute {names[label_idx]!r} must be nominal")

        feature_cols = [j for j in range(len(decls)) if j != label_idx]
        attributes = []
        for j in feature_cols:
            name, kind, values = decls[j]
            if kind == CATEGORICAL:
                attributes.append(Attribute(name, CATEGORICAL, max(2, len(values))))
            else:
                attributes.append(Attribute(name, NUMERIC))
        classes = decls[label_idx][2]
        try:
            schema = Schema(tuple(attributes), tuple(classes))
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from exc
        value_maps = {
            j: {v: i for i, v in enumerate(decls[j][2])}
            for j in range(len(decls))
            if decls[j][1] == CATEGORICAL
        }
    except BaseException:
        fh.close()
        raise

    def generate():
        with fh:
            n = line_no
            for raw in fh:
                n += 1
                line = raw.strip()
                if not line or line.startswith("%"):
                    continue
                if line.startswith("{"):
                    raise DataError(f"{path}:{n}: sparse ARFF rows are not supported")
                tokens = [_strip_quotes(t.strip()) for t in next(csv.reader([line]))]
                if len(tokens) != len(decls):
                    raise DataError(
                        f"{path}:{n}: expected {len(decls)} values, got {len(tokens)}"
                    )
                values = []
                for j in feature_cols:
                    token = tokens[j]
                    if token == "?":
                        raise DataError(f"{path}:{n}: missing value in {names[j]!r}")
                    if decls[j][1] == NUMERIC:
                        x = _parse_float(token)
                        if x is None:
                            raise DataError(
                                f"{path}:{n}: cannot parse {token!r} as a number in {names[j]!r}"
                            )
                        values.append(x)
                    else:
                        idx = value_maps[j].get(token)
                        if idx is None:
                            raise DataError(
                                f"{path}:{n}: {token!r} is not a declared value of {names[j]!r}"
                            )
                        values.append(idx)
                token = tokens[label_idx]
                if token == "?":
                    raise DataError(f"{path}:{n}: missing class label")
                cls = value_maps[label_idx].get(token)
                if cls is None:
                    raise DataError(f"{path}:{n}: {token!r} is not a declared class label")
                yield Instance(values, cls)

    name = os.path.splitext(os.path.basename(path))[0]
    return StreamSource(schema, generate(), name=name)


def _strip_quotes(token):
    if len(token) >= 2 and token[0] == token[-1] and token[0] in ("'", '"'):
        return token[1:-1]
    return token


def _parse_arff_attribute(line, path, line_no):
    rest = line[len("@attribute"):].strip()
    if not rest:
        raise DataError(f"{path}:{line_no}: @attribute without a name")
    if rest[0] in ("'", '"'):
        quote = rest[0]
        end = rest.find(quote, 1)
        if end < 0:
            raise DataError(f"{path}:{line_no}: unterminated attribute name")
        name = rest[1:end]
        spec = rest[end + 1:].strip()
    else:
        parts = rest.split(None, 1)
        if len(parts) != 2:
            raise DataError(f"{path}:{line_no}: @attribute needs a name and a type")
        name, spec = parts[0], parts[1].strip()
    if spec.startswith("{"):
        if not spec.endswith("}"):
            raise DataError(f"{path}:{line_no}: unterminated nominal specification")
        inner = spec[1:-1]
        values = [_strip_quotes(t.strip()) for t in next(csv.reader([inner]))]
        values = [v for v in values if v != ""]
        if len(values) < 2:
            raise DataError(f"{path}:{line_no}: nominal attribute needs >= 2 values")
        return (name, CATEGORICAL, tuple(values))
    if spec.lower() in ("numeric", "real", "integer"):
        return (name, NUMERIC, None)
    raise DataError(
        f"{path}:{line_no}: unsupported attribute type {spec!r} "
        "(only numeric and nominal are supported)"
    )


def generate_random_tree_stream(
    seed, n_attrs=5, n_classes=2, depth=3, n_instances=10000, noise=0.0
):
    """Synthetic stream labeled by a fixed random decision tree.

    Attribute vectors are uniform on [0, 1]^n_attrs; the labeling tree splits
    a random attribute at a threshold drawn uniformly from [0.25, 0.75] at
    every internal node down to `depth`, where leaves carry uniform random
    classes. With probability `noise` the label is flipped to a uniformly
    chosen other class. Fully deterministic per seed; the labeling rule is
    exposed as `source.labeler`.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not 0.0 <= noise < 0.5:
        raise ValueError("noise must be in [0, 0.5)")
    if n_attrs < 1 or n_classes < 2:
        raise ValueError("need n_attrs >= 1 and n_classes >= 2")
    rng = random.Random(seed)

    def build(level):
        if level == depth:
            return rng.randrange(n_classes)
        return (
            rng.randrange(n_attrs),
            rng.uniform(0.25, 0.75),
            build(level + 1),
            build(level + 1),
        )

    rule = build(0)

    def labeler(values):
        node = rule
        while not isinstance(node, int):
            attr, threshold, left, right = node
            node = left if values[attr] <= threshold else right
        return node

    schema = Schema(
        tuple(Attribute(f"a{i}", NUMERIC) for i in range(n_attrs)),
        tuple(f"c{i}" for i in range(n_classes)),
    )

    def generate():
        for _ in range(n_instances):
            values = [rng.random() for _ in range(n_attrs)]
            label = labeler(values)
            if noise > 0.0 and rng.random() < noise:
                label = (label + 1 + rng.randrange(n_classes - 1)) % n_classes
            yield Instance(values, label)

    name = f"synthetic_s{seed}_a{n_attrs}_c{n_classes}_d{depth}_n{n_instances}"
    if noise > 0.0:
        name += f"_x{noise:g}".replace(".", "p")
    source = StreamSource(schema, generate(), name=name, count_hint=n_instances)
    source.labeler = labeler
    return source


def parse_synthetic_spec(spec):
    """Parse "attrs=5,classes=2,depth=3,n=100000,noise=0.1" into generator
    keyword arguments."""
    kwargs = {"n_attrs": 5, "n_classes": 2, "depth": 3, "n_instances": 10000, "noise": 0.0}
    keys = {
        "attrs": ("n_attrs", int),
        "classes": ("n_classes", int),
        "depth": ("depth", int),
        "n": ("n_instances", int),
        "noise": ("noise", float),
    }
    if spec:
        for part in spec.split(","):
            part = part.strip()
            if not part:
                continue
            if "=" not in part:
                raise ConfigError(f"bad synthetic spec item {part!r} (expected key=value)")
            key, _, raw = part.partition("=")
            key = key.strip()
            if key not in keys:
                raise ConfigError(
                    f"unknown synthetic spec key {key!r}; expected one of {sorted(keys)}"
                )
            target, cast = keys[key]
            try:
                kwargs[target] = cast(raw.strip())
            except ValueError as exc:
                raise ConfigError(f"bad value for synthetic key {key!r}: {raw!r}") from exc
    return kwargs


def open_stream(path_or_spec, fmt, seed=0, **reader_options):
    """Open a stream source by format: csv, arff, or synthetic."""
    if fmt == "csv":
        return read_csv_stream(path_or_spec, **reader_options)
    if fmt == "arff":
        return read_arff_stream(path_or_spec, label=reader_options.get("label_column"))
    if fmt == "synthetic":
        return generate_random_tree_stream(seed, **parse_synthetic_spec(path_or_spec))
    raise ConfigError(f"unknown format {fmt!r}; expected csv, arff, or synthetic")
