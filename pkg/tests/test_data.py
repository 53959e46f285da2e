"""Reader and synthetic-generator tests."""

import pytest

from streamtree.data import (
    generate_random_tree_stream,
    parse_synthetic_spec,
    read_arff_stream,
    read_csv_stream,
)
from streamtree.errors import ConfigError, DataError
from streamtree.tree import CATEGORICAL, NUMERIC


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


# -- CSV -----------------------------------------------------------------------


def test_csv_numeric_schema_inference(tmp_path):
    path = write(tmp_path, "t.csv", "a,b,class\n1.0,2.0,x\n3.5,4.0,y\n5.0,6.5,x\n")
    source = read_csv_stream(path)
    assert [a.kind for a in source.schema.attributes] == [NUMERIC, NUMERIC]
    assert [a.name for a in source.schema.attributes] == ["a", "b"]
    assert source.schema.classes == ("x", "y")
    rows = list(source)
    assert len(rows) == 3
    assert rows[0].values == [1.0, 2.0] and rows[0].label == 0
    assert rows[1].label == 1


def test_csv_token_column_is_categorical(tmp_path):
    path = write(
        tmp_path,
        "t.csv",
        "shade,v,class\nred,1,x\ngreen,2,y\nblue,3,x\nred,4,y\n",
    )
    source = read_csv_stream(path)
    shade = source.schema.attributes[0]
    assert shade.kind == CATEGORICAL and shade.arity == 3
    rows = list(source)
    assert [r.values[0] for r in rows] == [0, 1, 2, 0]  # first-seen order


def test_csv_headerless_auto_detection(tmp_path):
    path = write(tmp_path, "t.csv", "1.0,2.0,x\n3.0,4.0,y\n")
    source = read_csv_stream(path)
    assert [a.name for a in source.schema.attributes] == ["col0", "col1"]
    assert len(list(source)) == 2


def test_csv_explicit_header_flags(tmp_path):
    path = write(tmp_path, "t.csv", "one,two,three\n1.0,2.0,x\n3.0,4.0,y\n")
    assert len(list(read_csv_stream(path, header=True))) == 2
    # forcing no-header on a numeric file makes the header row an unparseable cell
    with pytest.raises(DataError, match=r"t\.csv:1"):
        list(read_csv_stream(path, header=False))
    # all-token files cannot be auto-sniffed; explicit no-header keeps every row
    tokens = write(tmp_path, "k.csv", "red,x\ngreen,y\nblue,x\n")
    assert len(list(read_csv_stream(tokens, header=False))) == 3


def test_csv_label_column_selection(tmp_path):
    path = write(tmp_path, "t.csv", "cls,a\nx,1.0\ny,2.0\nx,3.0\n")
    source = read_csv_stream(path, label_column="cls")
    assert source.schema.classes == ("x", "y")
    assert [a.name for a in source.schema.attributes] == ["a"]
    source = read_csv_stream(path, label_column=0)
    assert [r.label for r in source] == [0, 1, 0]
    with pytest.raises(ConfigError):
        read_csv_stream(path, label_column="nope")


def test_csv_type_override_forces_categorical(tmp_path):
    path = write(tmp_path, "t.csv", "code,class\n1,x\n2,y\n1,x\n")
    source = read_csv_stream(path, type_overrides={"code": CATEGORICAL})
    assert source.schema.attributes[0].kind == CATEGORICAL
    assert [r.values[0] for r in source] == [0, 1, 0]


def test_csv_bad_cell_positioned_error(tmp_path):
    path = write(tmp_path, "t.csv", "a,class\n1.0,x\noops,y\n")
    source = read_csv_stream(path)
    with pytest.raises(DataError, match=r"t\.csv:3.*oops"):
        list(source)


def test_csv_unknown_label_after_prefix(tmp_path):
    path = write(tmp_path, "t.csv", "a,class\n1.0,x\n2.0,y\n3.0,z\n")
    source = read_csv_stream(path, infer_rows=2)
    with pytest.raises(DataError, match=r"t\.csv:4.*'z'"):
        list(source)


def test_csv_unseen_categorical_value_after_prefix(tmp_path):
    path = write(tmp_path, "t.csv", "k,class\nred,x\nblue,y\ngreen,x\n")
    source = read_csv_stream(path, header=True, infer_rows=2)
    with pytest.raises(DataError, match="green"):
        list(source)


def test_csv_too_many_tokens_becomes_numeric_then_errors(tmp_path):
    lines = ["k,class"] + [f"tok{i},{'x' if i % 2 else 'y'}" for i in range(50)]
    path = write(tmp_path, "t.csv", "\n".join(lines) + "\n")
    source = read_csv_stream(path, header=True)
    assert source.schema.attributes[0].kind == NUMERIC
    with pytest.raises(DataError, match="tok0"):
        list(source)


def test_csv_empty_cell_rejected(tmp_path):
    path = write(tmp_path, "t.csv", "a,class\n1.0,x\n,y\n")
    with pytest.raises(DataError, match=r"t\.csv:3"):
        list(read_csv_stream(path))


def test_csv_missing_file():
    with pytest.raises(DataError, match="missing.csv"):
        read_csv_stream("missing.csv")


def test_csv_single_class_rejected(tmp_path):
    path = write(tmp_path, "t.csv", "a,class\n1.0,x\n2.0,x\n")
    with pytest.raises(DataError, match="fewer than 2"):
        read_csv_stream(path)


# -- ARFF -----------------------------------------------------------------------


ARFF_MINIMAL = """\
% comment
@relation toy
@attribute shade {red, green, blue}
@attribute class {x, y}
@data
red, x
green, y
blue, x
"""


def test_arff_minimal_nominal(tmp_path):
    path = write(tmp_path, "t.arff", ARFF_MINIMAL)
    source = read_arff_stream(path)
    assert source.schema.attributes[0].kind == CATEGORICAL
    assert source.schema.attributes[0].arity == 3
    assert source.schema.classes == ("x", "y")
    rows = list(source)
    assert [(r.values[0], r.label) for r in rows] == [(0, 0), (1, 1), (2, 0)]


def test_arff_mixed_declarations(tmp_path):
    text = (
        "@relation m\n@attribute size numeric\n@attribute shade {a, b}\n"
        "@attribute class {p, q}\n@data\n1.5, a, p\n2.5, b, q\n"
    )
    source = read_arff_stream(write(tmp_path, "m.arff", text))
    kinds = [a.kind for a in source.schema.attributes]
    assert kinds == [NUMERIC, CATEGORICAL]
    rows = list(source)
    assert rows[0].values == [1.5, 0]


def test_arff_missing_value_rejected(tmp_path):
    text = "@attribute a numeric\n@attribute class {x, y}\n@data\n?, x\n"
    with pytest.raises(DataError, match="missing value"):
        list(read_arff_stream(write(tmp_path, "t.arff", text)))


def test_arff_sparse_rejected(tmp_path):
    text = "@attribute a numeric\n@attribute class {x, y}\n@data\n{0 1.0}, x\n"
    with pytest.raises(DataError, match="sparse"):
        list(read_arff_stream(write(tmp_path, "t.arff", text)))


def test_arff_undeclared_nominal_value(tmp_path):
    text = "@attribute a {u, v}\n@attribute class {x, y}\n@data\nw, x\n"
    with pytest.raises(DataError, match="'w'"):
        list(read_arff_stream(write(tmp_path, "t.arff", text)))


def test_arff_numeric_label_rejected(tmp_path):
    text = "@attribute a {u, v}\n@attribute class numeric\n@data\nu, 1\n"
    with pytest.raises(DataError, match="must be nominal"):
        read_arff_stream(write(tmp_path, "t.arff", text))


def test_arff_quoted_names_and_values(tmp_path):
    text = (
        "@attribute 'my attr' {'va l', other}\n@attribute class {x, y}\n"
        "@data\n'va l', x\nother, y\n"
    )
    source = read_arff_stream(write(tmp_path, "t.arff", text))
    assert source.schema.attributes[0].name == "my attr"
    assert [r.values[0] for r in source] == [0, 1]


def test_arff_unsupported_type(tmp_path):
    text = "@attribute a string\n@attribute class {x, y}\n@data\nfoo, x\n"
    with pytest.raises(DataError, match="unsupported"):
        read_arff_stream(write(tmp_path, "t.arff", text))


def test_csv_arff_roundtrip_same_instances(tmp_path):
    rows = [
        (1.5, "red", "x"),
        (2.5, "green", "y"),
        (0.5, "red", "y"),
        (3.5, "blue", "x"),
    ]
    csv_text = "v,shade,class\n" + "\n".join(f"{v},{s},{c}" for v, s, c in rows) + "\n"
    arff_text = (
        "@relation r\n@attribute v numeric\n@attribute shade {red, green, blue}\n"
        "@attribute class {x, y}\n@data\n"
        + "\n".join(f"{v}, {s}, {c}" for v, s, c in rows)
        + "\n"
    )
    src_csv = read_csv_stream(write(tmp_path, "r.csv", csv_text))
    src_arff = read_arff_stream(write(tmp_path, "r.arff", arff_text))
    # compare through each schema so value-index assignment cannot mask skew
    csv_rows = [
        (v.values[0], v.values[1], src_csv.schema.classes[v.label]) for v in src_csv
    ]
    arff_rows = [
        (v.values[0], v.values[1], src_arff.schema.classes[v.label]) for v in src_arff
    ]
    assert csv_rows == arff_rows


def test_csv_fuzzed_corruption_errors_instead_of_yielding(tmp_path):
    """Random corruptions either parse cleanly under the schema or raise a
    DataError; no yielded instance may violate the schema."""
    import random as _random

    rng = _random.Random(99)
    base_rows = [
        f"{rng.uniform(0, 10):.3f},{rng.choice('abc')},{rng.choice('xy')}"
        for _ in range(40)
    ]
    corruptions = (
        lambda r: r.rsplit(",", 1)[0],          # drop the label column
        lambda r: "oops," + r.split(",", 1)[1],  # garbage numeric cell
        lambda r: r[: r.index(",")] + ",zz," + r.rsplit(",", 1)[1],  # new token
        lambda r: r + ",extra",                  # extra column
        lambda r: ",".join(["", *r.split(",")[1:]]),  # empty cell
        lambda r: r.rsplit(",", 1)[0] + ",q",    # unknown label
    )
    for trial in range(30):
        rows = list(base_rows)
        for _ in range(rng.randrange(1, 4)):
            idx = rng.randrange(20, len(rows))  # keep the inference prefix clean
            rows[idx] = corruptions[rng.randrange(len(corruptions))](rows[idx])
        path = write(tmp_path, f"fuzz{trial}.csv", "v,shade,class\n" + "\n".join(rows) + "\n")
        source = read_csv_stream(path, header=True, infer_rows=20)
        schema = source.schema
        arities = [a.arity for a in schema.attributes]
        try:
            for inst in source:
                assert len(inst.values) == len(schema.attributes)
                assert 0 <= inst.label < len(schema.classes)
                for value, attribute, arity in zip(inst.values, schema.attributes, arities):
                    if attribute.kind == CATEGORICAL:
                        assert 0 <= value < arity
                    else:
                        assert isinstance(value, float)
        except DataError:
            pass  # rejecting the corruption is the expected outcome


# -- synthetic generator -------------------------------------------------------------


def test_generator_deterministic_per_seed():
    a = list(generate_random_tree_stream(21, n_attrs=3, n_instances=500, noise=0.2))
    b = list(generate_random_tree_stream(21, n_attrs=3, n_instances=500, noise=0.2))
    assert a == b


def test_generator_noise_free_labels_match_rule():
    source = generate_random_tree_stream(22, n_attrs=4, n_classes=3, n_instances=2000)
    labeler = source.labeler
    for instance in source:
        assert instance.label == labeler(instance.values)


def test_generator_flip_rate_matches_noise():
    source = generate_random_tree_stream(
        23, n_attrs=3, n_classes=2, n_instances=100000, noise=0.1
    )
    labeler = source.labeler
    flips = sum(1 for inst in source if inst.label != labeler(inst.values))
    assert abs(flips / 100000 - 0.1) < 0.01


def test_generator_validation():
    with pytest.raises(ValueError):
        generate_random_tree_stream(0, depth=0)
    with pytest.raises(ValueError):
        generate_random_tree_stream(0, noise=0.7)


def test_parse_synthetic_spec():
    kwargs = parse_synthetic_spec("attrs=7,classes=3,depth=2,n=123,noise=0.25")
    assert kwargs == {
        "n_attrs": 7,
        "n_classes": 3,
        "depth": 2,
        "n_instances": 123,
        "noise": 0.25,
    }
    with pytest.raises(ConfigError):
        parse_synthetic_spec("bogus=1")
    with pytest.raises(ConfigError):
        parse_synthetic_spec("attrs")
