import pytest

from flowforge.components.preprocess import (
    change_type,
    clean_rows,
    delay_frame,
    filter_rows,
    fork,
    join_assemble,
)
from flowforge.errors import ComponentError, SqlError
from flowforge.frame import FLOAT64, INT64, UTF8, ColumnRole, Frame, vector


def int_col(values, role=ColumnRole.PLAIN, name="a"):
    return Frame.from_columns([(name, INT64, role, list(values))])


def test_clean_drop_null():
    frame = int_col([1, None, 3])
    assert clean_rows(frame, "drop_null").column("a") == (1, 3)


def test_clean_fill():
    frame = int_col([1, None, 3])
    assert clean_rows(frame, "fill", value=0).column("a") == (1, 0, 3)


def test_clean_fill_type_mismatch():
    frame = int_col([1, None])
    with pytest.raises(ComponentError, match="match"):
        clean_rows(frame, "fill", value="zero")


def test_clean_drop_outlier_sample_std():
    # [0, 0, 0, 100]: mean 25, sample std 50, z(100) = 1.5, z(0) = 0.5
    frame = int_col([0, 0, 0, 100])
    assert clean_rows(frame, "drop_outlier", zmax=1.4).column("a") == (0, 0, 0)
    assert clean_rows(frame, "drop_outlier", zmax=2.0).column("a") == (0, 0, 0, 100)


def test_clean_outlier_ignores_constant_columns():
    frame = int_col([5, 5, 5])
    assert clean_rows(frame, "drop_outlier", zmax=0.1).row_count == 3


def test_filter_rows_examples():
    frame = int_col([1, 2, 3])
    assert filter_rows(frame, "a > 1").column("a") == (2, 3)
    assert filter_rows(frame, "true").column("a") == (1, 2, 3)
    with pytest.raises(SqlError):
        filter_rows(frame, "a + 1")  # not boolean
    with pytest.raises(SqlError):
        filter_rows(frame, "a >")  # parse error


def test_filter_rows_matches_brute_force():
    import random

    from flowforge.minisql import parse_expression
    from naive_sql import naive_eval

    rng = random.Random(3)
    for _ in range(30):
        rows = rng.randint(0, 10)
        frame = Frame.from_columns(
            [
                ("a", INT64, ColumnRole.PLAIN, [rng.randint(-4, 4) for _ in range(rows)]),
                ("x", FLOAT64, ColumnRole.PLAIN, [rng.uniform(-2, 2) for _ in range(rows)]),
            ]
        )
        predicate = f"a {rng.choice(['<', '>', '=', '!='])} {rng.randint(-3, 3)} " \
                    f"{rng.choice(['AND', 'OR'])} x {rng.choice(['<', '>'])} 0"
        expr = parse_expression(predicate)
        expected = [
            i
            for i, row in enumerate(frame.rows())
            if naive_eval(expr, row) is True
        ]
        got = filter_rows(frame, predicate)
        assert got.column("a") == tuple(frame.column("a")[i] for i in expected)


def test_change_type_examples():
    frame = Frame.from_columns([("a", UTF8, ColumnRole.PLAIN, ["1", "2"])])
    out = change_type(frame, "a", INT64)
    assert out.column("a") == (1, 2)
    assert out.schema.column("a").dtype == INT64

    bad = Frame.from_columns([("a", UTF8, ColumnRole.PLAIN, ["x"])])
    with pytest.raises(ComponentError, match="row 0"):
        change_type(bad, "a", INT64)


def test_change_type_int_float_round_trip():
    frame = int_col([0, 1, 2**52, -(2**52)])
    there = change_type(frame, "a", FLOAT64)
    back = change_type(there, "a", INT64)
    assert back.column("a") == frame.column("a")


def test_change_type_fractional_float_to_int_errors():
    frame = Frame.from_columns([("a", FLOAT64, ColumnRole.PLAIN, [1.5])])
    with pytest.raises(ComponentError, match="row 0"):
        change_type(frame, "a", INT64)


def test_change_type_preserves_role_and_none():
    frame = Frame.from_columns([("a", UTF8, ColumnRole.LABEL, ["1", None])])
    out = change_type(frame, "a", INT64)
    assert out.schema.column("a").role is ColumnRole.LABEL
    assert out.column("a") == (1, None)


def test_join_positional_merge():
    left = int_col([1, 2], role=ColumnRole.FEATURE)
    right = int_col([3, 4], role=ColumnRole.FEATURE, name="b")
    out = join_assemble([left, right], output="features")
    assert out.schema.column("features").dtype == vector(2)
    assert out.column("features") == ((1.0, 3.0), (2.0, 4.0))


def test_join_row_count_mismatch():
    left = int_col([1, 2], role=ColumnRole.FEATURE)
    right = int_col([3], role=ColumnRole.FEATURE, name="b")
    with pytest.raises(ComponentError, match="mismatch"):
        join_assemble([left, right])


def test_join_non_numeric_feature_rejected():
    bad = Frame.from_columns([("s", UTF8, ColumnRole.FEATURE, ["x"])])
    with pytest.raises(ComponentError, match="non-numeric"):
        join_assemble([bad])


def test_join_carries_label_from_first_frame():
    first = Frame.from_columns(
        [
            ("f", FLOAT64, ColumnRole.FEATURE, [1.0]),
            ("y", UTF8, ColumnRole.LABEL, ["pos"]),
        ]
    )
    second = int_col([7], role=ColumnRole.FEATURE, name="g")
    out = join_assemble([first, second])
    assert out.schema.column("y").role is ColumnRole.LABEL
    assert out.column("y") == ("pos",)
    assert out.column("features") == ((1.0, 7.0),)


def test_join_dim_additivity_random():
    import random

    rng = random.Random(9)
    for _ in range(20):
        frames = []
        widths = 0
        for k in range(rng.randint(1, 4)):
            cols = []
            for c in range(rng.randint(1, 3)):
                if rng.random() < 0.5:
                    dim = rng.randint(1, 3)
                    widths += dim
                    cols.append(
                        (f"v{k}_{c}", vector(dim), ColumnRole.FEATURE, [tuple([1.0] * dim)] * 2)
                    )
                else:
                    widths += 1
                    cols.append((f"n{k}_{c}", FLOAT64, ColumnRole.FEATURE, [0.5, 1.5]))
            frames.append(Frame.from_columns(cols))
        out = join_assemble(frames)
        assert out.schema.column("features").dtype.dim == widths


def test_fork_aliases():
    handles = fork("some-handle", 3)
    assert handles == ["some-handle"] * 3
    with pytest.raises(ComponentError):
        fork("h", 1)


def test_delay_is_identity():
    frame = int_col([1, 2, 3])
    assert delay_frame(frame, ms_per_row=0.0, fixed_ms=0.0) is frame
