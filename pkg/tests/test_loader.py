# tests/test_loader.py
import pytest

from dataset.loader import RawTable, load_table, parse_cell
from errors import DataError


def test_example_table_types(example_table):
    assert example_table.columns == ["time", "delta", "age", "sex"]
    assert len(example_table) == 10
    first = example_table.rows[0]
    assert first[0] == pytest.approx(0.50007)
    assert first[1] == 1.0
    assert first[3] == "female"


def test_missing_tokens(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("time,delta,age\n1.5,1,.\n2,,3\n", encoding="utf-8")
    table = load_table(path)
    assert table.rows[0][2] is None
    assert table.rows[1][1] is None
    assert table.rows[1][2] == 3.0


def test_custom_missing_tokens(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("time,delta\nNA,1\n2,0\n", encoding="utf-8")
    assert load_table(path, ["NA"]).rows[0][0] is None
    assert load_table(path).rows[0][0] == "NA"


def test_column_lookup_is_case_insensitive(example_table):
    assert example_table.index("AGE") == 2
    assert example_table.has_column("Sex")
    assert example_table.column("delta")[:3] == [1.0, 0.0, 0.0]
    with pytest.raises(DataError):
        example_table.index("weight")


def test_duplicate_columns_rejected():
    with pytest.raises(DataError):
        RawTable(columns=["time", "Time"], rows=[])


def test_ragged_rows_rejected(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("time,delta\n1,1\n2\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_table(path)


def test_unreadable_and_empty_files(tmp_path):
    with pytest.raises(DataError):
        load_table(tmp_path / "missing.csv")
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(DataError):
        load_table(empty)


def test_parse_cell():
    tokens = ["", "."]
    assert parse_cell(" 2.5 ", tokens) == 2.5
    assert parse_cell(".", tokens) is None
    assert parse_cell("male", tokens) == "male"
