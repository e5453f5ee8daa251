import pytest

from fieldsched.values import ABSENT, Absent, NeighborField, values_equal


def test_field_iterates_in_ascending_id_order():
    field = NeighborField({5: "c", 1: "a", 3: "b"})
    assert field.ids() == (1, 3, 5)
    assert field.values() == ("a", "b", "c")


def test_field_rejects_nested_fields():
    inner = NeighborField({1: 1.0})
    with pytest.raises(ValueError):
        NeighborField({2: inner})


def test_field_rejects_non_integer_keys():
    with pytest.raises(TypeError):
        NeighborField({"a": 1.0})


def test_field_lookup_and_without():
    field = NeighborField({1: 10.0, 2: 20.0})
    assert field[1] == 10.0
    assert field.get(3) is None
    assert 2 in field
    assert field.without(1).ids() == (2,)


def test_absent_is_a_singleton():
    assert Absent() is ABSENT


def test_values_equal_scalars():
    assert values_equal(1.0, 1)
    assert values_equal(True, True)
    assert not values_equal(True, 1)  # bool and number stay distinct
    assert not values_equal(1.0, 1.0 + 1e-12)  # exact float comparison
    assert values_equal("x", "x")
    assert not values_equal(ABSENT, 0.0)
    assert values_equal(ABSENT, ABSENT)


def test_values_equal_structures():
    assert values_equal((1.0, "a"), (1, "a"))
    assert not values_equal((1.0,), (1.0, 2.0))
    assert values_equal(NeighborField({1: 2.0}), NeighborField({1: 2}))
    assert not values_equal(NeighborField({1: 2.0}), NeighborField({2: 2.0}))
