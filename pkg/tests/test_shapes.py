import pytest
from hypothesis import given
from hypothesis import strategies as st

from looplock.dsl import parse_shape
from looplock.shapes import ID, Coprod, Input, Output, Prod, complement, format_shape, refines
from looplock.typesys import Opaque

T, U = Opaque("T"), Opaque("U")

shapes = st.recursive(
    st.just(ID),
    lambda inner: st.one_of(
        st.builds(Input, inner, st.sampled_from([T, U])),
        st.builds(Output, inner, st.sampled_from([T, U])),
        st.builds(Prod, inner, inner),
        st.builds(Coprod, inner, inner),
    ),
    max_leaves=6,
)


def test_complement_of_id():
    assert complement(ID) == ID


def test_complement_swaps_ports():
    assert complement(Output(Input(ID, T), U)) == Input(Output(ID, T), U)


def test_complement_swaps_products():
    assert complement(Prod(Input(ID, T), Output(ID, U))) == Coprod(Output(ID, T), Input(ID, U))


@given(shapes)
def test_complement_involution(f):
    assert complement(complement(f)) == f


@given(shapes)
def test_id_refines_everything(f):
    assert refines(ID, f)
    assert refines(f, f)


def test_input_does_not_refine_output():
    assert not refines(Input(ID, T), Output(ID, T))
    assert not refines(Output(ID, T), Input(ID, T))


def test_generating_rules():
    f, g = Input(ID, T), Output(ID, U)
    for composite in (Prod(f, g), Coprod(f, g)):
        assert refines(f, composite) and refines(g, composite)
    assert refines(f, Output(f, U))
    assert refines(f, Input(f, U))
    assert not refines(Prod(f, g), f)


@given(shapes, shapes)
def test_complement_preserves_refinement(f, g):
    assert refines(f, g) == refines(complement(f), complement(g))


@given(shapes)
def test_format_round_trip(f):
    assert parse_shape(format_shape(f)) == f
    assert parse_shape(format_shape(f, unicode=True)) == f


@pytest.mark.parametrize("text", ["(Id^T)_T", "Id^T x Id_(T + U)", "Id_T (+) Id^T", "(Id x Id)^T"])
def test_format_examples(text):
    assert format_shape(parse_shape(text)) == text
