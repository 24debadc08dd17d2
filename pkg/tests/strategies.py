import numpy as np
from hypothesis import strategies as st

from agents import random_agent
from gl_eval import FixedPointSystem
from modal_core import BOTTOM, TOP, And, Box, Iff, Implies, Not, Or, Var

NAMES = ("a", "b", "c", "p_1", "x.C", "b_vs_DB.D")


def names():
    return st.sampled_from(NAMES)


def _extend(children):
    return st.one_of(
        st.builds(Not, children),
        st.builds(Box, children),
        st.builds(And, children, children),
        st.builds(Or, children, children),
        st.builds(Implies, children, children),
        st.builds(Iff, children, children),
    )


def formulas(var_names=names(), max_leaves=40):
    leaves = st.one_of(st.just(TOP), st.just(BOTTOM), st.builds(Var, var_names))
    return st.recursive(leaves, _extend, max_leaves=max_leaves)


def modalized(var_names, max_leaves=12):
    """Formulas whose variables only occur under a Box."""
    inner = formulas(st.sampled_from(var_names), max_leaves=max_leaves)
    leaves = st.one_of(st.just(TOP), st.just(BOTTOM), st.builds(Box, inner))
    return st.recursive(leaves, _extend, max_leaves=6)


@st.composite
def systems(draw, max_vars=3):
    count = draw(st.integers(min_value=1, max_value=max_vars))
    var_names = tuple(f"p{i}" for i in range(count))
    defs = tuple(draw(modalized(var_names)) for _ in var_names)
    return FixedPointSystem(var_names, defs)


def bindings(var_names=names()):
    return st.dictionaries(var_names, formulas(max_leaves=6), max_size=3)


@st.composite
def agents(draw, name="R", actions=("C", "D")):
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    return random_agent(np.random.default_rng(seed), name=name, actions=actions)
