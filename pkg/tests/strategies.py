"""Shared hypothesis strategies."""
from math import comb

import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hypoflow.exterior import Form, MultiVector

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def coeffs(n):
    return arrays(np.float64, n, elements=finite)


@st.composite
def forms(draw, grade=None, dim=5):
    k = draw(st.integers(0, dim)) if grade is None else grade
    return Form(dim, k, draw(coeffs(comb(dim, k))))


@st.composite
def multivectors(draw, grade=None, dim=5):
    k = draw(st.integers(0, dim)) if grade is None else grade
    return MultiVector(dim, k, draw(coeffs(comb(dim, k))))


def params(n, lo=-2.0, hi=2.0):
    return st.tuples(*[st.floats(lo, hi, allow_nan=False) for _ in range(n)])
