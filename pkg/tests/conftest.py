from fractions import Fraction

import pytest

from scmid.graph import parse_graph
from scmid.matrix import Matrix
from scmid.scm import ParamPoint

IV = "1 -> 2; 2 -> 3; 2 <-> 3"
BOW = "1 -> 2; 1 <-> 2"
CHAIN = "1 -> 2"


def graph(text: str, **kw):
    return parse_graph(text, **kw)[0]


def iv_point(a=2, b=3, w23=1, diag=(1, 2, 3)) -> ParamPoint:
    lam = Matrix([[0, a, 0], [0, 0, b], [0, 0, 0]])
    om = Matrix([[diag[0], 0, 0], [0, diag[1], w23], [0, w23, diag[2]]])
    return ParamPoint(lam, om)


@pytest.fixture
def iv():
    return graph(IV)


@pytest.fixture
def bow():
    return graph(BOW)


def frac_matrix(rows):
    return Matrix([[Fraction(x) for x in r] for r in rows])
