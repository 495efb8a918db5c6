import numpy as np
import pytest

from heatlab import exprlang as el
from heatlab.discretize import Grid, assemble
from heatlab.heatkernel import eigendecompose
from heatlab.symbols import SymbolSpec


def make_line_operator(m, n_pts=800, bounds=(-8.0, 8.0), a=1.0, potential=None):
    spec = SymbolSpec.isotropic(m, 1, a, domain=[bounds])
    grid = Grid.make(bounds, n_pts)
    return assemble(spec, grid, potential=potential)


@pytest.fixture(scope="session")
def line_m1_op():
    """m=1, a=1 on [-8, 8] with N=800: the whole-line proxy."""
    return make_line_operator(1)


@pytest.fixture(scope="session")
def line_m1(line_m1_op):
    return eigendecompose(line_m1_op)


@pytest.fixture(scope="session")
def line_m2_op():
    return make_line_operator(2)


@pytest.fixture(scope="session")
def line_m2(line_m2_op):
    return eigendecompose(line_m2_op)


@pytest.fixture(scope="session")
def unit_m1_400_op():
    """m=1, a=1 on [0, 1] with N=400: the potential-theory workhorse."""
    return make_line_operator(1, n_pts=400, bounds=(0.0, 1.0))


@pytest.fixture(scope="session")
def unit_m1_400(unit_m1_400_op):
    return eigendecompose(unit_m1_400_op)


@pytest.fixture(scope="session")
def singular_vminus(unit_m1_400_op):
    x = unit_m1_400_op.grid.node_coordinates()[:, 0]
    return np.minimum(x**-0.5, 1e6)


# ---------------------------------------------------------------------------
# random expression corpora (seeded, exact counts)
# ---------------------------------------------------------------------------

_UNARY_FNS = ("sin", "cos", "exp", "sqrt", "abs", "tanh")
_BINARY_FNS = ("pow", "min", "max")


def random_tree(rng, depth, n):
    """Random expression tree of depth <= ``depth`` over x1..xn."""
    if depth == 0 or rng.random() < 0.25:
        kind = rng.integers(0, 3)
        if kind == 0:
            return el.Num(round(float(rng.uniform(0.0, 10.0)), 6))
        if kind == 1:
            return el.Const(("pi", "e")[rng.integers(0, 2)])
        return el.Var(int(rng.integers(0, n)))
    kind = rng.integers(0, 4)
    if kind == 0:
        return el.Neg(random_tree(rng, depth - 1, n))
    if kind == 1:
        op = "+-*/^"[rng.integers(0, 5)]
        return el.BinOp(op, random_tree(rng, depth - 1, n), random_tree(rng, depth - 1, n))
    if kind == 2:
        return el.Call(_UNARY_FNS[rng.integers(0, len(_UNARY_FNS))],
                       (random_tree(rng, depth - 1, n),))
    return el.Call(_BINARY_FNS[rng.integers(0, len(_BINARY_FNS))],
                   (random_tree(rng, depth - 1, n), random_tree(rng, depth - 1, n)))


def random_precedence_text(rng, max_ops=8):
    """Random infix string over {+,-,*,^} with small integer leaves.

    At most two '^' per expression keeps all intermediate values exact in
    double precision.
    """
    nops = int(rng.integers(1, max_ops + 1))
    parts = [str(int(rng.integers(1, 4)))]
    hats = 0
    for _ in range(nops):
        op = "+-*^"[rng.integers(0, 4)]
        if op == "^":
            if hats >= 2:
                op = "*"
            else:
                hats += 1
        parts.append(op)
        parts.append(str(int(rng.integers(1, 4))))
    return "".join(parts)


def shunting_yard(text):
    """Independent precedence oracle for {+,-,*,^} with integer leaves."""
    prec = {"+": 1, "-": 1, "*": 2, "^": 3}
    out, ops = [], []

    def apply(op):
        b, a = out.pop(), out.pop()
        out.append(
            a + b if op == "+" else a - b if op == "-" else a * b if op == "*" else a**b
        )

    i = 0
    while i < len(text):
        c = text[i]
        if c.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            out.append(float(text[i:j]))
            i = j
            continue
        while ops and (
            prec[ops[-1]] > prec[c] or (prec[ops[-1]] == prec[c] and c != "^")
        ):
            apply(ops.pop())
        ops.append(c)
        i += 1
    while ops:
        apply(ops.pop())
    return out[0]
