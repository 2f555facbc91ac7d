import numpy as np
from hypothesis import settings, strategies as st

from weaklinf.metric_measure import MetricMeasureSpace, SampleFunction

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@st.composite
def spaces(draw, max_atoms=10, max_dim=2):
    n = draw(st.integers(1, max_atoms))
    dim = draw(st.integers(1, max_dim))
    # integer grid coordinates keep distances exact and produce ties
    pts = draw(
        st.lists(
            st.tuples(*[st.integers(-8, 8) for _ in range(dim)]),
            min_size=n,
            max_size=n,
            unique=True,
        )
    )
    masses = [2.0 ** -draw(st.integers(0, 5)) for _ in range(n)]
    return MetricMeasureSpace(np.arange(n), masses, coords=np.array(pts, dtype=float))


@st.composite
def sample_functions(draw, max_atoms=10, max_dim=2):
    space = draw(spaces(max_atoms, max_dim))
    vals = draw(
        st.lists(
            st.one_of(st.integers(-6, 6).map(float), st.floats(-20, 20, allow_nan=False, allow_infinity=False)),
            min_size=space.n,
            max_size=space.n,
        )
    )
    return SampleFunction(space, vals)


_results = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    _results[criterion] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_results):
        passed, detail = _results[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
