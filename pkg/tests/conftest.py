import numpy as np
from hypothesis import settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)


@st.composite
def hermitian(draw, dim=None, max_dim=6):
    n = dim or draw(st.integers(1, max_dim))
    re = draw(arrays(float, (n, n), elements=finite))
    im = draw(arrays(float, (n, n), elements=finite))
    a = re + 1j * im
    return 0.5 * (a + a.conj().T)


@st.composite
def states(draw, dim=None, min_dim=2, max_dim=9):
    n = dim or draw(st.integers(min_dim, max_dim))
    re = draw(arrays(float, n, elements=finite))
    im = draw(arrays(float, n, elements=finite))
    v = re + 1j * im
    norm = np.linalg.norm(v)
    if norm < 1e-3:
        v = np.zeros(n, complex)
        v[0] = 1.0
        return v
    return v / norm


@st.composite
def probability_vectors(draw, dim=None, min_dim=2, max_dim=9):
    n = dim or draw(st.integers(min_dim, max_dim))
    w = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n)))
    return w / w.sum()


def random_state(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)
