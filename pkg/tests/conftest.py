import numpy as np
import pytest

from phint import collocation as coll


@pytest.fixture(scope="session")
def all_schemes():
    """Every scheme the package constructs, keyed by (kind, s)."""
    out = {}
    for s in coll.GAUSS_STAGE_RANGE:
        out[(coll.GAUSS, s)] = coll.make_scheme(coll.GAUSS, s)
    for s in coll.LOBATTO_STAGE_RANGE:
        out[(coll.LOBATTO, s)] = coll.make_scheme(coll.LOBATTO, s)
    return out


def leggauss_integral(fn, npts=40):
    """High-order Gauss-Legendre quadrature of fn over [0, 1]; the independent
    oracle the table integrals are checked against."""
    x, w = np.polynomial.legendre.leggauss(npts)
    t = 0.5 * (x + 1.0)
    return 0.5 * float(w @ np.array([fn(v) for v in t]))
