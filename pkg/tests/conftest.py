import numpy as np
import pytest

from gridot import (
    GridShape,
    build_bipartite,
    build_multipartite,
    from_dense,
    integerize,
    power_cost,
    solve,
    ssp_solve,
)


def random_integer_pair(shape, total, rng):
    """Balanced white-noise pair: uniform [0, 255] masses scaled to one total."""
    out = []
    for _ in range(2):
        raw = rng.integers(0, 256, size=shape.nbins).astype(np.float64)
        if not raw.any():
            raw[0] = 1.0
        out.append(integerize(from_dense(shape, raw), total))
    return tuple(out)


@pytest.fixture(scope="session")
def warm_jit():
    # compile every solver kernel once so timed tests measure solves, not the JIT
    shape = GridShape((3, 3))
    rng = np.random.default_rng(0)
    mu, nu = random_integer_pair(shape, 50, rng)
    cost = power_cost(shape, 2)
    solve(build_bipartite(mu, nu, cost))
    solve(build_multipartite(mu, nu, cost))
    ssp_solve(build_bipartite(mu, nu, cost))
    return True
