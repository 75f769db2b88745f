import numpy as np


def random_rows(rng, ell, floor=0.02):
    P = rng.dirichlet(np.ones(ell), size=ell) + floor
    return P / P.sum(axis=1, keepdims=True)


def random_simplex(rng, ell):
    return rng.dirichlet(np.ones(ell))


ACCEPTANCE_LINES = []


def report(number, passed, detail):
    """Record and print one acceptance line."""
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed
