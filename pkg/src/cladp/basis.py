"""Polynomial value-function features and their Jacobians."""

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Callable

import numpy as np

from ._validation import ContractError, check_vector


@dataclass(frozen=True)
class ValueBasis:
    """Feature map ``sigma: R^n -> R^L`` with Jacobian ``sigma_grad`` (L x n)."""

    n: int
    L: int
    sigma: Callable
    sigma_grad: Callable
    description: str = ""
    exponents: np.ndarray = None


def _monomial_exponents(n, degree):
    rows = []
    for combo in combinations_with_replacement(range(n), degree):
        e = np.zeros(n, dtype=int)
        for i in combo:
            e[i] += 1
        rows.append(e)
    return rows


def make_polynomial_basis(n, degree_set):
    """All monomials in ``n`` variables of the given total degrees.

    Degrees are taken in increasing order; within a degree, monomials are in
    decreasing lexicographic order of their exponent tuples, so for ``n = 2``
    and degree 2 the features are ``(x1**2, x1*x2, x2**2)``.

    Degrees below 2 are rejected because a linear feature has a nonzero
    gradient at the origin.
    """
    n = int(n)
    if n < 1:
        raise ContractError("n must be a positive integer")
    degrees = sorted({int(d) for d in degree_set})
    if not degrees:
        raise ContractError("degree_set must not be empty")
    if degrees[0] < 2:
        raise ContractError(f"polynomial degrees must be >= 2, got {degrees[0]}")

    E = np.array([e for d in degrees for e in _monomial_exponents(n, d)], dtype=int)
    L = E.shape[0]
    # exponents after differentiating by each variable, clipped at zero
    lowered = [np.maximum(E - np.eye(n, dtype=int)[j], 0) for j in range(n)]

    def sigma(x):
        x = np.asarray(x, dtype=float)
        return np.prod(x ** E, axis=1)

    def sigma_grad(x):
        x = np.asarray(x, dtype=float)
        out = np.empty((L, n))
        for j in range(n):
            out[:, j] = E[:, j] * np.prod(x ** lowered[j], axis=1)
        return out

    names = []
    for e in E:
        parts = [f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k]
        names.append("*".join(parts))
    return ValueBasis(n=n, L=L, sigma=sigma, sigma_grad=sigma_grad,
                      description=", ".join(names), exponents=E)


def g_sigma(basis, model, cost, x):
    """``sigma'(x) g(x) R^-1 g(x)' sigma'(x)'``, an L x L PSD matrix."""
    x = check_vector(x, basis.n)
    D = basis.sigma_grad(x) @ model.gx(x)
    return D @ cost.R_inv @ D.T
