"""Subset-lattice indexing and fast zeta/Moebius transforms.

Subsets of ``V = {1, ..., p}`` are encoded as integer masks with node ``i``
stored in bit ``i - 1``.  Vectors indexed by subsets (probabilities, log
probabilities, exponential-family parameters) are flat arrays of length
``2**p`` in mask order.
"""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np

from .errors import ValidationError

MAX_P = 25
MAX_DENSE_P = 12


class LatticeSizeError(ValidationError):
    """Raised when ``2**p`` entries would exceed the configured cap."""


def mask_of(nodes: Iterable[int]) -> int:
    """Mask of a collection of 1-based node labels."""
    mask = 0
    for i in nodes:
        if i < 1:
            raise ValueError(f"node labels are 1-based, got {i}")
        mask |= 1 << (i - 1)
    return mask


def nodes_of(mask: int) -> tuple[int, ...]:
    """Sorted 1-based node labels contained in ``mask``."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def popcounts(p: int) -> np.ndarray:
    """Cardinality of every subset, in mask order."""
    sizes = np.zeros(1, dtype=np.int64)
    for _ in range(p):
        sizes = np.concatenate([sizes, sizes + 1])
    return sizes


def lattice_dim(n_entries: int, max_p: int = MAX_P) -> int:
    """Recover ``p`` from a vector length, validating it is a power of two."""
    p = int(n_entries).bit_length() - 1
    if n_entries < 1 or (1 << p) != n_entries:
        raise ValidationError(f"length {n_entries} is not a power of two")
    if p > max_p:
        raise LatticeSizeError(f"p={p} exceeds the lattice cap of {max_p}")
    return p


def _prepare(f, inplace: bool, max_p: int) -> tuple[np.ndarray, int]:
    f = np.asarray(f) if inplace else np.array(f, copy=True)
    if inplace and not f.flags.c_contiguous:
        raise ValueError("in-place transforms need a contiguous array")
    if f.ndim != 1:
        raise ValueError("lattice vectors must be one-dimensional")
    if not (np.issubdtype(f.dtype, np.number)):
        raise TypeError(f"unsupported dtype {f.dtype}")
    return f, lattice_dim(f.size, max_p)


def zeta_transform(f, *, inplace: bool = False, max_p: int = MAX_P) -> np.ndarray:
    """Subset-sum transform ``g[C] = sum(f[R] for R subset of C)``.

    Equivalent to multiplying by the transposed zeta matrix.  Integer inputs
    stay integer so results are exact.  Runs in ``O(p 2**p)``.
    """
    g, p = _prepare(f, inplace, max_p)
    n = g.size
    for b in range(p):
        view = g.reshape(n >> (b + 1), 2, 1 << b)
        view[:, 1, :] += view[:, 0, :]
    return g


def mobius_transform(g, *, inplace: bool = False, max_p: int = MAX_P) -> np.ndarray:
    """Inverse of :func:`zeta_transform`.

    ``f[D] = sum((-1)**|D - D'| * g[D'] for D' subset of D)``, i.e.
    multiplication by the transposed Moebius matrix.
    """
    f, p = _prepare(g, inplace, max_p)
    n = f.size
    for b in range(p):
        view = f.reshape(n >> (b + 1), 2, 1 << b)
        view[:, 1, :] -= view[:, 0, :]
    return f


def _dense(p: int, block: list[list[int]]) -> np.ndarray:
    if p < 0 or p > MAX_DENSE_P:
        raise LatticeSizeError(f"dense lattice matrices are limited to p <= {MAX_DENSE_P}")
    out = np.ones((1, 1), dtype=np.int64)
    factor = np.array(block, dtype=np.int64)
    # kron puts its first argument on the high bits, so node 1 goes last
    for _ in range(p):
        out = np.kron(factor, out)
    return out


def dense_zeta_matrix(p: int) -> np.ndarray:
    """``Z[R, C] = 1`` iff ``R`` is a subset of ``C``; Kronecker power of ``[[1, 1], [0, 1]]``."""
    return _dense(p, [[1, 1], [0, 1]])


def dense_mobius_matrix(p: int) -> np.ndarray:
    """Inverse of :func:`dense_zeta_matrix`; Kronecker power of ``[[1, -1], [0, 1]]``."""
    return _dense(p, [[1, -1], [0, 1]])


def submasks(mask: int) -> list[int]:
    """All submasks of ``mask``, in decreasing order."""
    out = []
    sub = mask
    while True:
        out.append(sub)
        if sub == 0:
            return out
        sub = (sub - 1) & mask


def subset_parity_split(mask: int) -> tuple[list[int], list[int]]:
    """Split the subsets ``D'`` of ``D`` by the parity of ``|D - D'|``.

    Returns ``(even, odd)`` lists of masks.  For non-empty ``D`` both halves
    have ``2**(|D| - 1)`` members.
    """
    even, odd = [], []
    size = bin(mask).count("1")
    for sub in submasks(mask):
        (even if (size - bin(sub).count("1")) % 2 == 0 else odd).append(sub)
    return even, odd
