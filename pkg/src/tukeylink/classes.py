"""Square-law equivalence classes of symbol blocks.

A direct-detection receiver that integrates |x(t)|^2 over the ISI-free and
ISI-present intervals sees a block x only through its signature

    y_k = alpha^2 (1-beta) T |x_k|^2,      k = 0..n-1
    z_l = alpha^2 beta T psi(x_l, x_{l+1}), l = 0..n-2

with the overlap kernel psi(v, w) = |v+w|^2/4 + |v-w|^2/8.  Blocks with
equal signatures are indistinguishable at the receiver no matter the noise
level; this module enumerates those equivalence classes over all of K^n,
reports their statistics, and selects one transmit representative per class.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .constellation import Constellation

__all__ = [
    "SignatureVector",
    "ClassTable",
    "SymbolBlockSet",
    "psi",
    "upsilon",
    "square_law_identical",
    "enumerate_classes",
    "rate_loss",
    "choose_representatives",
]

# decimal digits kept when grouping signatures; the minimum nonzero gap
# between distinct |x|^2 or psi values is orders of magnitude above 1e-9
# for every constellation used here (asserted in the test suite)
_QUANT_DECIMALS = 9

DEFAULT_ENUMERATION_BUDGET = 10**8


@dataclass(frozen=True)
class SignatureVector:
    """Noiseless integrate-and-dump outputs (y over n intervals, z over n-1)."""

    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        z = np.asarray(self.z, dtype=float)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        if z.size != y.size - 1:
            raise ValueError("signature must have one fewer overlap entry than symbols")
        if np.any(y < 0.0) or np.any(z < 0.0):
            raise ValueError("signature entries are energies and must be nonnegative")


def psi(v, w):
    """Overlap kernel |v+w|^2 / 4 + |v-w|^2 / 8 (accepts scalars or arrays)."""
    return 0.25 * np.abs(v + w) ** 2 + 0.125 * np.abs(v - w) ** 2


def upsilon(block, beta: float, T: float) -> SignatureVector:
    """Signature of a block: what a noiseless square-law receiver measures.

    y[k] = alpha^2 (1 - beta) T |x_k|^2 over the k-th ISI-free interval and
    z[l] = alpha^2 beta T psi(x_l, x_{l+1}) over the l-th overlap interval.
    """
    x = np.asarray(block, dtype=complex)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("block must be a nonempty one-dimensional sequence")
    alpha_sq = 4.0 / (4.0 - beta)
    y = alpha_sq * (1.0 - beta) * T * np.abs(x) ** 2
    z = alpha_sq * beta * T * psi(x[:-1], x[1:])
    return SignatureVector(y, z)


def square_law_identical(a, b, beta: float, T: float, tol: float = 1e-9) -> bool:
    """True when two equal-length blocks have the same square-law signature.

    The comparison is made in normalized units (the interval scale factors
    divided out), so the verdict does not depend on T.  Coordinates whose
    interval has zero length (y at beta = 1, z at beta = 0) carry no signal
    and are excluded.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("blocks must have equal length")
    same = True
    if beta < 1.0:
        same &= bool(np.max(np.abs(np.abs(a) ** 2 - np.abs(b) ** 2)) <= tol)
    if beta > 0.0 and a.size > 1:
        same &= bool(np.max(np.abs(psi(a[:-1], a[1:]) - psi(b[:-1], b[1:]))) <= tol)
    return same


class ClassTable:
    """Partition of all |K|^n index vectors into square-law classes.

    Classes are ordered lexicographically by quantized signature; members of
    each class are ordered lexicographically by their (ring, phase) index
    sequence.  Vector index v encodes the symbol sequence in base |K| with
    the leftmost symbol most significant.
    """

    def __init__(self, constellation: Constellation, n: int, order, offsets,
                 sig_rows, mag_values, psi_values):
        self.constellation = constellation
        self.n = int(n)
        self._order = order          # vector indices, grouped by class
        self._offsets = offsets      # class c owns order[offsets[c]:offsets[c+1]]
        self._sig_rows = sig_rows    # (num_classes, 2n-1) value ids
        self._mag_values = mag_values
        self._psi_values = psi_values

    @property
    def num_classes(self) -> int:
        return self._offsets.size - 1

    @property
    def num_vectors(self) -> int:
        return self._order.size

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self._offsets)

    def members(self, c: int) -> np.ndarray:
        """Sorted vector indices belonging to class ``c``."""
        return self._order[self._offsets[c]:self._offsets[c + 1]]

    def representative_index(self, c: int) -> int:
        return int(self._order[self._offsets[c]])

    def signature_key(self, c: int) -> tuple:
        """Quantized normalized signature (y values, then z values)."""
        row = self._sig_rows[c]
        n = self.n
        y = tuple(self._mag_values[row[:n]])
        z = tuple(self._psi_values[row[n:]])
        return (y, z)

    @property
    def classes(self) -> list:
        """Materialized (signature key, member indices) pairs; prefer the
        accessor methods for large tables."""
        return [(self.signature_key(c), self.members(c))
                for c in range(self.num_classes)]

    def size_histogram(self) -> dict[int, int]:
        """Map from class size to the number of classes of that size."""
        sizes, counts = np.unique(self.sizes, return_counts=True)
        return {int(s): int(c) for s, c in zip(sizes, counts)}

    def decode_block(self, vector_index: int) -> np.ndarray:
        """Symbol amplitudes of the vector with the given index."""
        k = len(self.constellation)
        digits = np.empty(self.n, dtype=np.int64)
        v = int(vector_index)
        for pos in range(self.n - 1, -1, -1):
            digits[pos] = v % k
            v //= k
        return self.constellation.points[digits]


@dataclass(frozen=True)
class SymbolBlockSet:
    """Transmit set S: one block per selected class, optionally bit-labeled."""

    blocks: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        blocks = np.asarray(self.blocks, dtype=complex)
        object.__setattr__(self, "blocks", blocks)
        if blocks.ndim != 2 or blocks.shape[0] == 0:
            raise ValueError("block set must be a nonempty (M, n) array")
        if self.labels is not None and len(self.labels) != blocks.shape[0]:
            raise ValueError("need exactly one label per block")

    @property
    def num_blocks(self) -> int:
        return self.blocks.shape[0]

    @property
    def block_length(self) -> int:
        return self.blocks.shape[1]

    @property
    def bits_per_block(self) -> int:
        if self.labels is None:
            raise ValueError("block set carries no labels")
        return len(self.labels[0])

    @cached_property
    def label_bits(self) -> np.ndarray:
        """Labels as unsigned integers, for bit-error counting."""
        if self.labels is None:
            raise ValueError("block set carries no labels")
        return np.array([int(s, 2) if s else 0 for s in self.labels], dtype=np.uint64)


def _quantized_value_tables(constellation: Constellation):
    """Unit-power |c|^2 and psi lookup tables, rounded for grouping.

    Every signature coordinate of every vector is a gather from these two
    small tables, so equal values are bitwise equal and the rounding of a
    coordinate can never disagree between two vectors.
    """
    pts = constellation.points / np.sqrt(constellation.average_power)
    mag = np.round(np.abs(pts) ** 2, _QUANT_DECIMALS)
    psi_tab = np.round(psi(pts[:, None], pts[None, :]), _QUANT_DECIMALS)
    return mag, psi_tab


def enumerate_classes(constellation: Constellation, n: int,
                      budget: int = DEFAULT_ENUMERATION_BUDGET) -> ClassTable:
    """Exhaustively group all |K|^n symbol vectors by quantized signature.

    Signatures are compared in normalized units (interval scale factors
    removed), which makes the partition independent of the roll-off and the
    symbol period.  Runs in O(|K|^n) time and memory.

    Raises
    ------
    ValueError
        If |K|^n exceeds ``budget`` (default 1e8), stating the required count.
    """
    if n < 1:
        raise ValueError("block length must be at least 1")
    k = len(constellation)
    total = k**n
    if total > budget:
        raise ValueError(
            f"enumeration needs {total} vectors, above the budget of {budget}")

    mag, psi_tab = _quantized_value_tables(constellation)
    mag_values, mag_ids = np.unique(mag, return_inverse=True)
    psi_values, flat_ids = np.unique(psi_tab, return_inverse=True)
    psi_ids = flat_ids.reshape(psi_tab.shape)
    id_dtype = np.int16 if max(mag_values.size, psi_values.size) < 2**15 else np.int32
    mag_ids = mag_ids.astype(id_dtype)
    psi_ids = psi_ids.astype(id_dtype)

    digit_dtype = np.int8 if k <= 127 else np.int16
    idx = np.arange(total, dtype=np.int64)
    digits = np.empty((total, n), dtype=digit_dtype)
    rem = idx
    for pos in range(n - 1, -1, -1):
        digits[:, pos] = rem % k
        rem = rem // k

    sig = np.empty((total, 2 * n - 1), dtype=id_dtype)
    sig[:, :n] = mag_ids[digits]
    for l in range(n - 1):
        sig[:, n + l] = psi_ids[digits[:, l], digits[:, l + 1]]
    del digits, rem

    # unique rows sort lexicographically by id, which is lexicographic in the
    # quantized signature values since ids are assigned in sorted value order
    sig_rows, inverse = np.unique(sig, axis=0, return_inverse=True)
    del sig
    order = np.argsort(inverse, kind="stable").astype(np.int64)
    counts = np.bincount(inverse, minlength=sig_rows.shape[0])
    offsets = np.concatenate(([0], np.cumsum(counts)))
    return ClassTable(constellation, n, order, offsets, sig_rows,
                      mag_values, psi_values)


def rate_loss(table: ClassTable) -> float:
    """Rate forfeited by signalling one block per class instead of per vector:
    (1/n) log2(|K|^n / num_classes) bits per symbol."""
    k = len(table.constellation)
    return (table.n * np.log2(k) - np.log2(table.num_classes)) / table.n


def choose_representatives(table: ClassTable, M: int,
                           label_seed: int | None = None) -> SymbolBlockSet:
    """Build the transmit set: the first ``M`` classes in signature order,
    each represented by its lexicographically smallest member.

    When ``label_seed`` is given, M must be a power of two and the blocks
    receive a uniformly random bijective log2(M)-bit labeling drawn from that
    seed; the result is fully deterministic given (table, M, seed).
    """
    if not 1 <= M <= table.num_classes:
        raise ValueError(
            f"asked for {M} blocks but the table holds {table.num_classes} classes")
    blocks = np.stack([table.decode_block(table.representative_index(c))
                       for c in range(M)])
    labels = None
    if label_seed is not None:
        bits = int(M).bit_length() - 1
        if 2**bits != M:
            raise ValueError(f"labels need M to be a power of two, got {M}")
        perm = np.random.default_rng(label_seed).permutation(M)
        labels = tuple(format(int(v), f"0{bits}b") if bits else "" for v in perm)
    return SymbolBlockSet(blocks, labels)
