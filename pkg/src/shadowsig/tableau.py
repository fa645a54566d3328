"""Symplectic tableaus and exactly-uniform Clifford sampling.

A Clifford on ``m`` qubits is stored as a binary symplectic matrix ``S``
(rows 0..m-1 are the images of X_1..X_m, rows m..2m-1 the images of
Z_1..Z_m, each row split as x-part | z-part) together with ``2m`` Pauli
phase bits: the dense unitary is ``X^a Z^b V(S)`` where ``V`` is a fixed
synthesis of the phaseless tableau. Sampling draws one uniformly random
coset representative per qubit level, which makes the distribution over
the full Clifford group exactly uniform (not just approximately).
"""
from __future__ import annotations

import numpy as np

from .errors import ResourceError

DENSE_CAP = 6  # largest m for which dense 2^m x 2^m synthesis is allowed

_PAULI_1Q = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
    (1, 1): np.array([[0, -1], [1, 0]], dtype=complex),  # X @ Z; i^{x.z} prefactor makes it Y
}


def sp_order(m: int) -> int:
    """Cardinality of the binary symplectic group Sp(2m, 2)."""
    x = 1
    for j in range(1, m + 1):
        x *= 2 ** (2 * j - 1) * (4**j - 1)
    return x


def clifford_order(m: int) -> int:
    """Number of m-qubit Cliffords modulo global phase."""
    return sp_order(m) * 4**m


def _int_to_bits(i: int, width: int) -> np.ndarray:
    return np.array([(i >> j) & 1 for j in range(width)], dtype=np.uint8)


def _symp_inner(v: np.ndarray, w: np.ndarray) -> int:
    # interleaved convention: components (2q, 2q+1) = (x_q, z_q)
    t = 0
    for q in range(v.size // 2):
        t += v[2 * q] * w[2 * q + 1] + w[2 * q] * v[2 * q + 1]
    return t % 2


def _transvection(k: np.ndarray, v: np.ndarray) -> np.ndarray:
    return (v + _symp_inner(k, v) * k) % 2


def _find_transvection(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two transvections mapping x to y (either may be the zero vector)."""
    nn = x.size
    zero = np.zeros(nn, dtype=np.uint8)
    if np.array_equal(x, y):
        return zero, zero
    if _symp_inner(x, y) == 1:
        return (x + y) % 2, zero
    z = np.zeros(nn, dtype=np.uint8)
    for q in range(nn // 2):
        ii = 2 * q
        if (x[ii] or x[ii + 1]) and (y[ii] or y[ii + 1]):
            z[ii] = (x[ii] + y[ii]) % 2
            z[ii + 1] = (x[ii + 1] + y[ii + 1]) % 2
            if z[ii] == 0 and z[ii + 1] == 0:
                z[ii + 1] = 1
                if x[ii] != x[ii + 1]:
                    z[ii] = 1
            return (x + z) % 2, (y + z) % 2
    for q in range(nn // 2):
        ii = 2 * q
        if (x[ii] or x[ii + 1]) and not (y[ii] or y[ii + 1]):
            if x[ii] == x[ii + 1]:
                z[ii + 1] = 1
            else:
                z[ii + 1] = x[ii]
                z[ii] = x[ii + 1]
            break
    for q in range(nn // 2):
        ii = 2 * q
        if not (x[ii] or x[ii + 1]) and (y[ii] or y[ii + 1]):
            if y[ii] == y[ii + 1]:
                z[ii + 1] = 1
            else:
                z[ii + 1] = y[ii]
                z[ii] = y[ii + 1]
            break
    return (x + z) % 2, (y + z) % 2


def _symplectic_interleaved(m: int, level) -> np.ndarray:
    """Build a symplectic matrix from one (f1, bits) coset choice per level.

    ``level(j)`` must return, for the size-j subproblem, a nonzero integer
    in [1, 4^j) and an integer of 2j-1 bits. Uniform choices give the
    uniform distribution over Sp(2m, 2).
    """
    nn = 2 * m
    k, bits_int = level(m)
    f1 = _int_to_bits(k, nn)
    e1 = np.zeros(nn, dtype=np.uint8)
    e1[0] = 1
    t0, t1 = _find_transvection(e1, f1)
    bits = _int_to_bits(bits_int, nn - 1)
    eprime = e1.copy()
    eprime[2:nn] = bits[1:nn]
    h0 = _transvection(t1, _transvection(t0, eprime))
    if bits[0] == 1:
        f1 = np.zeros(nn, dtype=np.uint8)
    if m == 1:
        g = np.eye(2, dtype=np.uint8)
    else:
        g = np.zeros((nn, nn), dtype=np.uint8)
        g[:2, :2] = np.eye(2, dtype=np.uint8)
        g[2:, 2:] = _symplectic_interleaved(m - 1, level)
    for j in range(nn):
        row = _transvection(t0, g[j])
        row = _transvection(t1, row)
        row = _transvection(h0, row)
        g[j] = _transvection(f1, row)
    return g


def _interleaved_to_block(s: np.ndarray) -> np.ndarray:
    m = s.shape[0] // 2
    perm = list(range(0, 2 * m, 2)) + list(range(1, 2 * m, 2))
    return np.ascontiguousarray(s[perm][:, perm])


def symplectic_from_index(i: int, m: int) -> np.ndarray:
    """The i-th symplectic matrix (block convention) in canonical order."""
    state = [int(i)]

    def level(j):
        s = (1 << (2 * j)) - 1
        k = state[0] % s + 1
        state[0] //= s
        bits = state[0] % (1 << (2 * j - 1))
        state[0] >>= 2 * j - 1
        return k, bits

    return _interleaved_to_block(_symplectic_interleaved(m, level))


def random_symplectic(m: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random element of Sp(2m, 2), block convention."""

    def level(j):
        k = int(rng.integers(1, 1 << (2 * j)))
        bits = int(rng.integers(0, 1 << (2 * j - 1)))
        return k, bits

    return _interleaved_to_block(_symplectic_interleaved(m, level))


def is_symplectic(s: np.ndarray) -> bool:
    m = s.shape[0] // 2
    j = np.zeros((2 * m, 2 * m), dtype=np.uint8)
    j[:m, m:] = np.eye(m, dtype=np.uint8)
    j[m:, :m] = np.eye(m, dtype=np.uint8)
    return np.array_equal(s.astype(np.uint8) @ j @ s.T.astype(np.uint8) % 2, j)


_PAULI_CACHE: dict[bytes, np.ndarray] = {}


def hermitian_pauli(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Dense Hermitian Pauli i^{x.z} X^x Z^z; qubit 0 is the leftmost factor."""
    x = np.asarray(x, dtype=np.uint8)
    z = np.asarray(z, dtype=np.uint8)
    key = x.tobytes() + b"|" + z.tobytes()
    hit = _PAULI_CACHE.get(key)
    if hit is None:
        out = np.array([[1.0 + 0j]])
        for xq, zq in zip(x, z):
            out = np.kron(out, _PAULI_1Q[(int(xq), int(zq))])
        out = out * (1j) ** int(np.dot(x.astype(int), z.astype(int)) % 4)
        if len(_PAULI_CACHE) > 20000:
            _PAULI_CACHE.clear()
        hit = _PAULI_CACHE[key] = out
    return hit


def _synthesize(s: np.ndarray) -> np.ndarray:
    """Dense unitary V with V X_j V^† = P_j, V Z_j V^† = Q_j (rows of s)."""
    m = s.shape[0] // 2
    dim = 2**m
    qs = [hermitian_pauli(s[m + j, :m], s[m + j, m:]) for j in range(m)]
    ps = [hermitian_pauli(s[j, :m], s[j, m:]) for j in range(m)]
    phi = None
    for r in range(dim):
        v = np.zeros(dim, dtype=complex)
        v[r] = 1.0
        for q in qs:
            v = (v + q @ v) / 2.0
        nrm = np.linalg.norm(v)
        if nrm > 1e-6:
            phi = v / nrm
            break
    lead = np.flatnonzero(np.abs(phi) > 1e-8)[0]
    phi = phi * (np.conj(phi[lead]) / np.abs(phi[lead]))
    cols = np.empty((dim, dim), dtype=complex)
    for x in range(dim):
        v = phi
        for j in range(m):
            if (x >> (m - 1 - j)) & 1:
                v = ps[j] @ v
        cols[:, x] = v
    return cols


class CliffordOp:
    """An m-qubit Clifford: symplectic tableau, phase bits, on-demand dense."""

    __slots__ = ("m", "symplectic", "phase_bits", "_dense")

    def __init__(self, m: int, symplectic: np.ndarray, phase_bits: np.ndarray):
        self.m = m
        self.symplectic = np.asarray(symplectic, dtype=np.uint8)
        self.phase_bits = np.asarray(phase_bits, dtype=np.uint8)
        self._dense = None

    def dense(self) -> np.ndarray:
        """Dense 2^m x 2^m unitary (cached)."""
        if self.m > DENSE_CAP:
            raise ResourceError(f"dense Clifford requested for m={self.m} > cap {DENSE_CAP}")
        if self._dense is None:
            key = self.key() if self.m <= 2 else None
            if key is not None and key in _DENSE_FULL_CACHE:
                self._dense = _DENSE_FULL_CACHE[key]
            else:
                v = _dense_phaseless(self.m, self.symplectic.tobytes(), self.symplectic)
                a, b = self.phase_bits[: self.m], self.phase_bits[self.m:]
                self._dense = hermitian_pauli(a, b) @ v
                if key is not None:
                    _DENSE_FULL_CACHE[key] = self._dense
        return self._dense

    def key(self) -> bytes:
        return bytes([self.m]) + self.symplectic.tobytes() + self.phase_bits.tobytes()

    def __eq__(self, other):
        return isinstance(other, CliffordOp) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


_PHASELESS_CACHE: dict[bytes, np.ndarray] = {}
_DENSE_FULL_CACHE: dict[bytes, np.ndarray] = {}
_SP_ENUM_CACHE: dict[int, list[np.ndarray]] = {}


def _dense_phaseless(m: int, key: bytes, s: np.ndarray) -> np.ndarray:
    hit = _PHASELESS_CACHE.get(key)
    if hit is None:
        if len(_PHASELESS_CACHE) > 40000:
            _PHASELESS_CACHE.clear()
        hit = _PHASELESS_CACHE[key] = _synthesize(s)
    return hit


def random_clifford_op(m: int, rng: np.random.Generator) -> CliffordOp:
    """Exactly uniform draw from the m-qubit Clifford group (mod phase).

    For m <= 2 the symplectic factor is picked by index over the enumerated
    group (one integer draw per shot); larger m builds the matrix level by
    level. Both paths are deterministic in the supplied stream.
    """
    if m <= 2:
        idx = int(rng.integers(0, clifford_order(m)))
        sp_idx, pauli = divmod(idx, 4**m)
        group = _SP_ENUM_CACHE.get(m)
        if group is None:
            group = _SP_ENUM_CACHE[m] = [symplectic_from_index(i, m) for i in range(sp_order(m))]
        s = group[sp_idx]
        phase = _int_to_bits(pauli, 2 * m)
    else:
        s = random_symplectic(m, rng)
        phase = rng.integers(0, 2, size=2 * m).astype(np.uint8)
    return CliffordOp(m, s, phase)
