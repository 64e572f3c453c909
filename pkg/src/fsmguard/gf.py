"""Arithmetic in F2[a]/(a^8 + a^2 + 1), 4x4 byte diffusion matrices, and GF(2) solving.

The modulus a^8 + a^2 + 1 factors as (a^4 + a + 1)^2 over GF(2), so the
quotient is a commutative ring with zero divisors rather than a field.
All diffusion guarantees used here are therefore established empirically
(branch-number sweep) instead of being assumed from field axioms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

RING_MODULUS = 0x105  # a^8 + a^2 + 1
BLOCK_BITS = 32
BLOCK_BYTES = 4


def ring_mul(a: int, b: int) -> int:
    """Multiply two 8-bit polynomials modulo a^8 + a^2 + 1."""
    if not 0 <= a <= 0xFF or not 0 <= b <= 0xFF:
        raise ValueError("ring elements are 8-bit values")
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        a <<= 1
        if a & 0x100:
            a ^= RING_MODULUS
    return r & 0xFF


def ring_add(a: int, b: int) -> int:
    return (a ^ b) & 0xFF


def _popcount(x: int) -> int:
    return bin(x).count("1")


# ---------------------------------------------------------------------------
# XOR circuit: DAG of 2-input XOR nodes computing the 32-bit linear map.
# References 0..31 name input bits; reference 32+i names node i's output.


@dataclass(frozen=True)
class XorCircuit:
    nodes: Tuple[Tuple[int, int], ...]
    outputs: Tuple[int, ...]

    def eval(self, v: int) -> int:
        vals: List[int] = [(v >> i) & 1 for i in range(BLOCK_BITS)]
        for a, b in self.nodes:
            vals.append(vals[a] ^ vals[b])
        out = 0
        for i, ref in enumerate(self.outputs):
            out |= vals[ref] << i
        return out


def _build_xor_circuit(rows: Sequence[int]) -> XorCircuit:
    nodes: List[Tuple[int, int]] = []
    cache: Dict[Tuple[int, int], int] = {}

    def tree(refs: List[int]) -> int:
        level = refs
        while len(level) > 1:
            nxt = []
            for i in range(0, len(level) - 1, 2):
                key = (level[i], level[i + 1])
                if key not in cache:
                    nodes.append(key)
                    cache[key] = BLOCK_BITS + len(nodes) - 1
                nxt.append(cache[key])
            if len(level) % 2:
                nxt.append(level[-1])
            level = nxt
        return level[0]

    outputs = []
    for row in rows:
        support = [i for i in range(BLOCK_BITS) if (row >> i) & 1]
        if not support:
            raise ValueError("diffusion matrix row with empty support")
        outputs.append(tree(support))
    return XorCircuit(tuple(nodes), tuple(outputs))


# ---------------------------------------------------------------------------
# Diffusion matrix


@dataclass(frozen=True)
class MdsSpec:
    """A 4x4 byte matrix over the ring, with its GF(2) expansion and XOR DAG."""

    name: str
    entries: Tuple[Tuple[int, ...], ...]
    binary_rows: Tuple[int, ...] = field(repr=False)
    xor_circuit: XorCircuit = field(repr=False)
    mul_tables: Tuple[np.ndarray, ...] = field(repr=False, compare=False)

    @staticmethod
    def from_entries(entries: Sequence[Sequence[int]], name: str = "custom") -> "MdsSpec":
        ent = tuple(tuple(int(x) & 0xFF for x in row) for row in entries)
        if len(ent) != BLOCK_BYTES or any(len(r) != BLOCK_BYTES for r in ent):
            raise ValueError("diffusion matrix must be 4x4")
        # columns of the GF(2) expansion from the byte-level action on unit vectors
        cols = []
        for i in range(BLOCK_BITS):
            cols.append(_apply_bytes(ent, 1 << i))
        rows = []
        for r in range(BLOCK_BITS):
            mask = 0
            for c in range(BLOCK_BITS):
                mask |= ((cols[c] >> r) & 1) << c
            rows.append(mask)
        circuit = _build_xor_circuit(rows)
        tables = tuple(
            np.array([ring_mul(ent[i][j], x) for x in range(256)], dtype=np.uint8)
            for i in range(BLOCK_BYTES)
            for j in range(BLOCK_BYTES)
        )
        return MdsSpec(name, ent, tuple(rows), circuit, tables)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "modulus": hex(RING_MODULUS),
            "entries": [[hex(x) for x in row] for row in self.entries],
            "binary_rows": [hex(r) for r in self.binary_rows],
            "xor_circuit": {
                "nodes": [list(n) for n in self.xor_circuit.nodes],
                "outputs": list(self.xor_circuit.outputs),
            },
        }


def _apply_bytes(entries: Sequence[Sequence[int]], v: int) -> int:
    inb = [(v >> (8 * j)) & 0xFF for j in range(BLOCK_BYTES)]
    out = 0
    for i in range(BLOCK_BYTES):
        acc = 0
        for j in range(BLOCK_BYTES):
            acc ^= ring_mul(entries[i][j], inb[j])
        out |= acc << (8 * i)
    return out


def mds_apply(m: MdsSpec, v: int) -> int:
    """Apply the diffusion map to a packed 32-bit vector (byte-level path)."""
    if not 0 <= v < (1 << BLOCK_BITS):
        raise ValueError("input must be a 32-bit value")
    return _apply_bytes(m.entries, v)


def mds_apply_binary(m: MdsSpec, v: int) -> int:
    out = 0
    for r, row in enumerate(m.binary_rows):
        out |= (_popcount(row & v) & 1) << r
    return out


def mds_apply_circuit(m: MdsSpec, v: int) -> int:
    return m.xor_circuit.eval(v)


def _active_bytes(v: int) -> int:
    return sum(1 for j in range(BLOCK_BYTES) if (v >> (8 * j)) & 0xFF)


def branch_number(m: MdsSpec, samples: int = 1_000_000, seed: int = 1) -> int:
    """Minimum active input+output bytes over nonzero inputs.

    Exhaustive over all single-active-byte inputs; additionally samples
    random multi-byte inputs and asserts no smaller value shows up.
    """
    best = 2 * BLOCK_BYTES
    for j in range(BLOCK_BYTES):
        for val in range(1, 256):
            out = mds_apply(m, val << (8 * j))
            best = min(best, 1 + _active_bytes(out))
    if samples:
        rng = np.random.default_rng(seed)
        tables = [
            [np.asarray(m.mul_tables[i * BLOCK_BYTES + j]) for j in range(BLOCK_BYTES)]
            for i in range(BLOCK_BYTES)
        ]
        chunk = 1 << 18
        done = 0
        while done < samples:
            n = min(chunk, samples - done)
            inb = rng.integers(0, 256, size=(n, BLOCK_BYTES), dtype=np.uint8)
            nz = inb.any(axis=1)
            inb = inb[nz]
            outb = np.zeros_like(inb)
            for i in range(BLOCK_BYTES):
                acc = np.zeros(len(inb), dtype=np.uint8)
                for j in range(BLOCK_BYTES):
                    acc ^= tables[i][j][inb[:, j]]
                outb[:, i] = acc
            weights = (inb != 0).sum(axis=1) + (outb != 0).sum(axis=1)
            if len(weights):
                best = min(best, int(weights.min()))
            done += n
    return best


# Default matrix: circulant of (a, a+1, 1, 1). Over this ring every square
# submatrix has a unit determinant, so the byte-level branch number is 5;
# branch_number() re-establishes this empirically on construction paths that
# accept user matrices.
DEFAULT_MATRIX_NAME = "circ-a-a1-1-1"
_DEFAULT_ENTRIES = (
    (0x02, 0x03, 0x01, 0x01),
    (0x01, 0x02, 0x03, 0x01),
    (0x01, 0x01, 0x02, 0x03),
    (0x03, 0x01, 0x01, 0x02),
)

_REGISTRY: Dict[str, MdsSpec] = {}


def default_mds() -> MdsSpec:
    return get_matrix(DEFAULT_MATRIX_NAME)


def register_matrix(name: str, entries: Sequence[Sequence[int]], check_samples: int = 100_000) -> MdsSpec:
    """Register an alternative diffusion matrix, gated by the branch-number check."""
    m = MdsSpec.from_entries(entries, name=name)
    bn = branch_number(m, samples=check_samples)
    if bn < 5:
        raise ValueError(f"matrix {name!r} rejected: branch number {bn} < 5")
    _REGISTRY[name] = m
    return m


def get_matrix(name: str) -> MdsSpec:
    if name not in _REGISTRY:
        if name == DEFAULT_MATRIX_NAME:
            _REGISTRY[name] = MdsSpec.from_entries(_DEFAULT_ENTRIES, name=name)
        else:
            raise KeyError(f"unknown diffusion matrix {name!r}")
    return _REGISTRY[name]


# ---------------------------------------------------------------------------
# GF(2) linear solving (rows as int bitmasks, LSB = column 0)


class NoSolution(Exception):
    """Raised by callers when solve_gf2 reports an infeasible system."""


def solve_gf2(rows: Sequence[int], rhs: Sequence[int], ncols: int) -> Optional[int]:
    """Solve A x = b over GF(2); returns one solution (free variables 0) or None.

    ``rows`` holds the matrix rows as bitmasks, ``rhs`` the right-hand-side
    bits. Inputs are not modified.
    """
    if len(rows) != len(rhs):
        raise ValueError("rows and rhs length mismatch")
    aug = [(rows[i] & ((1 << ncols) - 1)) | ((rhs[i] & 1) << ncols) for i in range(len(rows))]
    pivots: List[Tuple[int, int]] = []  # (column, row index)
    row_idx = 0
    for col in range(ncols):
        pivot = None
        for r in range(row_idx, len(aug)):
            if (aug[r] >> col) & 1:
                pivot = r
                break
        if pivot is None:
            continue
        aug[row_idx], aug[pivot] = aug[pivot], aug[row_idx]
        for r in range(len(aug)):
            if r != row_idx and ((aug[r] >> col) & 1):
                aug[r] ^= aug[row_idx]
        pivots.append((col, row_idx))
        row_idx += 1
    for r in range(row_idx, len(aug)):
        if aug[r] >> ncols:
            return None
    x = 0
    for col, r in pivots:
        if (aug[r] >> ncols) & 1:
            x |= 1 << col
    return x


def gf2_rank(rows: Sequence[int], ncols: int) -> int:
    work = [r & ((1 << ncols) - 1) for r in rows]
    rank = 0
    row_idx = 0
    for col in range(ncols):
        pivot = None
        for r in range(row_idx, len(work)):
            if (work[r] >> col) & 1:
                pivot = r
                break
        if pivot is None:
            continue
        work[row_idx], work[pivot] = work[pivot], work[row_idx]
        for r in range(len(work)):
            if r != row_idx and ((work[r] >> col) & 1):
                work[r] ^= work[row_idx]
        rank += 1
        row_idx += 1
    return rank
