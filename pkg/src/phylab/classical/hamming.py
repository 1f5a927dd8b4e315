"""Systematic Hamming(7,4) code with syndrome decoding."""

from __future__ import annotations

import numpy as np

__all__ = ["GENERATOR", "PARITY_CHECK", "hamming74_encode", "hamming74_decode"]

_P = np.array(
    [
        [1, 1, 0],
        [1, 0, 1],
        [0, 1, 1],
        [1, 1, 1],
    ],
    dtype=np.uint8,
)
GENERATOR = np.concatenate([np.eye(4, dtype=np.uint8), _P], axis=1)
PARITY_CHECK = np.concatenate([_P.T, np.eye(3, dtype=np.uint8)], axis=1)

# syndrome (as int, MSB first) -> error position, -1 for no error
_SYNDROME_TO_POS = np.full(8, -1, dtype=np.int64)
for _pos in range(7):
    _col = PARITY_CHECK[:, _pos]
    _SYNDROME_TO_POS[int(_col[0]) * 4 + int(_col[1]) * 2 + int(_col[2])] = _pos


def hamming74_encode(bits) -> np.ndarray:
    """Encode groups of 4 bits (last axis a multiple of 4) into 7-bit codewords."""
    b = np.asarray(bits, dtype=np.uint8)
    if b.shape[-1] % 4:
        raise ValueError(f"bit count {b.shape[-1]} is not a multiple of 4")
    blocks = b.reshape(b.shape[:-1] + (-1, 4))
    code = (blocks.astype(np.int64) @ GENERATOR) % 2
    return code.astype(np.uint8).reshape(b.shape[:-1] + (-1,))


def hamming74_decode(bits) -> np.ndarray:
    """Correct up to one error per codeword and return the 4 message bits.

    Any 7-bit word decodes to some message; patterns with two or more
    errors land on a wrong but valid codeword.
    """
    r = np.asarray(bits, dtype=np.uint8)
    if r.shape[-1] % 7:
        raise ValueError(f"bit count {r.shape[-1]} is not a multiple of 7")
    blocks = r.reshape(r.shape[:-1] + (-1, 7)).copy()
    syn = (blocks.astype(np.int64) @ PARITY_CHECK.T) % 2
    pos = _SYNDROME_TO_POS[syn[..., 0] * 4 + syn[..., 1] * 2 + syn[..., 2]]
    rows = np.nonzero(pos >= 0)
    blocks[rows + (pos[rows],)] ^= 1
    return blocks[..., :4].reshape(r.shape[:-1] + (-1,))
