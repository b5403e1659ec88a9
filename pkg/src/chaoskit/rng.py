"""Counter-based random streams for reproducible parallel Monte Carlo.

Every random number in a simulation is addressed by the tuple
(seed, role, replica, block, offset): the first three select a Philox key,
the block selects a disjoint 128-bit counter region, and the offset is the
position inside the block.  Draws therefore never depend on scheduling or
worker count, and two systems can be coupled exactly by reusing a key.

Gaussians use Box-Muller on two counter draws each, so particle ``i``,
component ``c`` of a step block always consumes the same two raw words.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Roles: which subsystem a stream drives.  COUPLED is shared by the
# interacting system and its reference copies (synchronous coupling);
# PILOT is disjoint from both; AUX covers subsampling, projections, etc.
ROLE_COUPLED = 0
ROLE_PILOT = 1
ROLE_AUX = 2

# Block-index layout inside one stream.  Step noise uses blocks [0, 2^60);
# initial-condition sampling and auxiliary draws live in reserved regions
# so they can never collide with step noise.
INIT_BLOCK = 1 << 60
AUX_BLOCK = 1 << 61

_INV_2_53 = 2.0 ** -53


def _bitgen(seed: int, role: int, replica: int, block: int) -> np.random.Philox:
    key = np.random.SeedSequence([int(seed), int(role), int(replica)]).generate_state(2, np.uint64)
    return np.random.Philox(counter=int(block) << 128, key=key)


def raw_words(seed: int, role: int, replica: int, block: int, count: int) -> np.ndarray:
    """``count`` raw 64-bit words from the addressed counter block."""
    return _bitgen(seed, role, replica, block).random_raw(count)


def uniforms(seed: int, role: int, replica: int, block: int, count: int) -> np.ndarray:
    """``count`` uniforms on the open interval (0, 1)."""
    w = raw_words(seed, role, replica, block, count)
    return ((w >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def gaussians(seed: int, role: int, replica: int, block: int, shape: tuple[int, ...]) -> np.ndarray:
    """Standard normals of the given shape via Box-Muller, two draws each."""
    n = int(np.prod(shape)) if shape else 1
    u = uniforms(seed, role, replica, block, 2 * n)
    z = np.sqrt(-2.0 * np.log(u[0::2])) * np.cos(2.0 * np.pi * u[1::2])
    return z.reshape(shape)


@dataclass(frozen=True)
class Stream:
    """Descriptor of one noise stream: a (seed, role, replica) key.

    The descriptor is plain data; passing it around (or storing it in a
    run record) is enough to regenerate every draw it ever produced.
    """

    seed: int
    role: int = ROLE_COUPLED
    replica: int = 0

    def step_gaussians(self, step: int, n: int, d: int) -> np.ndarray:
        """Noise block for time step ``step``: (n, d) standard normals."""
        return gaussians(self.seed, self.role, self.replica, step, (n, d))

    def init_gaussians(self, shape: tuple[int, ...], lane: int = 0) -> np.ndarray:
        return gaussians(self.seed, self.role, self.replica, INIT_BLOCK + lane, shape)

    def init_uniforms(self, count: int, lane: int = 0) -> np.ndarray:
        return uniforms(self.seed, self.role, self.replica, INIT_BLOCK + lane, count)

    def aux_uniforms(self, count: int, lane: int = 0) -> np.ndarray:
        return uniforms(self.seed, self.role, self.replica, AUX_BLOCK + lane, count)

    def aux_generator(self, lane: int = 0) -> np.random.Generator:
        """A bulk numpy Generator anchored at an auxiliary block.

        Used for non-coupled randomness (subsampling, projection
        directions, bootstrap) where only reproducibility matters, not
        per-draw addressing.
        """
        return np.random.Generator(_bitgen(self.seed, self.role, self.replica, AUX_BLOCK + lane))
