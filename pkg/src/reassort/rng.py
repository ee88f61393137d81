"""Deterministic random-stream plumbing.

Every draw in a simulated episode flows through a substream keyed by
(master_seed, run_id, substream id). The key is packed into a 128-bit
Philox key, so substreams are independent counter-based streams: run k
of a Monte-Carlo batch sees the same draws no matter in which order (or
on how many workers) the runs execute.

Substream layout per episode:

    ENV      uniforms consumed by the environment (arrival, choice,
             duration), pre-drawn as one (3, T) block
    POLICY   policy-internal randomness (assortment sampling, discard
             coins, sub-assortment recursion)
    ROLLOUT  Monte-Carlo rollouts inside a policy (leader selection);
             kept apart from POLICY so rollout count cannot perturb the
             main episode
    CRN      per-review seeds when rollouts use common random numbers
"""

from __future__ import annotations

import numpy as np

ENV = 0
POLICY = 1
ROLLOUT = 2
CRN = 3

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """One splitmix64 round; a bijection on 64-bit words."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


# Philox(key=...) gathers OS entropy for a SeedSequence it never uses,
# which is most of its construction cost. Seeding from a fixed
# SeedSequence and overwriting the state produces a bit-identical
# generator at roughly half the price. The template dict is shared and
# mutated in place; the state setter copies out of it, so this is safe
# as long as construction stays single-threaded (which it is: episodes
# are parallelized across processes, never threads).
_SS_DUMMY = np.random.SeedSequence(0)
_KEY = np.zeros(2, dtype=np.uint64)
_ZERO4 = np.zeros(4, dtype=np.uint64)
_PHILOX_STATE = {
    "bit_generator": "Philox",
    "state": {"counter": _ZERO4, "key": _KEY},
    "buffer": _ZERO4,
    "buffer_pos": 4,
    "has_uint32": 0,
    "uinteger": 0,
}


def _fresh_philox(hi: int, lo: int) -> np.random.Philox:
    """New Philox keyed (hi << 64) | lo, skipping entropy gathering."""
    bg = np.random.Philox(seed=_SS_DUMMY)
    _KEY[0] = lo
    _KEY[1] = hi
    bg.state = _PHILOX_STATE
    return bg


def split(master_seed: int, run_id: int) -> tuple[int, int]:
    """Derive the episode seed for one Monte-Carlo run."""
    if run_id < 0 or run_id >= (1 << 60):
        raise ValueError("run_id out of range")
    return (int(master_seed) & _MASK64, int(run_id))


def substream(episode_seed: tuple[int, int], sid: int) -> np.random.Generator:
    """Independent generator for one named substream of an episode.

    (master_seed, run_id, sid) -> 128-bit Philox key. The packing
    (run_id << 3) | sid is injective, and splitmix64 is a bijection, so
    distinct (seed, run, substream) triples always get distinct keys.
    """
    master_seed, run_id = episode_seed
    hi = _splitmix64(master_seed)
    lo = _splitmix64(((run_id << 3) | sid) & _MASK64)
    return np.random.Generator(_fresh_philox(hi, lo))


class _ReusedStream:
    """One Philox/Generator pair re-keyed per use.

    For call sites that consume the generator immediately and never
    keep a reference (the episode engine drawing its environment block),
    re-keying recycles the two objects instead of constructing fresh
    ones, an order of magnitude cheaper. The draws are bit-identical to
    substream()'s. Not thread-safe, like everything else here.
    """

    __slots__ = ("_bg", "_gen")

    def __init__(self):
        self._bg = np.random.Philox(seed=_SS_DUMMY)
        self._gen = np.random.Generator(self._bg)

    def rekey(self, episode_seed: tuple[int, int], sid: int) -> np.random.Generator:
        master_seed, run_id = episode_seed
        _KEY[0] = _splitmix64(((run_id << 3) | sid) & _MASK64)
        _KEY[1] = _splitmix64(master_seed)
        self._bg.state = _PHILOX_STATE
        return self._gen


_ENV_REUSE = _ReusedStream()


def env_uniforms(episode_seed: tuple[int, int], shape) -> np.ndarray:
    """The episode's environment block; equals substream(seed, ENV).random(shape).

    The returned array is fresh, but the generator behind it is the
    shared re-keyed one: do not interleave calls with draws from a
    previously returned generator.
    """
    return _ENV_REUSE.rekey(episode_seed, ENV).random(shape)


class Streams:
    """Lazy bundle of the per-episode substreams handed to policies.

    The ENV block is drawn by the episode engine itself; policies only
    ever see this bundle. Generators are created on first use so cheap
    policies (greedy, inventory balancing) pay nothing for streams they
    never touch.
    """

    __slots__ = ("_eseed", "_policy", "_rollout", "_crn")

    def __init__(self, episode_seed: tuple[int, int]):
        self._eseed = episode_seed
        self._policy = None
        self._rollout = None
        self._crn = None

    @property
    def policy(self) -> np.random.Generator:
        if self._policy is None:
            self._policy = substream(self._eseed, POLICY)
        return self._policy

    @property
    def rollout(self) -> np.random.Generator:
        if self._rollout is None:
            self._rollout = substream(self._eseed, ROLLOUT)
        return self._rollout

    def fresh_rollout_key(self) -> int:
        """A new generator key from the CRN substream.

        Used when candidate rollouts share random numbers: one call per
        rollout slot yields a key, and every candidate restarts from it
        via generator_from_key.
        """
        if self._crn is None:
            self._crn = substream(self._eseed, CRN)
        return int(self._crn.integers(0, 1 << 63))


def generator_from_key(key: int) -> np.random.Generator:
    """Counter-based generator for an explicit 128-bit key."""
    return np.random.Generator(_fresh_philox(key >> 64, key & _MASK64))
