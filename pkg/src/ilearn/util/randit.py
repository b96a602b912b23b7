"""Tools for seeded, reproducible random streams.

This submodule defines the RandomStream class, a thin wrapper around a NumPy
random generator that remembers the seed it was created from. Every random
choice made by ilearn (sampling increments, splitting, GA operators, Learn++
subset draws) goes through a stream, so a run is fully determined by its
top-level seed.
"""

import numpy as np

#=============================================================================

def resolve_seed(seed=-1):
    """Returns a concrete nonnegative seed value.

    Keyword arguments:
    seed -- integer seed value (default -1, meaning a seed is chosen
        uniformly at random from [1,99999999] using system entropy)
    """

    seed = int(seed)
    if seed < 0:
        seed = int(np.random.default_rng().integers(1, 99999999,
                                                    endpoint=True))
    return seed

#-----------------------------------------------------------------------------

def derive_seed(seed, *keys):
    """Derives an independent child seed from a parent seed and integer keys.

    Positional arguments:
    seed -- nonnegative integer parent seed
    keys -- any number of nonnegative integers identifying the child (for
        example a repetition index, an increment index and a unit index)

    Returns:
    a nonnegative 32-bit integer seed; the same (seed, keys) always give the
        same child, and different keys give statistically independent
        streams
    """

    entropy = [int(seed)] + [int(k) for k in keys]
    if any(e < 0 for e in entropy):
        raise ValueError("seed and keys must be nonnegative")
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])

#=============================================================================

class RandomStream:
    """Random number stream based on the NumPy Generator interface.

    The stream is initialized with a seed value (defaulting to a random value
    drawn from system entropy) and keeps that seed for resetting and for
    echoing into reports. The underlying generator is exposed through the
    "generator" attribute for direct use with NumPy sampling routines.
    """

    #-------------------------------------------------------------------------

    def __init__(self, seed=-1):
        """Random stream constructor.

        Keyword arguments:
        seed -- nonnegative integer seed value (default -1, which chooses a
            seed at random and records it)
        """

        self.set_seed(seed=seed)

    #-------------------------------------------------------------------------

    def set_seed(self, seed=-1):
        """Sets the seed value of this stream and resets it.

        Keyword arguments:
        seed -- nonnegative integer seed value (default -1 for random)
        """

        self.seed = resolve_seed(seed)
        self.reset()

    #-------------------------------------------------------------------------

    def reset(self):
        """Restarts the stream from its original seed."""

        self.generator = np.random.default_rng(self.seed)

    #-------------------------------------------------------------------------

    def permutation(self, n):
        """Returns a random permutation of range(n) as an integer array."""

        return self.generator.permutation(int(n))
