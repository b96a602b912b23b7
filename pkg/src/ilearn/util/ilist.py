"""List-like pool of sample indices for drawing without replacement.

This submodule defines the IndexPool, used when carving a dataset into
disjoint increments: every index handed out is removed from the pool, so no
sample can ever appear in two returned sets.
"""

#=============================================================================

class IndexPool(list):
    """List-like class for choosing sequences of indices without repetition.

    The pool is initialized from an iterable of integer indices (typically
    the row indices of one class). Indices are removed as they are drawn.
    Be aware that the pool semantics are only defined for the methods
    required here:
        __init__, __len__, draw
    """

    #-------------------------------------------------------------------------

    def __init__(self, indices=()):
        """Index pool constructor.

        Keyword arguments:
        indices -- iterable of integer indices (default empty)
        """

        try:
            indices = [int(i) for i in indices]
        except (TypeError, ValueError):
            raise TypeError("index pool entries must be integer")
        if len(set(indices)) != len(indices):
            raise ValueError("index pool entries must be unique")

        super().__init__(indices)

    #-------------------------------------------------------------------------

    def draw(self, count, stream):
        """Removes and returns a random selection of indices.

        Positional arguments:
        count -- number of indices to draw
        stream -- RandomStream used to shuffle the pool

        Returns:
        list of the drawn indices, in the order they were drawn

        The pool is shuffled once per call and the drawn indices are taken
        from its front, so repeated calls with the same stream state are
        reproducible.
        """

        count = int(count)
        if count < 0:
            raise ValueError("draw count must be nonnegative")
        if count > len(self):
            raise ValueError(f"cannot draw {count} indices from a pool of "
                             f"{len(self)}")
        if count == 0:
            return []

        order = stream.permutation(len(self))
        shuffled = [self[int(k)] for k in order]
        self[:] = shuffled[count:]
        return shuffled[:count]
