import numpy as np


def counter_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator keyed by ``seed`` and an integer stream path.

    Distinct streams (e.g. per walk block) never overlap and do not depend
    on the order in which they are drawn.
    """
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))
