import math

from scipy import stats


class StubStream:
    """Scripted stand-in for Stream: replays queued draws for hand traces."""

    def __init__(self, randbelow=(), geometric=(), random=()):
        self._randbelow = list(randbelow)
        self._geometric = list(geometric)
        self._random = list(random)

    def randbelow(self, n):
        value = self._randbelow.pop(0)
        assert 0 <= value < n, f"scripted randbelow {value} out of range {n}"
        return value

    def geometric(self, p):
        return self._geometric.pop(0)

    def random(self):
        return self._random.pop(0)

    def bernoulli(self, p):
        return 1 if self.random() < p else 0


def chi_square_pvalue(counts, probabilities, total):
    """Goodness-of-fit p-value; bins with tiny expectation are pooled."""
    observed = []
    expected = []
    spill_obs = 0
    spill_exp = 0.0
    for count, prob in zip(counts, probabilities):
        exp = prob * total
        if exp < 5.0:
            spill_obs += count
            spill_exp += exp
        else:
            observed.append(count)
            expected.append(exp)
    if spill_exp > 0:
        observed.append(spill_obs)
        expected.append(spill_exp)
    scale = sum(observed) / sum(expected)
    expected = [e * scale for e in expected]
    statistic = sum((o - e) ** 2 / e for o, e in zip(observed, expected))
    dof = len(observed) - 1
    if dof <= 0:
        return 1.0
    return float(stats.chi2.sf(statistic, dof))


def assert_close(a, b, tol=1e-12):
    assert math.isclose(a, b, rel_tol=0, abs_tol=tol), f"{a} != {b} within {tol}"
