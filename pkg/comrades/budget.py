"""
Windowed answer budgets.

A client only answers a limited number of challenges per window so that
flooding its inbox cannot turn it into a hashing slave.
"""


class AnswerBudget(object):
    """
    A bucket of `limit` tokens that refills completely once `window` clock
    units have passed since the current window opened. The window opens on
    the first consumption after a refill, so any `window`-long span sees at
    most `limit` successful consumptions.
    """

    __slots__ = (
        'clock',
        'opened_at',
        'window',
        'limit',
        '_left',
    )

    def __init__(self, limit, window, clock):
        self.clock = clock
        self.opened_at = None
        self.window = window
        self.limit = limit
        self._left = limit

    def consume(self, tokens=1):
        """
        Attempt to take the given number of tokens. Returns `True` if there
        were enough left in the current window, otherwise `False`.
        """
        if 0 <= tokens <= self.tokens:
            if self.opened_at is None and tokens > 0:
                self.opened_at = self.clock()
            self._left -= tokens
            return True
        return False

    @property
    def tokens(self):
        """
        The number of tokens left in the current window.
        """
        opened_at = self.opened_at
        if opened_at is not None and self.clock() - opened_at >= self.window:
            self.opened_at = None
            self._left = self.limit
        return self._left

    def __getstate__(self):
        return dict(zip(
            self.__slots__,
            [getattr(self, attr) for attr in self.__slots__]))

    def __setstate__(self, state):
        for k in self.__slots__:
            setattr(self, k, state[k])
