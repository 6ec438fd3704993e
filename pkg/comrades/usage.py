"""
Weekly usage windows: the minutes of the week a client's machine is expected
to be up and able to take part in a campaign.
"""

from collections import Counter


__all__ = (
    'ALL_WEEK',
    'WEEK',
    'UsageWindows',
    'learn_usage_windows',
)

WEEK = 7 * 24 * 60


class UsageWindows(object):
    """
    Sorted, non-overlapping `[start, end)` intervals of minute-of-week.
    """

    __slots__ = ('windows',)

    def __init__(self, windows):
        cleaned = sorted((int(start), int(end)) for start, end in windows)
        for start, end in cleaned:
            if not 0 <= start < end <= WEEK:
                raise ValueError(
                    "usage window [%d, %d) outside [0, %d)" % (
                        start, end, WEEK))
        for (_, prev_end), (start, _) in zip(cleaned, cleaned[1:]):
            if start < prev_end:
                raise ValueError("usage windows overlap at minute %d" % start)
        self.windows = tuple(cleaned)

    def __contains__(self, minute):
        m = minute % WEEK
        return any(start <= m < end for start, end in self.windows)

    def __eq__(self, other):
        if not isinstance(other, UsageWindows):
            return NotImplemented
        return self.windows == other.windows

    def __hash__(self):
        return hash(self.windows)

    def __repr__(self):
        return 'UsageWindows(%r)' % (list(self.windows),)

    def feasible(self, lo, hi):
        """
        The absolute minutes in `[lo, hi]` that fall inside a window, as a
        list of inclusive `(first, last)` intervals in ascending order.
        """
        if hi < lo:
            return []
        intervals = []
        week = (lo // WEEK) * WEEK
        while week <= hi:
            for start, end in self.windows:
                first = max(lo, week + start)
                last = min(hi, week + end - 1)
                if first <= last:
                    intervals.append((first, last))
            week += WEEK
        return intervals

    def to_list(self):
        return [list(w) for w in self.windows]


ALL_WEEK = UsageWindows([(0, WEEK)])


def learn_usage_windows(activity, slot=60, min_observations=1):
    """
    Derive usage windows from observed activity minutes (absolute sim
    minutes at which the mail client was in use). The week is cut into
    `slot`-minute slots; a slot seen active at least `min_observations`
    times becomes usable, and adjacent usable slots are merged.
    """
    if slot < 1 or WEEK % slot:
        raise ValueError("slot must divide the week evenly")
    counts = Counter((minute % WEEK) // slot for minute in activity)
    busy = sorted(s for s, n in counts.items() if n >= min_observations)
    windows = []
    for s in busy:
        if windows and windows[-1][1] == s * slot:
            windows[-1][1] = (s + 1) * slot
        else:
            windows.append([s * slot, (s + 1) * slot])
    return UsageWindows(windows)
