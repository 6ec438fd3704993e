from comrades.usage import ALL_WEEK, WEEK, UsageWindows, learn_usage_windows


def test_membership():
    windows = UsageWindows([(600, 1200), (60, 120)])
    assert windows.windows == ((60, 120), (600, 1200))
    assert 60 in windows
    assert 119 in windows
    assert 120 not in windows
    assert WEEK + 600 in windows
    assert 3 * WEEK + 1199 in windows
    assert 0 in ALL_WEEK and WEEK - 1 in ALL_WEEK


def test_validation():
    for bad in ([(10, 10)], [(-1, 5)], [(0, WEEK + 1)],
                [(0, 100), (50, 150)]):
        try:
            UsageWindows(bad)
            assert False, "%r should be rejected" % (bad,)
        except ValueError:
            pass


def test_equality():
    assert UsageWindows([(0, 10)]) == UsageWindows([[0, 10]])
    assert hash(UsageWindows([(0, 10)])) == hash(UsageWindows([(0, 10)]))
    assert UsageWindows([(0, 10)]) != UsageWindows([(0, 11)])
    assert UsageWindows([(5, 9)]).to_list() == [[5, 9]]


def test_feasible():
    windows = UsageWindows([(60, 120)])
    assert windows.feasible(0, 1440) == [(60, 119)]
    assert windows.feasible(100, 1440) == [(100, 119)]
    assert windows.feasible(120, 1440) == []
    assert windows.feasible(WEEK - 10, WEEK + 70) == [(WEEK + 60, WEEK + 70)]
    assert windows.feasible(5, 4) == []
    assert ALL_WEEK.feasible(60, 1440) == [(60, 1440)]
    assert ALL_WEEK.feasible(WEEK - 1, WEEK) == [(WEEK - 1, WEEK - 1),
                                                 (WEEK, WEEK)]


def test_learn_usage_windows():
    # Mail client used 09:00-10:59 on two Mondays, once at 20:15 on Tuesday.
    activity = [540, 600, 660, WEEK + 545, WEEK + 610, 1440 + 1215]
    learned = learn_usage_windows(activity)
    assert learned.windows == ((540, 720), (2640, 2700))
    assert learn_usage_windows(activity, min_observations=2).windows == (
        (540, 660),)
    assert learn_usage_windows([]).windows == ()


def test_learn_rejects_bad_slot():
    for slot in (11, 0, -60):
        try:
            learn_usage_windows([1], slot=slot)
            assert False, "slot=%d should be rejected" % slot
        except ValueError:
            pass
    # Any divisor of the week is fine.
    assert learn_usage_windows([1], slot=7).windows == ((0, 7),)
