from sut import sum


def testSum1():
    assert sum(1, 2, 3) == 6


def testSum2():
    assert sum(2, 3, 4) == 9


def testSum3():
    assert sum(5, 0, 1) == 6
