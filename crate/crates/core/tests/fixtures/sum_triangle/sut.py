def sum(a, b, c):
    return a + b + c


def triangle(a, b, c):
    if min(a, b, c) <= 0:
        raise ValueError("not a triangle")
    distinct = len({a, b, c})
    return "Equilateral" if distinct == 1 else "Isosceles" if distinct == 2 else "Scalene"
