def next_value(n):
    if n % 2 == 0:
        return n // 2
    else:
        return 3 * n + 1

def main_solution(n):
    steps = 0
    while n != 1:
        n = next_value(n)
        steps += 1
    return steps
