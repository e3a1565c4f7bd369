def digit_sum(n):
    total = 0
    while n > 0:
        total += n % 10
        n = n // 10
    return total

def main_solution(n):
    while n >= 10:
        n = digit_sum(n)
    return n
