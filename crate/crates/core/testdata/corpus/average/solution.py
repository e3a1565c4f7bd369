def main_solution(values):
    total = sum(values)
    return total // len(values)
