def josephus_problem(array, k, index):
    if len(array) == 1:
        return array[0]
    index = (index + k) % len(array)
    array.pop(index)
    return josephus_problem(array, k, index)

def main_solution(n, k):
    array = list(range(1, n + 1))
    k = k - 1
    return josephus_problem(array, k, 0)
