def main_solution(num):
    if num < 0:
        return '-' + str(main_solution(-num))
    elif num < 7:
        return str(num)
    else:
        return str(main_solution(num // 7)) + str(num % 7)
