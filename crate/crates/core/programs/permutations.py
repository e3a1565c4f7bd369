def main_solution(string):
    char_list = list(string)
    perms = permutations(char_list)
    result = []
    for p in perms:
        result.append(''.join(p))
    return result
