def main_solution(phrase):
    letters = "".join(phrase.lower().split())
    left = 0
    right = len(letters) - 1
    while left < right:
        if letters[left] != letters[right]:
            return False
        left += 1
        right -= 1
    return True
