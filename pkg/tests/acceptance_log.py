"""Collects one verdict line per acceptance criterion for the terminal summary."""

LINES = []


def record(number: int, passed: bool, detail: str) -> str:
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    LINES.append(line)
    print(line)
    return line
