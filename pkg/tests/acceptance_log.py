"""Shared sink for acceptance result lines (printed at the end of a run)."""

LINES: list[str] = []


def record(name: str, ok: bool, detail: str) -> str:
    line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    LINES.append(line)
    print(line)
    return line
