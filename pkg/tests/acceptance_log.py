"""Shared PASS/FAIL ledger for the acceptance suite."""

RESULTS = []


def record(number: int, title: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} :: {detail}"
    RESULTS.append(line)
    print(line)
    return ok
