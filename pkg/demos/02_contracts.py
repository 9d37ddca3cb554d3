"""Contracts decide whether an unchanged signature still breaks callers.

Asking more of callers (a stronger precondition) or promising them less (a
weaker postcondition) is breaking.  Two opaque predicates cannot be compared
at all, and that is where the pessimistic and optimistic policies part ways.
"""
from __future__ import annotations

from semvercalc import Policy, calculate_text, compare_post, compare_pre, parse_contract

PAIRS = [
    ("pre", "a >= 0", "a >= 1"),
    ("pre", "a >= 1", "a >= 0"),
    ("pre", "a > 0, a < 10", "a >= 1, a <= 9"),
    ("post", "nonnull(result)", ""),
    ("pre", "valid(xs)", "sorted(xs)"),
]


def sdl(kind: str, contract: str) -> str:
    attr = f"@{kind}({contract})" if contract else ""
    return f"component m 1.0.0 {{ {attr} fn f(a: Int, xs: List) -> Int? }}"


if __name__ == "__main__":
    pessimistic, optimistic = Policy.bundled("pessimistic"), Policy.bundled("optimistic")
    for kind, old, new in PAIRS:
        compare = compare_pre if kind == "pre" else compare_post
        relation = compare(parse_contract(old), parse_contract(new))
        levels = [calculate_text(sdl(kind, old), sdl(kind, new), p).level for p in (pessimistic, optimistic)]
        print(f"{kind:<4} {old or 'true':>16} -> {new or 'true':<16} {relation!s:<13} "
              f"pessimistic {levels[0]!s:<6} optimistic {levels[1]}")
