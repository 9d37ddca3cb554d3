"""Writing a house policy.

This team treats removing a function it had already deprecated as a minor
change.  The rule
uses negation: a removal is major only when no deprecation was recorded for
it in the old release.  The facts come from the same diff as always.
"""
from __future__ import annotations

from semvercalc import Policy, calculate_text, evaluate, verdict

HOUSE = """
% deprecated in the old release, per an external fact producer
major removed: impact_major(F) :- functionRemoved(F), inSurface(F), not wasDeprecated(F).
minor removed_after_notice: impact_minor(F) :- functionRemoved(F), wasDeprecated(F).
minor added: impact_minor(F) :- functionAdded(F), inSurface(F).
"""

OLD = "component util 3.0.0 { @deprecated fn legacy() -> Int  fn current() -> Int }"
NEW = "component util 3.0.0 { fn current() -> Int  fn shiny() -> Int }"

if __name__ == "__main__":
    policy = Policy.from_text(HOUSE, "house")
    calc = calculate_text(OLD, NEW, Policy.bundled())
    print("bundled policy:", calc.level)

    # The diff does not know what was deprecated before; a second tool adds it.
    facts = calc.facts + [("wasDeprecated", ("legacy",))]
    level, support = verdict(evaluate(policy.rules, facts), policy.rules)
    print("house policy:  ", level)
    for d in support:
        print(f"  {d.fact}  by rule {d.rule_id}")
