"""Every verdict carries the reasoning that produced it.

The record lists the input facts, the policy digest and a derivation tree
for each fact behind the verdict.  Replaying the record re-runs the policy.
Editing a fact after the fact is caught.
"""
from __future__ import annotations

import json

from semvercalc import Policy, calculate_text, parse_record, render, replay_record
from semvercalc.provenance import ProvenanceError

OLD = """
component collections 2.1.0 {
  @post(nonnull(result))
  fn firstKey(m: Map) -> Str
  fn size(m: Map) -> Int
}
"""
NEW = OLD.replace("  @post(nonnull(result))\n", "")

if __name__ == "__main__":
    record = calculate_text(OLD, NEW).record
    print(render(record, "text"))

    text = render(record, "structured")
    print("replayed verdict:", replay_record(parse_record(text), Policy.bundled()))

    forged = json.loads(text)
    forged["facts"] = [f for f in forged["facts"] if f["predicate"] != "postWeakened"]
    try:
        replay_record(parse_record(json.dumps(forged)), Policy.bundled())
    except ProvenanceError as exc:
        print("forged record rejected:", exc)
