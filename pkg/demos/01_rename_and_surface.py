"""A wholesale rename, seen from three distances.

A bytecode library moves every declaration from an ``objectweb_`` prefix to
``ow2_``.  Under the open world every public name is reachable, so the
release is breaking.  A client that only calls a function the rename left
alone sees nothing, and neither does anyone when the renamed functions were
never exported.
"""
from __future__ import annotations

from semvercalc import ClosedWorld, DeclaredExports, UsageProfile, calculate_text

OLD = """
component asm 5.0.0 {
  fn objectweb_read(path: Str) -> Bytes
  fn objectweb_write(b: Bytes) -> Unit
  fn log_hook(msg: Str) -> Unit
}
"""
NEW = OLD.replace("objectweb_", "ow2_")


def show(label: str, calc) -> None:
    changed = ", ".join(str(c) for c in calc.changes)
    print(f"{label:<28} verdict {calc.level!s:<6} next {calc.recommended}   [{changed}]")


if __name__ == "__main__":
    show("open world", calculate_text(OLD, NEW))

    client = UsageProfile("logger-plugin", frozenset({"log_hook"}))
    show("closed world, log client", calculate_text(OLD, NEW, mode=ClosedWorld(client)))

    exported_old = OLD.replace("{\n", "{\n  exports { log_hook }\n", 1)
    exported_new = NEW.replace("{\n", "{\n  exports { log_hook }\n", 1)
    show("declared exports", calculate_text(exported_old, exported_new, mode=DeclaredExports()))
