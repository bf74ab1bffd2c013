"""Regenerate the warehouse fixture family under src/vgoalmc/fixtures/.

Every warehouse fixture shares one rule base; variants differ in the goal
sequences of the robots and in the injected defects.

    python tools/gen_fixtures.py
"""

from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "vgoalmc" / "fixtures"

HEADER = """\
# Warehouse logistics system: robots A1..A3 at docks 6, 7, 8 transport
# workpieces from pick-up stations 3 and 4 to drop-off station 2.  The
# resource agent R grants exclusive access to stations.
# Generated by tools/gen_fixtures.py -- edit the template, not this file.
"""

ROBOTS = {
    "A1": "{at(6), battery(1), docked(6), assigned(6)}",
    "A2": "{at(7), battery(1), docked(7), assigned(7)}",
    "A3": "{at(8), battery(1), docked(8), assigned(8)}",
}
DOCKS = {"A1": "6", "A2": "7", "A3": "8"}

RESOURCE_BELIEFS = "{idle(2), idle(3), idle(4), idle(5)"

KNOWLEDGE = """\
knowledge:
  battery(1) implies safe1.
  battery(2) implies safe1.
  exists p. at(p) and not at(9) implies safe2.
  permit(T) implies allowed(T).
  assigned(T) implies allowed(T).
  delivered(P, D) and at(H) and assigned(H) implies transport(P, D).
  {prio}
  received(B, request(L)) and prio(B, A) implies outranked(A, L).
"""


ACTIONS = """\
actions:
  goal(transport(P, D)) and at(H) and assigned(H) and battery(2) and not carrying(P) and not delivered(P, D) implies do move(H, P).
  goal(transport(P, D)) and at(P) and not carrying(P) implies do pick(P).
  goal(transport(P, D)) and at(P) and carrying(P) implies do move(P, D).
  goal(transport(P, D)) and at(D) and carrying(P) implies do drop(P, D).
  goal(transport(P, D)) and at(D) and delivered(P, D) and assigned(H) implies do move(D, H).
  battery(1) and at(H) and assigned(H) implies do charge.
"""

SEND = """\
send:
  goal(transport(P, D)) and at(H) and assigned(H) and not carrying(P) and not delivered(P, D) and not permit(P) implies send R: request(P).
  goal(transport(P, D)) and at(P) and carrying(P) and not permit(D) implies send R: request(D).
  vacated(L) and not assigned(L) implies send R: release(L).
  received(A, request(L)) and reserved(A, L) implies send A: grant(L).
"""

GRANT = "received(A, request(L)) and idle(L) and not outranked(A, L) implies del idle(L), add reserved(A, L)."
# defect: simultaneous requests for one station are all refused
GRANT_DEADLOCK = (
    "received(A, request(L)) and idle(L) and not contested(L) implies del idle(L), add reserved(A, L)."
)

EVENTS = """\
events:
  {grant}
  received(A, release(L)) and reserved(A, L) implies del reserved(A, L), add idle(L).
  received(R, grant(L)) and not at(L) implies add permit(L).
  vacated(L) implies del vacated(L).
  delivered(P, D) and at(H) and assigned(H) implies del delivered(P, D), del battery(2), add battery(1).
"""

EFFECTS = """\
effects:
  action move(F, T) requires at(F) and allowed(T) and not err_base
    outcome move_ok: add at(T), docked(T), vacated(F) del at(F), docked(F), permit(T)
    outcome move_dock_err
    outcome move_base_err: add err_base.
  action pick(P) requires at(P) and docked(P) and not err_base
    outcome pick_ok: add carrying(P)
    outcome pick_err.
  action drop(P, D) requires at(D) and carrying(P) and not err_base
    outcome drop_ok: add delivered(P, D) del carrying(P)
    outcome drop_err.
  action charge requires battery(1) and not err_charge
    outcome charge_ok: add battery(2) del battery(1)
    outcome charge_err: add err_charge.
"""

DOMAINS = """\
domains:
  loc = {2, 3, 4, 5, 6, 7, 8, 9}.
  station = {2, 3, 4}.
  dock = {6, 7, 8}.
  agent = {__AGENTS__}.
  robot = {__ROBOTS__}.
  F, T, L, p in loc.
  P, D in station.
  H in dock.
  A, B in robot.
"""

PROB = """\
prob:
  move_ok = 0.9.
  move_dock_err = 0.08.
  move_base_err = 0.02.
  pick_ok = 0.95.
  pick_err = 0.05.
  drop_ok = 0.95.
  drop_err = 0.05.
  charge_ok = 0.9.
  charge_err = 0.1.
"""


def warehouse(goals: dict, *, drop_safety=False, no_pick4=False, deadlock=False, partial_priority=False) -> str:
    """Render a warehouse fixture; `goals` maps robot id -> list of goal names.

    With `partial_priority` only the first robot outranks the others, so the
    remaining robots may hold stations in either order.
    """
    robots = list(goals)
    lines = [HEADER, "agents:", "  goal g1 = {transport(3,2)}.", "  goal g2 = {transport(4,2)}."]
    for rid in robots:
        lines.append(f"  agent {rid} beliefs {ROBOTS[rid]} goals [{', '.join(goals[rid])}].")
    reserved = "".join(f", reserved({rid},{DOCKS[rid]})" for rid in robots)
    lines.append(f"  agent R beliefs {RESOURCE_BELIEFS}{reserved}}} goals [].")
    prio = "\n  ".join(
        f"prio({a}, {b})."
        for i, a in enumerate(robots)
        for b in robots[i + 1 :]
        if not (partial_priority and i > 0)
    )
    kn = KNOWLEDGE.format(prio=prio or "")
    if deadlock:
        kn += "  received(A, request(L)) and received(B, request(L)) and A != B implies contested(L).\n"
    if drop_safety:
        kn = kn.replace("  battery(1) implies safe1.\n", "")
    actions = ACTIONS
    if no_pick4:
        actions = actions.replace(
            "  goal(transport(P, D)) and at(P) and not carrying(P) implies do pick(P).\n",
            "  goal(transport(3, D)) and at(3) and not carrying(3) implies do pick(3).\n",
        )
    events = EVENTS.format(grant=GRANT_DEADLOCK if deadlock else GRANT)
    domains = DOMAINS.replace("__AGENTS__", ", ".join(robots + ["R"])).replace("__ROBOTS__", ", ".join(robots))
    safety = "safety:\n" + "".join(f"  {rid}: safe1, safe2.\n" for rid in robots)
    return "\n".join(lines) + "\n" + "".join([kn, actions, SEND, events, EFFECTS, domains, PROB, safety])


FIXTURES = {
    "warehouse_g1.vg": dict(goals={"A1": ["g1"]}),
    "warehouse_A1_g1g2g1.vg": dict(goals={"A1": ["g1", "g2", "g1"]}),
    "warehouse_A1_g1g1g2g2g1.vg": dict(goals={"A1": ["g1", "g1", "g2", "g2", "g1"]}),
    "warehouse_g1_g2.vg": dict(goals={"A1": ["g1"], "A2": ["g2"]}),
    "warehouse_g1g2_g2.vg": dict(goals={"A1": ["g1", "g2"], "A2": ["g2"]}),
    "warehouse_g1g1g1.vg": dict(goals={"A1": ["g1"], "A2": ["g1"], "A3": ["g1"]}),
    "warehouse_g1g2g1.vg": dict(goals={"A1": ["g1"], "A2": ["g2"], "A3": ["g1"]}),
    "warehouse_multi.vg": dict(
        goals={"A1": ["g1", "g2", "g1"], "A2": ["g2", "g1", "g1"], "A3": ["g1", "g2", "g1"]},
        partial_priority=True,
    ),
    "warehouse_err_safety.vg": dict(goals={"A1": ["g1", "g2"], "A2": ["g2", "g1"], "A3": ["g1"]}, drop_safety=True),
    "warehouse_err_unreachable.vg": dict(goals={"A1": ["g1", "g2"], "A2": ["g2", "g1"], "A3": ["g1"]}, no_pick4=True),
    "warehouse_err_deadlock.vg": dict(goals={"A1": ["g1", "g2"], "A2": ["g2", "g1"], "A3": ["g1"]}, deadlock=True),
    "warehouse_sound.vg": dict(goals={"A1": ["g1", "g2"], "A2": ["g2", "g1"], "A3": ["g1"]}),
}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, kw in FIXTURES.items():
        (OUT / name).write_text(warehouse(**kw), encoding="utf-8")
        print("wrote", name)


if __name__ == "__main__":
    main()
