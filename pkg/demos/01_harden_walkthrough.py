"""Walk through hardening a small FSM, stage by stage.

Run with: python3 demos/01_harden_walkthrough.py
"""

import json

import fsmguard as fg

TRAFFIC = {
    "name": "traffic",
    "states": ["RED", "GREEN", "YELLOW", "FLASH"],
    "reset": "RED",
    "inputs": [{"name": "go"}, {"name": "fault"}],
    "outputs": [{"name": "stop"}],
    "transitions": [
        {"from": "RED", "guard": {"go": 1, "fault": 0}, "to": "GREEN"},
        {"from": "GREEN", "guard": {"go": 0, "fault": 0}, "to": "YELLOW"},
        {"from": "YELLOW", "guard": {}, "to": "RED"},
        {"from": "RED", "guard": {"fault": 1}, "to": "FLASH"},
        {"from": "GREEN", "guard": {"fault": 1}, "to": "FLASH"},
    ],
    "state_outputs": {"RED": {"stop": 1}, "FLASH": {"stop": 1}},
}


def main():
    fsm = fg.parse_fsm(json.dumps(TRAFFIC))
    edges = fg.extract_cfg(fsm)
    print(f"FSM '{fsm.name}': {len(fsm.states)} states, {len(edges)} CFG edges")
    for e in edges:
        print(f"  {e.src:>7} --[{e.guard_label()}]--> {e.dst}")

    design = fg.harden(fsm, fg.HardeningConfig(protection_level=3, seed=1))

    print("\nState codebook (min distance "
          f"{fg.min_distance(design.state_codes)}):")
    for sym, word in design.state_codes.entries:
        print(f"  {sym:>11} = {word:0{design.state_codes.width}b}")

    print("\nControl codebook (one entry per guard configuration):")
    for sym, word in design.ctrl_codes.entries:
        print(f"  {sym:>11} = {word:0{design.ctrl_codes.width}b}")

    layout = design.layout
    print(f"\nDiffusion layout: k={layout.k} block(s) of 32 bits, "
          f"{layout.mod_width} modifier bits, {layout.error_bits} error bits per block")

    print("\nPer-transition modifiers:")
    for p in design.plans:
        print(f"  {p.edge.src:>7} --[{p.edge.guard_label()}]--> {p.edge.dst:<7}"
              f"  mod=0x{p.modifier:04x}")

    print("\nGate counts by pipeline stage:")
    for tag, count in design.gate_counts_by_tag().items():
        if tag:
            print(f"  {tag:<16}{count:>5}")
    print(f"  {'total':<16}{len(design.netlist.gates):>5} gates, "
          f"{len(design.netlist.flops)} flops")

    verilog = fg.emit_verilog(design.netlist)
    print(f"\nVerilog emission: {len(verilog.splitlines())} lines "
          f"(module {design.netlist.name})")


if __name__ == "__main__":
    main()
