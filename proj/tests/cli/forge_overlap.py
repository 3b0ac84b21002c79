"""Rewrites a clean trace so that a second process enters CS while the first
is still inside. Sequence numbers after the insertion are shifted."""
import json
import sys

src, dst = sys.argv[1], sys.argv[2]
events = [json.loads(line) for line in open(src) if line.strip()]
out = []
forged = False
for e in events:
    if forged:
        e["seq"] += 1
    out.append(e)
    if not forged and e["kind"] == "segment-enter" and e["note"] == "seg=CS":
        intruder = dict(e)
        intruder["pid"] = e["pid"] % max(ev["pid"] for ev in events) + 1
        intruder["seq"] = e["seq"] + 1
        out.append(intruder)
        forged = True
if not forged:
    sys.exit("no CS entry in " + src)
with open(dst, "w") as f:
    for e in out:
        f.write(json.dumps(e, separators=(",", ":")) + "\n")
