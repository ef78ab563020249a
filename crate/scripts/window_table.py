#!/usr/bin/env python3
"""Reference per-frame window table for the default rollout schedule.

Standalone on purpose: it shares no code with the Rust crate and is used to
produce the golden file checked by the acceptance tests.

    python3 scripts/window_table.py > crates/core/tests/data/window_schedule_default.csv
"""
import math
import sys

W_MIN, W_MAX = 7, 12
TAU_POST, TAU_PRE = 18.0, 9.0
BOUNDARIES = [40, 80, 120, 160, 200]
TOTAL = 240


def row(t):
    starts = [0] + BOUNDARIES
    seg = max(i for i, s in enumerate(starts) if s <= t)
    age = t - starts[seg]
    nxt = BOUNDARIES[seg] if seg < len(BOUNDARIES) else None
    w_post = math.exp(-age / TAU_POST)
    if nxt is None:
        dist, w_pre = None, 0.0
    else:
        dist = nxt - t
        w_pre = math.exp(-dist / TAU_PRE)
    w = max(w_post, w_pre)
    win = math.floor(W_MIN + (W_MAX - W_MIN) * w + 0.5)
    win = min(max(win, W_MIN), W_MAX)
    return [
        str(t),
        str(seg),
        str(age),
        "" if dist is None else str(dist),
        "%.9g" % w_post,
        "%.9g" % w_pre,
        "%.9g" % w,
        str(win),
    ]


def main():
    out = sys.stdout
    out.write("t,segment,age,distance,w_post,w_pre,w,window\n")
    for t in range(TOTAL):
        out.write(",".join(row(t)) + "\n")


if __name__ == "__main__":
    main()
