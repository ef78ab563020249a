"""Smoke test for the phasecache Python bindings.

Drives the engine from Python on buffers exported by the simulator and
checks the resulting trace against the in-process run, row for row.

    maturin develop -m crates/py/Cargo.toml
    python crates/py/python/smoke_test.py
"""

import sys

import numpy as np

import phasecache_py as pc


def check(cond, msg):
    if not cond:
        print(f"FAIL {msg}")
        sys.exit(1)


def main():
    config = pc.default_config()
    inputs = pc.sim_inputs(config)

    signatures = np.asarray(inputs["signatures"], dtype=np.float64).reshape(inputs["signature_shape"])
    engine = pc.Engine(signatures, config=config["engine"], schedule=config["schedule"])
    check(engine.total_blocks == 80, f"total_blocks {engine.total_blocks}")

    for flat, shape in zip(inputs["blocks"], inputs["block_shapes"]):
        block = np.asarray(flat, dtype=np.float64).reshape(shape)
        read_set, row = engine.step(block)
        check(len(read_set["heads"]) == shape[0] * shape[1], "one read entry per head")
        check(read_set["budget"] == row["read_budget"], f"budget at block {row['block_index']}")
    check(engine.is_finished, "engine finished")

    # cross-boundary fidelity: every field of every row
    check(engine.trace_csv() == pc.simulate(config), "binding trace differs from simulator trace")
    check(engine.trace_json() == pc.simulate(config, format="json"), "json traces differ")

    report = engine.budget_report()
    check(report["blocks"] == 80, "report blocks")

    # errors carry (message, code, field)
    bad = dict(config["engine"])
    bad["window"] = dict(bad["window"], w_min=20)
    try:
        pc.Engine(signatures, config=bad, schedule=config["schedule"])
        check(False, "invalid config accepted")
    except pc.PhasecacheError as e:
        check(e.args[1] == "config" and e.args[2] == "engine.window.w_min", f"error args {e.args}")

    try:
        engine.step(np.zeros((2, 4, 3, 16)))
        check(False, "step after finish accepted")
    except pc.PhasecacheError:
        pass

    p = pc.project([1.0, 2.0, 3.0], [0.0, 1.0, 0.0])
    check(np.allclose(p, [1.0, 0.0, 3.0]), f"projection {p}")
    rows = pc.window_schedule(config)
    check([r["window"] for r in rows if r["age"] == 0] == [12] * 6, "window peaks at segment starts")

    print(f"smoke test passed (phasecache_py {pc.__version__})")


if __name__ == "__main__":
    main()
