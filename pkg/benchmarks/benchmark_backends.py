#!/usr/bin/env python3
"""Compare the compiled loop kernel against the NumPy fallback.

Runs the two built-in presets end to end on both backends, reports steps/s,
and checks that the trajectories agree to tolerance.

    python3 benchmarks/benchmark_backends.py [--horizon 3000] [--repeats 3]
"""

import argparse
import time

import numpy as np

from orlspi import backend, config, loop


def bench(exp, seed, stepper_name, algorithm, repeats):
    run = loop.orls_pg_run if algorithm == "pg" else loop.orls_pi_run
    schedule = exp.schedule(seed)
    trace = run(exp.orls_config(seed), schedule, stepper_name=stepper_name)  # warmup
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        run(exp.orls_config(seed), schedule, stepper_name=stepper_name)
        best = min(best, time.perf_counter() - t0)
    return trace, best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--horizon", type=int, default=3000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    try:
        backend.get_stepper("compiled")
        backends = ("python", "compiled")
    except Exception:
        print("compiled stepper unavailable; timing the NumPy fallback only\n")
        backends = ("python",)

    cases = [
        ("paper_5_1", "PB1", "pi"),
        ("paper_5_1", "EB", "pi"),
        ("paper_5_2", "EB", "pg"),
    ]
    print(f"horizon={args.horizon}, best of {args.repeats} repeats\n")
    print(f"{'case':<28} {'backend':<9} {'time':>9} {'steps/s':>10}")
    for name, kind, algorithm in cases:
        exp = config.from_dict(
            {
                "name": "bench",
                "preset": name,
                "schedule": {"kind": kind},
                "horizon": args.horizon,
                "seeds": [1],
            }
        )
        results = {}
        for stepper_name in backends:
            trace, secs = bench(exp, 1, stepper_name, algorithm, args.repeats)
            results[stepper_name] = (trace, secs)
            label = f"{name}/{kind}/{algorithm}"
            print(f"{label:<28} {stepper_name:<9} {secs:>8.3f}s {args.horizon / secs:>10.0f}")
        if len(results) == 2:
            tr_p, _ = results["python"]
            tr_c, _ = results["compiled"]
            drift = max(
                float(np.max(np.abs(tr_p.err_p - tr_c.err_p))),
                float(np.max(np.abs(tr_p.err_theta - tr_c.err_theta))),
            )
            speedup = results["python"][1] / results["compiled"][1]
            print(f"{'':<28} agreement {drift:.2e}, speedup x{speedup:.1f}\n")


if __name__ == "__main__":
    main()
