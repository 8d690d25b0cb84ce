"""Command line front end: sweep, verify, calibrate, single.

sweep runs a full Monte Carlo sweep from a config file and writes the CSV
table. verify executes a quick self-check suite with one PASS/FAIL line
per check. calibrate prints the measurement settings each configured
method would choose before seeing any data. single executes one seeded
trial, optionally dumping the per-round transcript.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys

import numpy as np

from . import baselines, engine, harness, measurements, oracle
from .errors import QhtError
from .family import build_grid, state_from_angle
from .quantum import DensityMatrix, tensor_power


def _cmd_sweep(args) -> int:
    config = harness.parse_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, master_seed=args.seed)
    rows = harness.run_sweep(config)
    harness.emit_results(rows, args.output)
    print(f"wrote {len(rows)} rows to {args.output}")
    return 0


def _check(name: str, ok: bool, detail: str = "") -> bool:
    tag = "PASS" if ok else "FAIL"
    suffix = f"  ({detail})" if detail and not ok else ""
    print(f"{tag}  {name}{suffix}")
    return ok


def _verify_helstrom(rng: np.random.Generator) -> bool:
    worst = 0.0
    for _ in range(20):
        states = []
        for _ in range(2):
            a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            m = a @ a.conj().T
            states.append(DensityMatrix(m / np.trace(m).real))
        for w in (0.1, 0.3, 0.5, 0.7, 0.9):
            achieved = oracle.helstrom_error(states[0], states[1], w)
            bound = oracle.helstrom_bound(states[0], states[1], w)
            worst = max(worst, abs(achieved - bound))
    spot = oracle.helstrom_error(
        DensityMatrix(np.diag([1.0, 0.0]).astype(complex)),
        DensityMatrix(np.full((2, 2), 0.5, dtype=complex)),
        0.5,
    )
    ok = worst <= 1e-9 and abs(spot - 0.5 * (1.0 - math.sqrt(0.5))) <= 1e-5
    return _check("helstrom measurement reaches the optimal error", ok, f"worst gap {worst:.2e}")


def _verify_eprocess() -> bool:
    cfg, policy = oracle.small_policy()
    null_set, alt_set = oracle.small_sets()
    truth = state_from_angle(cfg, 45.0)
    gap = abs(
        oracle.eprocess_expectation(policy, truth, cfg, null_set, alt_set, horizon=2) - 1.0
    )
    mle_val = oracle.eprocess_expectation(
        policy, truth, cfg, null_set, alt_set, horizon=2, use_mle_denominator=True
    )
    ok = gap <= 1e-9 and mle_val <= 1.0 + 1e-9
    return _check(
        "null e-process expectation is exactly one",
        ok,
        f"gap {gap:.2e}, variant {mle_val:.6f}",
    )


def _verify_two_sided(rng: np.random.Generator) -> bool:
    cfg, policy = oracle.small_policy()
    null_set, alt_set = oracle.small_sets()
    bad = 0
    for k in range(300):
        omega = float(rng.uniform(45.0, 180.0))
        out = engine.run_sequential_test(
            policy,
            state_from_angle(cfg, omega),
            cfg,
            null_set,
            alt_set,
            eps0=0.05,
            budget=40,
            rng=np.random.default_rng([11, k]),
            eps1=0.05,
        )
        boundary = math.log(1.0 / 0.05)
        if out.final_log_slr >= boundary and (out.final_log_slr_rev or -math.inf) >= boundary:
            bad += 1
    return _check("one-sided statistics never cross together", bad == 0, f"{bad} violations")


def _verify_recompute(rng: np.random.Generator) -> bool:
    cfg, policy = oracle.small_policy()
    null_set, alt_set = oracle.small_sets()
    worst = 0.0
    for k in range(10):
        omega = float(rng.uniform(50.0, 179.0))
        records, logs = oracle.sample_transcript(
            policy,
            state_from_angle(cfg, omega),
            cfg,
            null_set,
            alt_set,
            n_rounds=5,
            rng=np.random.default_rng([13, k]),
        )
        redone = oracle.recompute_slr(records, cfg, null_set, alt_set)
        worst = max(worst, float(np.max(np.abs(redone - logs))))
    return _check("incremental log ratio matches full recomputation", worst <= 1e-9, f"worst {worst:.2e}")


def _cmd_verify(args) -> int:
    rng = np.random.default_rng(20260815)
    results = [
        _verify_helstrom(rng),
        _verify_eprocess(),
        _verify_two_sided(rng),
        _verify_recompute(rng),
    ]
    return 0 if all(results) else 1


def _cmd_calibrate(args) -> int:
    config = harness.parse_config(args.config)
    fam = config.family()
    alt_grid = build_grid(config.alt_set, config.grid_resolution)
    null_grid = build_grid(config.null_set, config.grid_resolution)
    w1 = engine.predictable_estimate(alt_grid, fam, has_rounds=False).omega
    w0 = engine.predictable_estimate(null_grid, fam, has_rounds=False).omega
    print(f"reference null angle {w0:g}, reference alternative angle {w1:g}")
    state0 = state_from_angle(fam, w0)
    state1 = state_from_angle(fam, w1)
    for method in config.methods:
        if method == "aLHT":
            print(f"{method}: weight drawn uniformly at random each block")
        elif method == "aLHT+":
            lam = measurements.optimize_lambda(
                state0, state1, config.n_joint, config.lambda_grid_size
            )
            print(f"{method}: first-block weight {lam:g}")
        elif method == "aLVT":
            theta = measurements.optimize_theta(
                state0, state1, config.n_joint, config.theta_grid_size
            )
            print(f"{method}: first-block rotation {theta:g} rad")
        elif method in ("LHT", "bLHT"):
            omega0 = config.point_null_angle()
            pow0 = tensor_power(state_from_angle(fam, omega0), config.n_joint).mat
            pow1 = tensor_power(state1, config.n_joint).mat
            if method == "LHT":
                blocks_list = [1]
            else:
                blocks_list = sorted(
                    {b // (config.n_ic + config.n_joint) for b in config.budgets}
                )
            for blocks in blocks_list:
                lam, alpha, power = baselines.helstrom_calibration(
                    pow0, pow1, config.eps0, config.lambda_grid_size, blocks
                )
                print(
                    f"{method}: blocks {blocks}, weight {lam:g}, "
                    f"block size {alpha:.4g}, block power {power:.4g}"
                )
        else:
            print(f"{method}: threshold depends on the estimated alternative; "
                  f"reference angle {w1:g} shown")
            thetas, u = baselines._unitary_grid(config.theta_grid_size, config.n_joint)
            q = baselines._rotated_basis_probs(u, tensor_power(state1, config.n_joint).mat)
            nstack = np.stack(
                [
                    tensor_power(state_from_angle(fam, w), config.n_joint).mat
                    for w in null_grid.angles
                ]
            )
            pn = np.einsum("txa,jab,txb->txj", u, nstack, u.conj()).real.clip(min=0.0)
            blocks_list = (
                [1]
                if method == "LVT"
                else sorted({b // (config.n_ic + config.n_joint) for b in config.budgets})
            )
            for blocks in blocks_list:
                power, tau = baselines._calibrate_variational(q, pn, config.eps0, blocks)
                t = int(np.argmax(power))
                print(
                    f"{method}: blocks {blocks}, rotation {thetas[t]:g} rad, "
                    f"threshold {tau[t]:g}, block power {power[t]:.4g}"
                )
    return 0


def _cmd_single(args) -> int:
    config = harness.parse_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, master_seed=args.seed)
    method = args.method
    if method not in harness.METHOD_IDS:
        raise QhtError(f"unknown method {method!r}")
    budget = args.budget
    b_idx = config.budgets.index(budget) if budget in config.budgets else 0
    rng = np.random.default_rng([config.master_seed, harness.METHOD_IDS[method], b_idx, 0])
    fam = config.family()
    truth = state_from_angle(fam, config.truth_omega)
    if method in harness.SEQUENTIAL_METHODS:
        out = engine.run_sequential_test(
            harness._policy(config, method),
            truth,
            fam,
            config.null_set,
            config.alt_set,
            config.eps0,
            budget,
            rng,
            resolution=config.grid_resolution,
            collect_trace=args.trace,
        )
        print(
            f"{method} budget {budget}: {out.decision} after {out.rounds_used} rounds, "
            f"{out.copies_used} copies, final log ratio {out.final_log_slr:.6g}"
        )
        if args.trace:
            for row in out.trace:
                print(
                    f"  round {row.index:3d}  {row.descriptor:<44s} copies {row.copies}  "
                    f"outcome {row.outcome}  log ratio {row.log_slr:.6g}"
                )
    else:
        fcfg = harness._fixed_config(config, method, budget)
        omega0 = config.point_null_angle()
        if method == "LHT":
            out = baselines.run_lht(fcfg, truth, fam, omega0, config.alt_set, rng)
        elif method == "bLHT":
            out = baselines.run_blht(fcfg, truth, fam, omega0, config.alt_set, rng)
        elif method == "LVT":
            out = baselines.run_lvt(fcfg, truth, fam, config.null_set, config.alt_set, rng)
        else:
            out = baselines.run_blvt(fcfg, truth, fam, config.null_set, config.alt_set, rng)
        verdict = "reject" if out.decision == 1 else "accept"
        print(
            f"{method} budget {budget}: {verdict}, {out.copies_used} copies, "
            f"{out.rounds_used} measurement rounds"
        )
        if args.trace:
            print("  (per-round traces exist for sequential methods only)")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qhtest", description="Sequential and fixed-copy quantum hypothesis tests."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a Monte Carlo sweep from a config file")
    p_sweep.add_argument("config")
    p_sweep.add_argument("-o", "--output", required=True)
    p_sweep.add_argument("--seed", type=int, default=None, help="override master_seed")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the built-in self checks")
    p_verify.set_defaults(func=_cmd_verify)

    p_cal = sub.add_parser("calibrate", help="print pre-data measurement settings")
    p_cal.add_argument("config")
    p_cal.set_defaults(func=_cmd_calibrate)

    p_single = sub.add_parser("single", help="run one seeded trial")
    p_single.add_argument("config")
    p_single.add_argument("--method", required=True)
    p_single.add_argument("--budget", type=int, required=True)
    p_single.add_argument("--seed", type=int, default=None, help="override master_seed")
    p_single.add_argument("--trace", action="store_true", help="dump per-round transcript")
    p_single.set_defaults(func=_cmd_single)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QhtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
