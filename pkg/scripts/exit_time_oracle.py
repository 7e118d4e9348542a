"""Pre-run the exit-probability baseline used by the acceptance gate.

The conservativeness criterion compares a fresh 2000-path run against
a frozen large-ensemble estimate of P(exit time of E_10 > 5).  This
script regenerates that baseline; it takes about half a minute.

    python scripts/exit_time_oracle.py [--n 10000]
"""

import argparse

from liouville.dbm import conservativeness_diagnostic

MASTER_SEED = 314159


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=10_000)
    args = ap.parse_args()
    rep = conservativeness_diagnostic(args.n, 5.0, 1e-4, 2.0, ks=(10,),
                                      master_seed=MASTER_SEED)
    p = rep.survival[10]
    se = rep.survival_se[10]
    print(f"P(sigma_E10 > 5) = {p:.6f}, SE = {se:.6f}, N = {rep.n_paths}, "
          f"seed = {MASTER_SEED}, alpha = 2, dt = 1e-4, x0 = (1, 0)")
    print(f"nonfinite paths: {rep.n_nonfinite}, flagged: {rep.n_flagged}")
    print("freeze as EXIT_P10_ORACLE / EXIT_P10_ORACLE_SE in "
          "tests/test_acceptance.py")


if __name__ == "__main__":
    main()
