"""Cross-check detect_group against the exhaustive oracle on random logs.

Every client of every random log is queried at its last scan with random
Δ and Ω. Exits non-zero on the first disagreement.
"""
import sys
import os
import argparse
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np

from spotex.config import EXIT_MISMATCH, SEED
from spotex.proximity.groups import GroupParams, brute_force_group, detect_group
from spotex.simulation.simulator import random_log


def main():
    parser = argparse.ArgumentParser(description="detect_group vs brute_force_group")
    parser.add_argument("--stores", type=int, default=200, help="Random logs to try")
    parser.add_argument("--seed", type=int, default=SEED)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    checked = 0
    for i in range(args.stores):
        store = random_log(rng)
        delta = int(rng.integers(1, 11)) * 1000
        omega = float(rng.uniform(3, 15))
        t_max = int(rng.integers(delta, 60001))
        for client in store.clients():
            anchor = store.client_records(client)[-1]
            params = GroupParams(delta=delta, omega=omega, t0=anchor.t, t_max=t_max)
            got = detect_group(store, client, anchor.fingerprint, params)
            want = brute_force_group(store, client, anchor.fingerprint, params)
            checked += 1
            if got != want:
                print(f"MISMATCH in store {i}, client {client}: "
                      f"detect={sorted(got)} oracle={sorted(want)} "
                      f"(delta={delta}, omega={omega:.2f}, t_max={t_max})")
                sys.exit(EXIT_MISMATCH)

    print(f"{checked} queries over {args.stores} stores: detect_group agrees with the oracle")


if __name__ == "__main__":
    main()
