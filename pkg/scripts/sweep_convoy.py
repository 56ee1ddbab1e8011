"""Group size over a T_max x Ω grid for the bundled convoy scenario.

Prints one row per T_max with the size of client A's group for each Ω.
Sizes should not grow with T_max and should not shrink with Ω.
"""
import sys
import os
import argparse
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from spotex.config import DEFAULT_DELTA_MS, SCENARIOS_DIR
from spotex.proximity.groups import GroupParams, detect_group
from spotex.proximity.proxlog import LogStore
from spotex.simulation.simulator import load_scenario, simulate


def main():
    parser = argparse.ArgumentParser(description="T_max x omega sweep over a scenario")
    parser.add_argument("--scenario", default=os.path.join(SCENARIOS_DIR, "convoy.json"))
    parser.add_argument("--client", default=None, help="Querying client (default: first)")
    parser.add_argument("--tmax", type=int, nargs="+", default=[30, 60, 120])
    parser.add_argument("--omega", type=float, nargs="+", default=[3.0, 6.0, 12.0])
    parser.add_argument("--delta", type=int, default=DEFAULT_DELTA_MS)
    args = parser.parse_args()

    scenario = load_scenario(args.scenario)
    store = LogStore(simulate(scenario))
    client = args.client or scenario.clients[0].mac
    anchor = store.client_records(client)[-1]

    print(f"{'='*60}")
    print(f"  {os.path.basename(args.scenario)}: group of {client} at t={anchor.t}")
    print(f"{'='*60}")
    print(f"  {'T_max (s)':>10} " + " ".join(f"{'Ω=' + str(o):>8}" for o in args.omega))
    for tmax in args.tmax:
        sizes = []
        for omega in args.omega:
            params = GroupParams(delta=args.delta, omega=omega, t0=anchor.t, t_max=tmax * 1000)
            sizes.append(len(detect_group(store, client, anchor.fingerprint, params)))
        print(f"  {tmax:>10} " + " ".join(f"{s:>8}" for s in sizes))


if __name__ == "__main__":
    main()
