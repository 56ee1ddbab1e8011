"""spotex CLI — simulate scans, check and replay rules, query groups, metrics and check-ins.

Usage:
    spotex simulate spotex/data/scenarios/convoy.json convoy.jsonl
    spotex rules-check spotex/data/rules/coupon.spotex --list
    spotex replay spotex/data/rules/coupon.spotex convoy.jsonl --client 0a:00:00:00:00:01
    spotex groups convoy.jsonl --client 0a:00:00:00:00:01 --tmax 60 --oracle
    spotex metrics convoy.jsonl --client-a 0a:00:00:00:00:01 --client-b 0a:00:00:00:00:02
    spotex checkin registry.jsonl nearby --log convoy.jsonl --client 0a:00:00:00:00:01 --threshold 10
    spotex info

Machine-readable results go to stdout (JSON), diagnostics to stderr.
Exit codes: 0 ok, 2 input error, 3 oracle mismatch.
"""

import argparse
import json
import logging
import sys

from spotex.config import EXIT_INPUT_ERROR, EXIT_MISMATCH, EXIT_OK
from spotex.errors import SpotexError

logger = logging.getLogger("spotex.cli")


def _parse_attrs(pairs):
    attrs = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise SpotexError(f"attribute must look like key=value, got {pair!r}")
        try:
            attrs[key] = int(value)
        except ValueError:
            raise SpotexError(f"attribute {key!r} must be an integer, got {value!r}") from None
    return attrs


def _emit(obj):
    print(json.dumps(obj, ensure_ascii=False))


def cmd_simulate(args):
    """Run a scenario and write its scan log."""
    import os
    from spotex.config import SEED_ENV_VAR
    from spotex.proximity.proxlog import save_log
    from spotex.simulation.simulator import load_scenario, simulate

    scenario = load_scenario(args.scenario)
    seed_override = os.environ.get(SEED_ENV_VAR)
    if seed_override is not None:
        try:
            scenario = scenario.with_seed(int(seed_override))
        except ValueError:
            raise SpotexError(f"{SEED_ENV_VAR} must be an integer, got {seed_override!r}") from None
        logger.info("seed overridden by %s=%s", SEED_ENV_VAR, seed_override)

    records = simulate(scenario)
    n = save_log(records, args.out)
    _emit({"records": n, "clients": len(scenario.clients), "seed": scenario.seed,
           "out": args.out})
    return EXIT_OK


def cmd_rules_check(args):
    """Parse a rule file and report how many rules it holds."""
    from spotex.rules.parser import load_rules, render_rule

    rules = load_rules(args.rules)
    print(f"{len(rules)} rule" + ("" if len(rules) == 1 else "s"))
    if args.list:
        for rule in rules:
            _emit({"id": rule.id, "line": rule.line,
                   "predicates": sorted(rule.predicate_names), "rule": render_rule(rule)})
    return EXIT_OK


def cmd_replay(args):
    """Stream one client's scans through the rule set, printing each firing."""
    from datetime import timezone
    from spotex.proximity.proxlog import load_log
    from spotex.radio.fingerprint import normalize_mac
    from spotex.rules.engine import EvalContext, RuleBook, VisitHistory, scan_time
    from spotex.rules.parser import load_rules

    book = RuleBook(load_rules(args.rules))
    store = load_log(args.log)
    client = normalize_mac(args.client)
    attrs = _parse_attrs(args.attr)
    history = VisitHistory()
    tz = timezone.utc if args.utc else None

    records = store.client_records(client)
    if not records:
        logger.warning("no records for %s in %s", client, args.log)
    for rec in records:
        ctx = EvalContext(scan=rec.fingerprint, client=client,
                          now=scan_time(rec.t, tz),
                          attrs=attrs, history=history, log=store,
                          delta=args.delta, omega=args.omega)
        for rule_id, message in book.match(ctx):
            _emit({"t": rec.t, "rule": rule_id, "message": message})
    return EXIT_OK


def cmd_groups(args):
    """Print the group a client travelled with, optionally checked against the oracle."""
    from spotex.errors import NoAnchorMeasurementError
    from spotex.proximity.groups import GroupParams, brute_force_group, detect_group
    from spotex.proximity.proxlog import load_log
    from spotex.radio.fingerprint import normalize_mac

    store = load_log(args.log)
    client = normalize_mac(args.client)
    t0 = args.t0
    if t0 is None:
        own = store.client_records(client)
        if not own:
            raise NoAnchorMeasurementError(f"no records for {client}")
        t0 = own[-1].t
    anchor = store.anchor(client, t0)
    if anchor is None:
        raise NoAnchorMeasurementError(f"no anchor measurement for {client} at or before t={t0}")

    params = GroupParams(delta=args.delta, omega=args.omega, t0=t0, t_max=int(args.tmax * 1000))
    group = detect_group(store, client, anchor.fingerprint, params)
    _emit(sorted(group))

    if args.oracle:
        expected = brute_force_group(store, client, anchor.fingerprint, params)
        if expected != group:
            print(f"MISMATCH: detect_group={sorted(group)} oracle={sorted(expected)}",
                  file=sys.stderr)
            return EXIT_MISMATCH
        logger.info("oracle agrees on %d member(s)", len(group))
    return EXIT_OK


def cmd_metrics(args):
    """Compare averaged fingerprints of two clients, or rank neighbours of one."""
    from spotex.errors import FingerprintError, MetricError
    from spotex.proximity.proxlog import load_log
    from spotex.radio.fingerprint import average_vector, normalize_mac
    from spotex.radio.metrics import (
        aligned_rankings, distance, knn_neighbors, spearman_correlation,
    )

    store = load_log(args.log)
    client_a = normalize_mac(args.client_a)

    def averaged(client):
        records = store.client_records(client)
        if not records:
            raise FingerprintError(f"no scans for {client}")
        return average_vector([r.fingerprint for r in records])

    if args.knn is not None:
        if args.metric == "spearman":
            raise MetricError("kNN needs a distance metric (euclidean or tanimoto)")
        query = store.anchor(client_a, float("inf"))
        if query is None:
            raise FingerprintError(f"no scans for {client_a}")
        db = [(c, averaged(c)) for c in store.clients() if c != client_a]
        for label, result in knn_neighbors(query.fingerprint, db, args.knn, args.metric):
            _emit({"client": label, **result.to_dict()})
        return EXIT_OK

    if args.client_b is None:
        raise SpotexError("--client-b is required unless --knn is given")
    va, vb = averaged(client_a), averaged(normalize_mac(args.client_b))
    if args.metric == "spearman":
        ra, rb = aligned_rankings(va, vb)
        _emit({"metric": "spearman", "value": spearman_correlation(ra, rb)})
    else:
        _emit(distance(va, vb, args.metric).to_dict())
    return EXIT_OK


def _query_scan(args):
    from spotex.errors import FingerprintError
    from spotex.proximity.proxlog import load_log
    from spotex.radio.fingerprint import normalize_mac

    store = load_log(args.log)
    client = normalize_mac(args.client)
    rec = store.anchor(client, float("inf") if args.at is None else args.at)
    if rec is None:
        raise FingerprintError(f"no scan for {client} at or before {args.at}")
    return rec.fingerprint


def cmd_checkin(args):
    """Add, query or expire check-ins in a file-backed registry."""
    from spotex.proximity.checkin import load_registry, make_checkin, save_registry

    registry = load_registry(args.registry)

    if args.action == "add":
        fp = _query_scan(args)
        rec = make_checkin(args.identity, fp, ttl_ms=args.ttl, attrs=_parse_attrs(args.attr))
        registry.register(rec, fp.t if args.now is None else args.now)
        save_registry(registry, args.registry)
        _emit({"identity": rec.identity, "t": rec.t, "expires_at": rec.expires_at})

    elif args.action == "nearby":
        fp = _query_scan(args)
        now = fp.t if args.now is None else args.now
        for identity, d in registry.nearby(fp, args.metric, args.threshold, now,
                                           exclude_identity=args.exclude):
            _emit({"identity": identity, "distance": d})

    else:
        removed = registry.expire(args.now)
        save_registry(registry, args.registry)
        _emit({"expired": removed, "remaining": len(registry)})
    return EXIT_OK


def cmd_info(args):
    """Print version, defaults, predicate vocabulary and bundled data."""
    import os
    from spotex import __version__
    from spotex.config import (
        CHECKIN_TTL_MS, DEFAULT_DELTA_MS, DEFAULT_OMEGA_DB, DEFAULT_TMAX_S,
        RULES_DIR, SCENARIOS_DIR,
    )
    from spotex.rules.registry import describe_predicates

    print(f"spotex v{__version__}")
    print(f"{'='*50}")
    print(f"\nDefaults:")
    print(f"  Delta (time threshold):  {DEFAULT_DELTA_MS} ms")
    print(f"  Omega (RSSI threshold):  {DEFAULT_OMEGA_DB} dB")
    print(f"  T_max (groups lookback): {DEFAULT_TMAX_S} s")
    print(f"  Check-in TTL:            {CHECKIN_TTL_MS} ms")
    print(f"\nPredicates:")
    print(describe_predicates())
    print(f"\nBundled data:")
    for folder in (SCENARIOS_DIR, RULES_DIR):
        for name in sorted(os.listdir(folder)) if os.path.isdir(folder) else ():
            print(f"  {os.path.join(os.path.basename(folder), name)}")
    return EXIT_OK


def _add_group_thresholds(p):
    from spotex.config import DEFAULT_DELTA_MS, DEFAULT_OMEGA_DB
    p.add_argument("--delta", type=int, default=DEFAULT_DELTA_MS,
                   help=f"Time threshold Δ in ms (default: {DEFAULT_DELTA_MS})")
    p.add_argument("--omega", type=float, default=DEFAULT_OMEGA_DB,
                   help=f"RSSI threshold Ω in dB (default: {DEFAULT_OMEGA_DB})")


def _add_scan_args(p):
    p.add_argument("--log", required=True, help="Scan log holding the client's fingerprint")
    p.add_argument("--client", required=True, help="Client mac")
    p.add_argument("--at", type=int, default=None,
                   help="Use the client's scan at or before this time in ms (default: latest)")


def build_parser():
    from spotex.config import CHECKIN_TTL_MS, DEFAULT_TMAX_S

    parser = argparse.ArgumentParser(
        prog="spotex",
        description="spotex — Wi-Fi proximity rules, fingerprint metrics and group detection",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging to stderr")
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    # spotex simulate
    p_sim = subparsers.add_parser("simulate", help="Simulate a scenario into a scan log")
    p_sim.add_argument("scenario", help="Scenario JSON file")
    p_sim.add_argument("out", help="Output scan log (JSON Lines)")
    p_sim.set_defaults(func=cmd_simulate)

    # spotex rules-check
    p_check = subparsers.add_parser("rules-check", help="Parse a rule file")
    p_check.add_argument("rules", help="Rule file")
    p_check.add_argument("--list", action="store_true",
                         help="Also print each rule's id, predicates and canonical text")
    p_check.set_defaults(func=cmd_rules_check)

    # spotex replay
    p_replay = subparsers.add_parser("replay", help="Replay a client's scans through rules")
    p_replay.add_argument("rules", help="Rule file")
    p_replay.add_argument("log", help="Scan log (JSON Lines)")
    p_replay.add_argument("--client", required=True, help="Client mac to replay")
    p_replay.add_argument("--attr", action="append", default=[], metavar="KEY=VALUE",
                          help="Integer client attribute for ATTR_GE (repeatable)")
    p_replay.add_argument("--utc", action="store_true",
                          help="Evaluate TIME_BETWEEN in UTC instead of local time")
    _add_group_thresholds(p_replay)
    p_replay.set_defaults(func=cmd_replay)

    # spotex groups
    p_groups = subparsers.add_parser("groups", help="Detect the group a client travelled with")
    p_groups.add_argument("log", help="Scan log (JSON Lines)")
    p_groups.add_argument("--client", required=True, help="Querying client mac")
    p_groups.add_argument("--t0", type=int, default=None,
                          help="Query time in ms (default: client's last scan)")
    p_groups.add_argument("--tmax", type=float, default=DEFAULT_TMAX_S,
                          help=f"Lookback in seconds (default: {DEFAULT_TMAX_S})")
    p_groups.add_argument("--oracle", action="store_true",
                          help="Cross-check against the exhaustive oracle (exit 3 on mismatch)")
    _add_group_thresholds(p_groups)
    p_groups.set_defaults(func=cmd_groups)

    # spotex metrics
    p_metrics = subparsers.add_parser("metrics", help="Fingerprint distance or rank correlation")
    p_metrics.add_argument("log", help="Scan log (JSON Lines)")
    p_metrics.add_argument("--client-a", required=True, help="First client mac")
    p_metrics.add_argument("--client-b", default=None, help="Second client mac")
    p_metrics.add_argument("--metric", default="euclidean",
                           choices=["euclidean", "tanimoto", "spearman"],
                           help="Metric (default: euclidean)")
    p_metrics.add_argument("--knn", type=int, default=None, metavar="K",
                           help="Rank the K clients closest to client A's latest scan")
    p_metrics.set_defaults(func=cmd_metrics)

    # spotex checkin
    p_ci = subparsers.add_parser("checkin", help="Manage a check-in registry")
    p_ci.add_argument("registry", help="Registry file (JSON Lines; created if missing)")
    actions = p_ci.add_subparsers(dest="action", required=True)

    p_add = actions.add_parser("add", help="Check in with a client's fingerprint")
    _add_scan_args(p_add)
    p_add.add_argument("--identity", required=True, help="Opaque identity string")
    p_add.add_argument("--ttl", type=int, default=CHECKIN_TTL_MS,
                       help=f"Lifetime in ms (default: {CHECKIN_TTL_MS})")
    p_add.add_argument("--attr", action="append", default=[], metavar="KEY=VALUE",
                       help="Integer attribute (repeatable)")
    p_add.add_argument("--now", type=int, default=None,
                       help="Registration time in ms (default: the scan's time)")

    p_near = actions.add_parser("nearby", help="List check-ins near a client's fingerprint")
    _add_scan_args(p_near)
    p_near.add_argument("--metric", default="euclidean", choices=["euclidean", "tanimoto"])
    p_near.add_argument("--threshold", type=float, required=True, help="Maximum distance")
    p_near.add_argument("--now", type=int, default=None,
                        help="Query time in ms (default: the scan's time)")
    p_near.add_argument("--exclude", default=None, help="Identity to leave out")

    p_exp = actions.add_parser("expire", help="Remove expired check-ins")
    p_exp.add_argument("--now", type=int, required=True, help="Current time in ms")
    p_ci.set_defaults(func=cmd_checkin)

    # spotex info
    p_info = subparsers.add_parser("info", help="Show defaults, predicates and bundled data")
    p_info.set_defaults(func=cmd_info)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_INPUT_ERROR

    try:
        return args.func(args)
    except (SpotexError, OSError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
