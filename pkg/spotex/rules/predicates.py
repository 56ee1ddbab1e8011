"""The predicate vocabulary of the rules DSL.

Each class checks one piece of the evaluation context: the current scan,
the local wall clock, the client's identity and attributes, its visit
history, or the proximity log.
"""

import re
from datetime import time

from spotex.errors import InvalidIntervalError, ProximityLogRequiredError
from spotex.proximity.groups import in_group_of
from spotex.radio.fingerprint import is_mac, normalize_mac
from spotex.rules.base import PredicateDef


_HHMM_RE = re.compile(r'^([01]\d|2[0-3]):([0-5]\d)$')


def parse_hhmm(text: str) -> time:
    m = _HHMM_RE.match(text)
    return time(int(m.group(1)), int(m.group(2)))


class IsVisible(PredicateDef):
    """IS_VISIBLE(ssid): some access point in the scan broadcasts this SSID."""

    name = "IS_VISIBLE"
    arg_types = (str,)

    def holds(self, args, ctx, rule_id):
        return args[0] in ctx.scan.ssids


class IsVisibleMac(PredicateDef):
    """IS_VISIBLE_MAC(mac): the access point with this MAC is in the scan."""

    name = "IS_VISIBLE_MAC"
    arg_types = (str,)

    def check_values(self, args, line, column):
        if not is_mac(args[0]):
            raise self._error(f"invalid mac {args[0]!r}", line, column)

    def holds(self, args, ctx, rule_id):
        return normalize_mac(args[0]) in ctx.scan.macs


class RssiIn(PredicateDef):
    """RSSI_IN(ssid, lo, hi): an AP with this SSID is heard at lo <= rssi <= hi dBm."""

    name = "RSSI_IN"
    arg_types = (str, int, int)

    def check_values(self, args, line, column):
        _, lo, hi = args
        if lo > hi:
            raise InvalidIntervalError(f"RSSI_IN interval [{lo}, {hi}] has lo > hi",
                                       line, column)

    def holds(self, args, ctx, rule_id):
        ssid, lo, hi = args
        return any(lo <= o.rssi <= hi for o in ctx.scan.with_ssid(ssid))


class TimeBetween(PredicateDef):
    """TIME_BETWEEN('HH:MM', 'HH:MM'): local time of day in [start, end), wrapping past midnight."""

    name = "TIME_BETWEEN"
    arg_types = (str, str)

    def check_values(self, args, line, column):
        for value in args:
            if not _HHMM_RE.match(value):
                raise self._error(f"expected 'HH:MM', got {value!r}", line, column)

    def holds(self, args, ctx, rule_id):
        start, end = parse_hhmm(args[0]), parse_hhmm(args[1])
        now = ctx.now.time()
        if start < end:
            return start <= now < end
        if start > end:
            return now >= start or now < end
        return False


class ClientIs(PredicateDef):
    """CLIENT_IS(mac): the evaluating client has this MAC."""

    name = "CLIENT_IS"
    arg_types = (str,)

    def check_values(self, args, line, column):
        if not is_mac(args[0]):
            raise self._error(f"invalid mac {args[0]!r}", line, column)

    def holds(self, args, ctx, rule_id):
        return ctx.client == normalize_mac(args[0])


class FirstVisit(PredicateDef):
    """FIRST_VISIT(): this rule's antecedent has never held before for this client."""

    name = "FIRST_VISIT"
    arg_types = ()

    def holds(self, args, ctx, rule_id):
        return not ctx.history.seen(ctx.client, rule_id)


class InGroupOf(PredicateDef):
    """IN_GROUP_OF(n, t): the client travelled with at least n people (itself included) for t seconds."""

    name = "IN_GROUP_OF"
    arg_types = (int, int)

    def check_values(self, args, line, column):
        n, t = args
        if n < 1:
            raise self._error(f"group size must be >= 1, got {n}", line, column)
        if t < 1:
            raise self._error(f"duration must be >= 1 s, got {t}", line, column)

    def holds(self, args, ctx, rule_id):
        if ctx.log is None:
            raise ProximityLogRequiredError()
        n, t = args
        return in_group_of(ctx.log, ctx.client, n, t, ctx.scan.t,
                           delta=ctx.delta, omega=ctx.omega)


class AttrGe(PredicateDef):
    """ATTR_GE(key, value): the client attribute exists and is >= value."""

    name = "ATTR_GE"
    arg_types = (str, int)

    def holds(self, args, ctx, rule_id):
        key, value = args
        have = ctx.attrs.get(key)
        return have is not None and have >= value


ALL_PREDICATES = [
    IsVisible(),
    IsVisibleMac(),
    RssiIn(),
    TimeBetween(),
    ClientIs(),
    FirstVisit(),
    InGroupOf(),
    AttrGe(),
]
