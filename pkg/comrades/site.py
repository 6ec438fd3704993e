"""
The advertised website under campaign load, and what the load costs it.

Response time follows a quadratic congestion curve capped at the timeout::

    response_time(load) = min(timeout,
                              base_latency * (1 + (load / capacity) ** 2))

so the load that pushes latency to a given multiple of the baseline is easy
to work out by hand.
"""

import logging
from dataclasses import dataclass, field


__all__ = (
    'GIB',
    'MinuteTraffic',
    'SettledMinute',
    'TargetSite',
    'TrafficLedger',
    'probe',
    'response_time',
    'send_opt_out_burst',
    'settle_minute',
)

log = logging.getLogger(__name__)

GIB = 2 ** 30


@dataclass(frozen=True)
class TargetSite:
    url: object
    base_latency: float = 100.0
    capacity: float = 600.0
    timeout: float = 5000.0
    request_bytes: int = 2048
    cost_per_gib: float = 0.05
    visitor_rate: int = 10
    revenue_per_visit: float = 0.5
    patience: float = 1000.0
    capacity_changes: tuple = ()

    def __post_init__(self):
        if self.base_latency <= 0:
            raise ValueError("base_latency must be positive")
        if self.capacity < 1:
            raise ValueError("capacity must be at least 1")
        if self.timeout <= self.base_latency:
            raise ValueError("timeout must exceed base_latency")
        for minute, capacity in self.capacity_changes:
            if capacity < 1:
                raise ValueError(
                    "capacity change at minute %d below 1" % minute)

    def capacity_at(self, minute):
        """
        Capacity in force at `minute`, after any owner upgrades.
        """
        capacity = self.capacity
        for at, value in sorted(self.capacity_changes):
            if at <= minute:
                capacity = value
        return capacity


@dataclass
class MinuteTraffic:
    opt_out_requests: int = 0
    probe_requests: int = 0
    visitors_served: int = 0
    visitors_lost: int = 0

    @property
    def campaign_requests(self):
        return self.opt_out_requests + self.probe_requests


@dataclass(frozen=True)
class SettledMinute:
    minute: int
    response_time: float
    traffic_bytes: int
    traffic_cost: float
    lost_revenue: float


@dataclass
class TrafficLedger:
    """
    Per-minute traffic at one site.
    """

    minutes: dict = field(default_factory=dict)

    def __getitem__(self, minute):
        return self.minutes.setdefault(minute, MinuteTraffic())

    def totals(self):
        total = MinuteTraffic()
        for traffic in self.minutes.values():
            total.opt_out_requests += traffic.opt_out_requests
            total.probe_requests += traffic.probe_requests
            total.visitors_served += traffic.visitors_served
            total.visitors_lost += traffic.visitors_lost
        return total


def response_time(site, load, minute=None):
    """
    Latency in ms at `load` requests per minute.
    """
    if load < 0:
        raise ValueError("load must not be negative")
    capacity = site.capacity if minute is None else site.capacity_at(minute)
    return min(site.timeout,
               site.base_latency * (1 + (load / capacity) ** 2))


def _load(site, minute, ledger):
    return ledger[minute].campaign_requests + site.visitor_rate


def send_opt_out_burst(site, comrade_count, rate, minute, ledger):
    """
    Log `comrade_count * rate` opt-out requests against `minute`.
    """
    if comrade_count < 0 or rate < 0:
        raise ValueError("comrade count and rate must not be negative")
    if comrade_count and rate:
        ledger[minute].opt_out_requests += comrade_count * rate
    return ledger


def probe(site, minute, ledger):
    """
    Measure the response time under the load already logged for `minute`,
    then count the probe itself as one more request.
    """
    latency = response_time(site, _load(site, minute, ledger), minute)
    ledger[minute].probe_requests += 1
    return latency


def settle_minute(site, minute, ledger):
    """
    Close `minute`: visitors arriving while the site is slower than their
    patience leave, and campaign traffic is billed.
    """
    traffic = ledger[minute]
    latency = response_time(site, _load(site, minute, ledger), minute)
    if latency > site.patience:
        traffic.visitors_lost += site.visitor_rate
    else:
        traffic.visitors_served += site.visitor_rate
    traffic_bytes = traffic.campaign_requests * site.request_bytes
    return SettledMinute(
        minute,
        latency,
        traffic_bytes,
        traffic_bytes * site.cost_per_gib / GIB,
        traffic.visitors_lost * site.revenue_per_visit)
