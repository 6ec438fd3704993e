"""
Simulation metrics: a stream of JSON records and the final report.

Every record carries `minute`, `phase` and `type`. Phases follow the order
in which the simulator works through a minute:

  0 adversary, 1 spam, 2 poll, 3 tick, 4 burst, 5 probe, 6 settle

The stream ends with a single `summary` record holding the report.
"""

import json
from dataclasses import asdict, dataclass, field


__all__ = (
    'MetricsRecorder',
    'MetricsReport',
    'NoSuchCampaign',
    'PHASES',
    'convergence',
    'dumps',
    'format_table',
    'summary_row',
)

PHASES = ('adversary', 'spam', 'poll', 'tick', 'burst', 'probe', 'settle')


class NoSuchCampaign(LookupError):
    """
    No client reported the URL.
    """


def dumps(obj):
    return json.dumps(obj, sort_keys=True, separators=(',', ':'))


class MetricsRecorder(object):
    """
    Collects records in order. `sink`, if given, receives each record as it
    is made.
    """

    def __init__(self, sink=None):
        self.records = []
        self.sink = sink

    def record(self, minute, phase, kind, **fields):
        fields.update(minute=minute, phase=PHASES.index(phase), type=kind)
        self.records.append(fields)
        if self.sink is not None:
            self.sink(fields)
        return fields

    def lines(self, report=None):
        for record in self.records:
            yield dumps(record)
        if report is not None:
            yield dumps(dict(report.to_dict(), type='summary'))

    def write(self, fh, report=None):
        for line in self.lines(report):
            fh.write(line)
            fh.write('\n')


@dataclass
class MetricsReport:
    seed: int
    duration: int
    campaigns: list = field(default_factory=list)
    sites: list = field(default_factory=list)
    clients: list = field(default_factory=list)
    adversaries: list = field(default_factory=list)
    reporters: dict = field(default_factory=dict)
    totals: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return dumps(self.to_dict())

    def campaigns_for(self, url):
        return [c for c in self.campaigns if c['url'] == url]

    @property
    def campaigns_launched(self):
        return sum(1 for c in self.campaigns if c['launched'])


def convergence(report, url):
    """
    Share of the clients that reported `url` who ended up registered on the
    single most popular start for it.
    """
    url = url.render() if hasattr(url, 'render') else url
    reporters = report.reporters.get(url, 0)
    if not reporters:
        raise NoSuchCampaign(url)
    largest = max((c['honest_comrades'] for c in report.campaigns_for(url)),
                  default=0)
    return min(1.0, largest / reporters)


def summary_row(report):
    """
    The one-line digest printed by the command line runner.
    """
    attacks = {}
    for adversary in report.adversaries:
        attacks[adversary['name']] = adversary['outcome']
    return {
        'seed': report.seed,
        'campaigns_launched': report.campaigns_launched,
        'convergence': {url: round(convergence(report, url), 4)
                        for url in sorted(report.reporters)},
        'traffic_cost': round(report.totals.get('traffic_cost', 0.0), 6),
        'lost_revenue': round(report.totals.get('lost_revenue', 0.0), 2),
        'attacks': attacks,
    }


def format_table(rows):
    """
    Render summary rows as a fixed-width text table.
    """
    header = ('seed', 'launched', 'convergence', 'traffic cost',
              'lost revenue', 'attacks')
    body = []
    for row in rows:
        conv = ', '.join('%s=%.2f' % (url, value)
                         for url, value in row['convergence'].items()) or '-'
        attacks = ', '.join(
            '%s:%s' % (name, ','.join('%s=%s' % kv for kv in sorted(
                outcome.items())))
            for name, outcome in sorted(row['attacks'].items())) or '-'
        body.append((str(row['seed']), str(row['campaigns_launched']), conv,
                     '%.6f' % row['traffic_cost'],
                     '%.2f' % row['lost_revenue'], attacks))
    widths = [max(len(r[i]) for r in [header] + body)
              for i in range(len(header))]
    lines = []
    for r in [header] + body:
        lines.append('  '.join(
            cell.ljust(width) for cell, width in zip(r, widths)).rstrip())
    return '\n'.join(lines)
