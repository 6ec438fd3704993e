"""
Scenario files: what a simulation run is made of.

Scenarios are YAML documents whose top-level fields match the attributes of
`Scenario`. Loading collects every problem it finds rather than stopping at
the first, so `comrades validate` can report them all at once. See
docs/scenarios.rst for the full reference.
"""

import dataclasses
import logging
from dataclasses import dataclass, field

import yaml

from comrades.adversary import STRATEGIES, AdversarySpec, Strategy
from comrades.coordinator import CoordinatorConfig, JoinPolicy
from comrades.site import TargetSite
from comrades.target import (
    EmailDocument,
    InvalidUrl,
    RedirectMap,
    accept_all,
    canonicalize,
    confirm_hosts,
    parse_whitelist,
    reject_all,
)
from comrades.trust import TrustConfig
from comrades.usage import UsageWindows, learn_usage_windows


__all__ = (
    'ClientGroup',
    'InvalidScenario',
    'Scenario',
    'SpamInjection',
    'confirm_policy',
    'dump_scenario',
    'load_scenario',
    'parse_scenario',
)

log = logging.getLogger(__name__)

_CONFIRM_POLICIES = {
    'accept_all': accept_all,
    'reject_all': reject_all,
}


class InvalidScenario(ValueError):
    """
    A scenario that cannot be run. `errors` lists `(field, message)` pairs.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__('\n'.join(
            '%s: %s' % (path or '<scenario>', msg)
            for path, msg in self.errors))


@dataclass(frozen=True)
class ClientGroup:
    config: CoordinatorConfig = CoordinatorConfig()
    trust: TrustConfig = TrustConfig()
    count: int = 1
    confirm: object = 'accept_all'


@dataclass(frozen=True)
class SpamInjection:
    minute: int
    clients: tuple
    mail: EmailDocument
    spread: int = 0


@dataclass(frozen=True)
class Scenario:
    seed: int = 0
    duration: int = 1440
    clients: tuple = ()
    target_sites: tuple = ()
    spam_injections: tuple = ()
    redirect_map: RedirectMap = field(default_factory=RedirectMap)
    whitelist: tuple = ()
    adversaries: tuple = ()
    opt_out_rate: int = 6
    dht_latency: int = 0

    @property
    def client_count(self):
        return sum(group.count for group in self.clients)

    def expand_clients(self):
        """
        One `ClientGroup` per client, in client index order.
        """
        expanded = []
        for group in self.clients:
            expanded.extend([group] * group.count)
        return expanded

    def with_seed(self, seed):
        return dataclasses.replace(self, seed=seed)

    def validate(self):
        """
        Cross-field checks. Returns a list of `(field, message)` pairs.
        """
        errors = []
        if self.duration < 1:
            errors.append(('duration', "must be at least 1"))
        if not self.clients:
            errors.append(('clients', "at least one client is required"))
        longest = max((g.config.max_wait for g in self.clients), default=0)
        if self.duration < longest:
            errors.append(('duration', "shorter than the longest max_wait "
                           "(%d)" % longest))
        n = self.client_count
        for i, injection in enumerate(self.spam_injections):
            for index in injection.clients:
                if not 0 <= index < n:
                    errors.append((
                        'spam_injections[%d].clients' % i,
                        "client %d does not exist (%d clients)" % (index, n)))
        for i, spec in enumerate(self.adversaries):
            victim = spec.params.get('victim')
            if victim is not None and not 0 <= victim < n:
                errors.append((
                    'adversaries[%d].params.victim' % i,
                    "client %d does not exist" % victim))
        hosts = [site.url.host for site in self.target_sites]
        for host in sorted(set(h for h in hosts if hosts.count(h) > 1)):
            errors.append(('target_sites', "two sites for host %s" % host))
        return errors

    def to_dict(self):
        """
        A plain, normalized rendering suitable for YAML output.
        """
        return {
            'seed': self.seed,
            'duration': self.duration,
            'opt_out_rate': self.opt_out_rate,
            'dht_latency': self.dht_latency,
            'whitelist': list(self.whitelist),
            'redirect_map': dict(self.redirect_map.mapping),
            'clients': [_group_to_dict(g) for g in self.clients],
            'target_sites': [_site_to_dict(s) for s in self.target_sites],
            'spam_injections': [{
                'minute': s.minute,
                'clients': list(s.clients),
                'spread': s.spread,
                'mail': {'body': s.mail.body,
                         'footer_hint': s.mail.footer_hint},
            } for s in self.spam_injections],
            'adversaries': [{
                'strategy': a.strategy.value,
                'params': dict(a.params),
            } for a in self.adversaries],
        }


def _group_to_dict(group):
    cfg = {}
    for f in dataclasses.fields(CoordinatorConfig):
        if f.name == 'confirm':
            continue
        value = getattr(group.config, f.name)
        if isinstance(value, UsageWindows):
            value = value.to_list()
        elif isinstance(value, JoinPolicy):
            value = value.value
        cfg[f.name] = value
    confirm = group.confirm
    if not isinstance(confirm, str):
        confirm = list(confirm)
    return {
        'count': group.count,
        'confirm': confirm,
        'config': cfg,
        'trust': dataclasses.asdict(group.trust),
    }


def _site_to_dict(site):
    data = dataclasses.asdict(site)
    data['url'] = site.url.render()
    data['capacity_changes'] = [list(c) for c in site.capacity_changes]
    return data


class _Reader(object):
    """
    Pulls typed fields out of plain mappings, noting problems instead of
    raising.
    """

    def __init__(self):
        self.errors = []

    def error(self, path, message):
        self.errors.append((path, message))

    def mapping(self, value, path):
        if value is None:
            return {}
        if not isinstance(value, dict):
            self.error(path, "expected a mapping")
            return {}
        return value

    def sequence(self, value, path):
        if value is None:
            return []
        if not isinstance(value, list):
            self.error(path, "expected a list")
            return []
        return value

    def known(self, data, allowed, path):
        for key in data:
            if key not in allowed:
                self.error(_join(path, key), "unknown field")

    def number(self, data, key, path, default, kind=int, minimum=None):
        if key not in data:
            return default
        value = data[key]
        ok = (not isinstance(value, bool)
              and (isinstance(value, int) if kind is int
                   else isinstance(value, (int, float))))
        if not ok:
            self.error(_join(path, key), "expected %s" % (
                'an integer' if kind is int else 'a number'))
            return default
        if minimum is not None and value < minimum:
            self.error(_join(path, key), "must be at least %s" % minimum)
            return default
        return value

    def text(self, data, key, path, default=None):
        if key not in data:
            return default
        value = data[key]
        if not isinstance(value, str):
            self.error(_join(path, key), "expected a string")
            return default
        return value


def _join(path, key):
    if isinstance(key, int):
        return '%s[%d]' % (path, key)
    return '%s.%s' % (path, key) if path else key


_TOP_LEVEL = tuple(f.name for f in dataclasses.fields(Scenario))


def _windows(reader, value, path):
    pairs = []
    for i, item in enumerate(reader.sequence(value, path)):
        if (not isinstance(item, list) or len(item) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool)
                           for v in item)):
            reader.error(_join(path, i), "expected [start, end]")
            continue
        pairs.append(item)
    try:
        return UsageWindows(pairs)
    except ValueError as exc:
        reader.error(path, str(exc))
        return None


def _config(reader, data, path):
    data = reader.mapping(data, path)
    names = [f.name for f in dataclasses.fields(CoordinatorConfig)
             if f.name != 'confirm']
    reader.known(data, names, path)
    kwargs = {}
    for name in names:
        if name not in data:
            continue
        if name == 'usage_windows':
            windows = _windows(reader, data[name], _join(path, name))
            if windows is not None:
                kwargs[name] = windows
        elif name == 'join_policy':
            try:
                kwargs[name] = JoinPolicy(data[name])
            except ValueError:
                reader.error(_join(path, name), "expected one of %s" % (
                    ', '.join(p.value for p in JoinPolicy)))
        else:
            kwargs[name] = reader.number(data, name, path, None)
            if kwargs[name] is None:
                del kwargs[name]
    try:
        return CoordinatorConfig(**kwargs)
    except ValueError as exc:
        reader.error(path, str(exc))
        return CoordinatorConfig()


def _trust(reader, data, path):
    data = reader.mapping(data, path)
    fields = dataclasses.fields(TrustConfig)
    reader.known(data, [f.name for f in fields], path)
    kwargs = {}
    for f in fields:
        kind = float if f.name == 'alpha' else int
        value = reader.number(data, f.name, path, None, kind)
        if value is not None:
            kwargs[f.name] = value
    try:
        return TrustConfig(**kwargs)
    except ValueError as exc:
        reader.error(path, str(exc))
        return TrustConfig()


def _confirm(reader, value, path):
    if value is None:
        return 'accept_all'
    if isinstance(value, str):
        if value not in _CONFIRM_POLICIES:
            reader.error(path, "expected one of %s or a list of hosts" % (
                ', '.join(_CONFIRM_POLICIES)))
            return 'accept_all'
        return value
    hosts = reader.sequence(value, path)
    if not all(isinstance(h, str) for h in hosts):
        reader.error(path, "hosts must be strings")
        return 'accept_all'
    return tuple(h.lower() for h in hosts)


def confirm_policy(confirm):
    """
    The confirmation callable for a group's `confirm` setting.
    """
    if isinstance(confirm, str):
        return _CONFIRM_POLICIES[confirm]
    return confirm_hosts(confirm)


def _group(reader, data, path):
    data = reader.mapping(data, path)
    reader.known(data, ('count', 'config', 'trust', 'confirm',
                        'usage_activity'), path)
    config = _config(reader, data.get('config'), _join(path, 'config'))
    if 'usage_activity' in data:
        apath = _join(path, 'usage_activity')
        activity = reader.mapping(data['usage_activity'], apath)
        reader.known(activity, ('minutes', 'slot', 'min_observations'), apath)
        minutes = reader.sequence(activity.get('minutes'),
                                  _join(apath, 'minutes'))
        try:
            windows = learn_usage_windows(
                minutes,
                reader.number(activity, 'slot', apath, 60, minimum=1),
                reader.number(activity, 'min_observations', apath, 1,
                              minimum=1))
            config = dataclasses.replace(config, usage_windows=windows)
        except (TypeError, ValueError) as exc:
            reader.error(apath, str(exc))
    return ClientGroup(
        config=config,
        trust=_trust(reader, data.get('trust'), _join(path, 'trust')),
        count=reader.number(data, 'count', path, 1, minimum=1),
        confirm=_confirm(reader, data.get('confirm'),
                         _join(path, 'confirm')))


def _site(reader, data, path):
    data = reader.mapping(data, path)
    names = [f.name for f in dataclasses.fields(TargetSite)]
    reader.known(data, names, path)
    url = reader.text(data, 'url', path)
    if url is None:
        reader.error(_join(path, 'url'), "required")
        return None
    try:
        url = canonicalize(url)
    except InvalidUrl as exc:
        reader.error(_join(path, 'url'), str(exc))
        return None
    kwargs = {'url': url}
    for name in names:
        if name in ('url', 'capacity_changes'):
            continue
        kind = int if name in ('request_bytes', 'visitor_rate') else float
        value = reader.number(data, name, path, None, kind)
        if value is not None:
            kwargs[name] = value
    changes = []
    cpath = _join(path, 'capacity_changes')
    for i, item in enumerate(reader.sequence(
            data.get('capacity_changes'), cpath)):
        where = _join(cpath, i)
        if not isinstance(item, list) or len(item) != 2:
            reader.error(where, "expected [minute, capacity]")
            continue
        minute, capacity = item
        if isinstance(minute, bool) or not isinstance(minute, int) \
                or minute < 0:
            reader.error(where, "minute must be an integer of at least 0")
        elif isinstance(capacity, bool) \
                or not isinstance(capacity, (int, float)):
            reader.error(where, "capacity must be a number")
        else:
            changes.append((minute, capacity))
    kwargs['capacity_changes'] = tuple(changes)
    try:
        return TargetSite(**kwargs)
    except (TypeError, ValueError) as exc:
        reader.error(path, str(exc))
        return None


def _client_indices(reader, value, path, count):
    if value is None or value == 'all':
        return tuple(range(count))
    if isinstance(value, str):
        lo, sep, hi = value.partition('..')
        if sep and lo.strip().isdigit() and hi.strip().isdigit():
            return tuple(range(int(lo), int(hi) + 1))
        reader.error(path, "expected 'all', 'A..B' or a list of indices")
        return ()
    indices = reader.sequence(value, path)
    if not all(isinstance(i, int) and not isinstance(i, bool)
               for i in indices):
        reader.error(path, "client indices must be integers")
        return ()
    return tuple(dict.fromkeys(indices))


def _injection(reader, data, path, count):
    data = reader.mapping(data, path)
    reader.known(data, ('minute', 'clients', 'spread', 'mail'), path)
    mpath = _join(path, 'mail')
    mail = reader.mapping(data.get('mail'), mpath)
    reader.known(mail, ('body', 'footer_hint'), mpath)
    body = reader.text(mail, 'body', mpath)
    if body is None:
        reader.error(_join(mpath, 'body'), "required")
        body = ''
    return SpamInjection(
        minute=reader.number(data, 'minute', path, 0, minimum=0),
        clients=_client_indices(reader, data.get('clients'),
                                _join(path, 'clients'), count),
        mail=EmailDocument(body, reader.text(mail, 'footer_hint', mpath)),
        spread=reader.number(data, 'spread', path, 0, minimum=0))


def _adversary(reader, data, path):
    data = reader.mapping(data, path)
    reader.known(data, ('strategy', 'params'), path)
    name = reader.text(data, 'strategy', path)
    try:
        strategy = Strategy(name)
    except ValueError:
        reader.error(_join(path, 'strategy'), "unknown strategy %r; "
                     "expected one of %s" % (
                         name, ', '.join(s.value for s in Strategy)))
        return None
    ppath = _join(path, 'params')
    params, errors = STRATEGIES[strategy].check(
        reader.mapping(data.get('params'), ppath))
    for key, message in errors:
        reader.error(_join(ppath, key), message)
    return AdversarySpec(strategy, params)


def parse_scenario(data):
    """
    Build a `Scenario` from plain data. Raises `InvalidScenario` listing
    every problem found.
    """
    reader = _Reader()
    data = reader.mapping(data, '')
    reader.known(data, _TOP_LEVEL, '')

    clients = tuple(
        _group(reader, item, _join('clients', i))
        for i, item in enumerate(reader.sequence(
            data.get('clients'), 'clients')))
    count = sum(g.count for g in clients)

    sites = []
    for i, item in enumerate(reader.sequence(
            data.get('target_sites'), 'target_sites')):
        site = _site(reader, item, _join('target_sites', i))
        if site is not None:
            sites.append(site)

    injections = tuple(
        _injection(reader, item, _join('spam_injections', i), count)
        for i, item in enumerate(reader.sequence(
            data.get('spam_injections'), 'spam_injections')))

    adversaries = []
    for i, item in enumerate(reader.sequence(
            data.get('adversaries'), 'adversaries')):
        spec = _adversary(reader, item, _join('adversaries', i))
        if spec is not None:
            adversaries.append(spec)

    redirects = reader.mapping(data.get('redirect_map'), 'redirect_map')
    if not all(isinstance(k, str) and isinstance(v, str)
               for k, v in redirects.items()):
        reader.error('redirect_map', "keys and values must be URLs")
        redirects = {}

    whitelist = reader.sequence(data.get('whitelist'), 'whitelist')
    if not all(isinstance(h, str) for h in whitelist):
        reader.error('whitelist', "hosts must be strings")
        whitelist = []

    scenario = Scenario(
        seed=reader.number(data, 'seed', '', 0, minimum=0),
        duration=reader.number(data, 'duration', '', 1440, minimum=1),
        clients=clients,
        target_sites=tuple(sites),
        spam_injections=injections,
        redirect_map=RedirectMap(dict(redirects)),
        whitelist=tuple(parse_whitelist(whitelist)),
        adversaries=tuple(adversaries),
        opt_out_rate=reader.number(data, 'opt_out_rate', '', 6, minimum=0),
        dht_latency=reader.number(data, 'dht_latency', '', 0, minimum=0))
    if reader.errors:
        raise InvalidScenario(reader.errors)
    errors = scenario.validate()
    if errors:
        raise InvalidScenario(errors)
    return scenario


def load_scenario(path):
    """
    Read and validate a scenario file.
    """
    try:
        with open(path, 'r', encoding='utf-8') as fh:
            data = yaml.safe_load(fh)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = 'line %d, column %d' % (mark.line + 1, mark.column + 1) \
            if mark is not None else ''
        raise InvalidScenario([(where, exc.problem or str(exc))]) from exc
    except yaml.YAMLError as exc:
        raise InvalidScenario([('', str(exc))]) from exc
    except OSError as exc:
        raise InvalidScenario([('', "cannot read %s: %s" % (
            path, exc.strerror))]) from exc
    log.debug("loaded scenario %s", path)
    return parse_scenario(data)


def dump_scenario(scenario):
    return yaml.safe_dump(scenario.to_dict(), sort_keys=False,
                          default_flow_style=None)
