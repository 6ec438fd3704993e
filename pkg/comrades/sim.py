"""
Deterministic minute-by-minute simulation of a client fleet, the advertised
sites and any adversaries, all sharing one simulated DHT.

Within a minute the work is always done in this order:

  1. adversary actions
  2. spam delivery (target evaluation, then coordinator Steps 1-3)
  3. inbox polls and outgoing challenges
  4. coordinator ticks (launch decisions)
  5. opt-out bursts
  6. probes
  7. site settlement

Every client, adversary and the spam schedule draw from their own random
stream derived from the scenario seed, so adding an adversary never changes
what honest clients draw.
"""

import hashlib
import logging
import random

import simpy

from comrades.adversary import (
    MitmForwarder,
    Separation,
    SybilFlood,
    TimePortal,
    ChallengeFlood,
    adversary_step,
    build_adversary,
)
from comrades.coordinator import Coordinator, NoFeasibleStart
from comrades.crypto import ClientIdentity, Sealer
from comrades.dht import SimulatedDht
from comrades.metrics import MetricsRecorder, MetricsReport, convergence
from comrades.scenario import InvalidScenario, confirm_policy
from comrades.site import (
    TrafficLedger,
    probe,
    send_opt_out_burst,
    settle_minute,
)
from comrades.target import evaluate
from comrades.trust import probe_schedule


__all__ = (
    'Client',
    'Simulation',
    'derive_rng',
    'run',
)

log = logging.getLogger(__name__)

# minutes between sweeps of expired DHT records
DHT_PURGE_INTERVAL = 1440


def derive_rng(seed, label):
    """
    An independent random stream for `label` under `seed`.
    """
    digest = hashlib.sha256(('%d/%s' % (seed, label)).encode('utf-8'))
    return random.Random(int.from_bytes(digest.digest()[:8], 'big'))


class _Watch(object):
    """
    One client's probes of one campaign's target.
    """

    __slots__ = ('campaign', 'site', 'baseline', 'during', 'comrades',
                 'expected')

    def __init__(self, campaign, site, expected):
        self.campaign = campaign
        self.site = site
        self.expected = expected
        self.baseline = []
        self.during = []
        self.comrades = None


class Client(object):
    """
    A simulated client: its coordinator plus the bookkeeping the simulator
    needs to probe and report on it.
    """

    def __init__(self, index, group, coordinator):
        self.index = index
        self.name = 'c%d' % index
        self.group = group
        self.coordinator = coordinator
        self.confirm = confirm_policy(group.confirm)
        self.probes = {}
        self.watched = set()
        self.launched = 0
        self.skipped = 0
        self.verdicts = {'success': 0, 'failure': 0, 'unjudged': 0}

    @property
    def public_key(self):
        return self.coordinator.public_key

    def watch(self, campaign, site, now):
        """
        Schedule the probes of `campaign`, once per campaign however often
        its URL turns up again.
        """
        if campaign in self.watched:
            return False
        self.watched.add(campaign)
        baseline, during = probe_schedule(
            campaign.start, self.coordinator.trust_cfg)
        watch = _Watch(campaign, site, len(baseline))
        for minute in baseline:
            if minute >= now:
                self.probes.setdefault(minute, []).append((watch, False))
        for minute in during:
            self.probes.setdefault(minute, []).append((watch, True))
        return True

    def settle_watch(self, decision):
        """
        Pin the comrade list seen at the launch decision; skipped campaigns
        are still probed and judged.
        """
        for watches in self.probes.values():
            for watch, _ in watches:
                if watch.campaign == decision.campaign:
                    watch.comrades = decision.comrades


class _CampaignStats(object):

    __slots__ = ('url', 'start', 'proposed_by', 'adversarial', 'honest',
                 'adversary_comrades', 'rejected', 'launched_by',
                 'skipped_by')

    def __init__(self, url, start):
        self.url = url
        self.start = start
        self.proposed_by = None
        self.adversarial = False
        self.honest = {}
        self.adversary_comrades = 0
        self.rejected = 0
        self.launched_by = 0
        self.skipped_by = 0

    def to_dict(self):
        return {
            'url': self.url,
            'start': self.start,
            'proposed_by': self.proposed_by,
            'adversarial': self.adversarial,
            'honest_comrades': len(self.honest),
            'comrade_count': len(self.honest) + self.adversary_comrades,
            'joins_rejected_unsuitable': self.rejected,
            'launched_by': self.launched_by,
            'skipped_by': self.skipped_by,
            'launched': self.launched_by > 0,
        }


class Simulation(object):
    """
    One run of a scenario. `sink` receives every metrics record as it is
    made (the CLI writes them straight to the output file).
    """

    def __init__(self, scenario, sink=None):
        errors = scenario.validate()
        if errors:
            raise InvalidScenario(errors)
        self.scenario = scenario
        self.env = simpy.Environment()
        self.metrics = MetricsRecorder(sink)
        groups = scenario.expand_clients()
        longest = max(g.config.max_wait for g in groups)
        self.dht = SimulatedDht(ttl=longest + 1440,
                                latency=scenario.dht_latency)
        self._phase = 'adversary'
        self.clients = [self._make_client(i, g) for i, g in enumerate(groups)]
        self.sites = {site.url.host: site for site in scenario.target_sites}
        self.ledgers = {host: TrafficLedger() for host in self.sites}
        self.site_totals = {host: {
            'traffic_bytes': 0, 'traffic_cost': 0.0, 'lost_revenue': 0.0,
            'saturated_minutes': 0, 'max_response_time': 0.0,
        } for host in self.sites}
        self.adversaries = [
            build_adversary(spec, 'a%d' % i,
                            derive_rng(scenario.seed, 'adversary/%d' % i))
            for i, spec in enumerate(scenario.adversaries)]
        self._adversary_keys = {a.name: dict.fromkeys(a.keys)
                                for a in self.adversaries}
        self._decision_trust = dict.fromkeys(self._adversary_keys, 0)
        self.campaigns = {}
        self.reporters = {}
        self._bursts = []
        self._deliveries = self._schedule_spam()
        self.purged = 0

    def _make_client(self, index, group):
        rng = derive_rng(self.scenario.seed, 'client/%d' % index)
        identity = ClientIdentity.generate(rng)
        client = None

        def listener(kind, **fields):
            self._on_client_event(client, kind, fields)

        def opt_out(campaign, now):
            self._launch(client, campaign, now)

        coordinator = Coordinator(
            identity, group.config, self.dht, rng,
            trust_cfg=group.trust, sealer=Sealer(rng), listener=listener,
            opt_out=opt_out)
        client = Client(index, group, coordinator)
        return client

    def _schedule_spam(self):
        rng = derive_rng(self.scenario.seed, 'spam')
        deliveries = {}
        for injection in self.scenario.spam_injections:
            for index in injection.clients:
                minute = injection.minute + rng.randint(0, injection.spread)
                deliveries.setdefault(minute, []).append(
                    (index, injection.mail))
        for minute in deliveries:
            deliveries[minute].sort(key=lambda item: item[0])
        return deliveries

    @property
    def now(self):
        return int(self.env.now)

    def client_key(self, index):
        return self.clients[index].public_key

    def _stats(self, url, start):
        key = (url, start)
        if key not in self.campaigns:
            self.campaigns[key] = _CampaignStats(url, start)
        return self.campaigns[key]

    def _record(self, kind, **fields):
        return self.metrics.record(self.now, self._phase, kind, **fields)

    def _on_client_event(self, client, kind, fields):
        if kind == 'proposed':
            stats = self._stats(fields['url'], fields['start'])
            if stats.proposed_by is None:
                stats.proposed_by = client.name
        elif kind == 'joined':
            self._stats(fields['url'], fields['start']).honest[
                client.index] = None
        elif kind == 'rejected_unsuitable':
            self._stats(fields['url'], fields['start']).rejected += 1
        elif kind == 'launch_decision':
            stats = self._stats(fields['url'], fields['start'])
            if fields['launched']:
                stats.launched_by += 1
                client.launched += 1
            else:
                stats.skipped_by += 1
                client.skipped += 1
        self._record(kind, client=client.name, **fields)

    def _on_adversary_event(self, event):
        if event['action'] == 'inject_start':
            stats = self._stats(event['url'], event['start'])
            stats.adversarial = True
            if stats.proposed_by is None:
                stats.proposed_by = event['adversary']
        elif event['action'] == 'register_comrades':
            self._stats(event['url'], event['start']).adversary_comrades += \
                event['count']
        self._record('adversary', **event)

    def _launch(self, client, campaign, now):
        site = self.sites.get(campaign.url.host)
        if site is None:
            log.debug("%s: no simulated site for %s", client.name,
                      campaign.url)
            return
        until = campaign.start + client.coordinator.cfg.campaign_duration
        self._bursts.append((site.url.host, until))

    def _count_adversary_trust(self, client, decision):
        trust_db = client.coordinator.trust_db
        for name, keys in self._adversary_keys.items():
            self._decision_trust[name] += trust_db.accumulated_trust(
                pk for pk in decision.comrades if pk in keys)

    def _deliver(self, client, mail):
        now = self.now
        urls = evaluate(mail, self.scenario.redirect_map,
                        self.scenario.whitelist, client.confirm)
        self._record('spam', client=client.name,
                     urls=[url.render() for url in urls])
        for url in urls:
            self.reporters.setdefault(url.render(), {})[client.index] = None
            try:
                joined = client.coordinator.handle_url(url, now)
            except NoFeasibleStart as exc:
                log.info("%s: %s", client.name, exc)
                self._record('no_feasible_start', client=client.name,
                             url=url.render())
                continue
            site = self.sites.get(url.host)
            if site is not None:
                for campaign in joined:
                    client.watch(campaign, site, now)

    def _probe(self, client, now):
        for watch, during in client.probes.pop(now, ()):
            ledger = self.ledgers[watch.site.url.host]
            latency = probe(watch.site, now, ledger)
            (watch.during if during else watch.baseline).append(latency)
            if not during or len(watch.during) < watch.expected:
                continue
            self._judge(client, watch)

    def _judge(self, client, watch):
        coordinator = client.coordinator
        if len(watch.baseline) < watch.expected:
            client.verdicts['unjudged'] += 1
            self._record('unjudged', client=client.name,
                         url=watch.campaign.url.render(),
                         start=watch.campaign.start)
            return
        comrades = watch.comrades
        if comrades is None:
            comrades = coordinator.comrades(watch.campaign, self.now)
        verdict = coordinator.conclude(coordinator.outcome(
            watch.campaign, watch.baseline, watch.during, comrades))
        client.verdicts[verdict.value] += 1

    def step(self, now):
        self._phase = 'adversary'
        for adversary in self.adversaries:
            for event in adversary_step(adversary, now, self.dht, self):
                self._on_adversary_event(event)

        self._phase = 'spam'
        for index, mail in self._deliveries.pop(now, ()):
            self._deliver(self.clients[index], mail)

        self._phase = 'poll'
        for client in self.clients:
            coordinator = client.coordinator
            if now % coordinator.cfg.poll_interval == 0:
                coordinator.poll_inbox(now)
                coordinator.verify_comrades(now)

        self._phase = 'tick'
        for client in self.clients:
            for decision in client.coordinator.tick(now):
                client.settle_watch(decision)
                self._count_adversary_trust(client, decision)

        self._phase = 'burst'
        self._bursts = [(host, until) for host, until in self._bursts
                        if until > now]
        active = {}
        for host, _ in self._bursts:
            active[host] = active.get(host, 0) + 1
        for host, comrades in sorted(active.items()):
            send_opt_out_burst(self.sites[host], comrades,
                               self.scenario.opt_out_rate, now,
                               self.ledgers[host])
            self._record('burst', site=host, comrades=comrades,
                         requests=comrades * self.scenario.opt_out_rate)

        self._phase = 'probe'
        for client in self.clients:
            if now in client.probes:
                self._probe(client, now)

        self._phase = 'settle'
        for host in sorted(self.sites):
            self._settle(host, now)
        if now and now % DHT_PURGE_INTERVAL == 0:
            self.purged += self.dht.purge(now)

    def _settle(self, host, now):
        site = self.sites[host]
        ledger = self.ledgers[host]
        settled = settle_minute(site, now, ledger)
        totals = self.site_totals[host]
        totals['traffic_bytes'] += settled.traffic_bytes
        totals['traffic_cost'] += settled.traffic_cost
        totals['lost_revenue'] += settled.lost_revenue
        totals['max_response_time'] = max(totals['max_response_time'],
                                          settled.response_time)
        if settled.response_time > site.patience:
            totals['saturated_minutes'] += 1
        traffic = ledger[now]
        self._record('site_minute', site=host,
                     opt_out_requests=traffic.opt_out_requests,
                     probe_requests=traffic.probe_requests,
                     visitors_served=traffic.visitors_served,
                     visitors_lost=traffic.visitors_lost,
                     response_time=settled.response_time,
                     traffic_bytes=settled.traffic_bytes,
                     traffic_cost=settled.traffic_cost,
                     lost_revenue=settled.lost_revenue)

    def _clock(self):
        while True:
            self.step(self.now)
            yield self.env.timeout(1)

    def run(self):
        """
        Run the scenario to its end and return the report.
        """
        log.info("running seed %d for %d minutes with %d clients",
                 self.scenario.seed, self.scenario.duration,
                 len(self.clients))
        self.env.process(self._clock())
        self.env.run(until=self.scenario.duration)
        return self.report()

    def _client_report(self, client):
        coordinator = client.coordinator
        verifier = coordinator.verifier
        trust_db = coordinator.trust_db
        return {
            'name': client.name,
            'public_key': client.public_key[:8].hex(),
            'campaigns_joined': len(coordinator.db),
            'launched': client.launched,
            'skipped': client.skipped,
            'verdicts': dict(client.verdicts),
            'challenges_issued': verifier.challenges_issued,
            'solve_attempts': verifier.solve_attempts,
            'challenges_solved': verifier.challenges_solved,
            'hash_evaluations': verifier.hash_evaluations,
            'verified_peers': sum(
                1 for r in trust_db.records.values() if r.verified),
            'dropped': dict(sorted(coordinator.dropped.items())),
            'min_accumulated_trust': trust_db.current_min_accumulated_trust,
            'trust': trust_db.snapshot(),
        }

    def _adversary_report(self, adversary):
        keys = adversary.keys
        honest_joins = sum(
            len(s.honest) for s in self.campaigns.values()
            if s.proposed_by == adversary.name)
        outcome = {}
        if isinstance(adversary, (TimePortal, Separation)):
            outcome['honest_joins_on_injected_starts'] = honest_joins
            outcome['largest_honest_campaign'] = max(
                (len(s.honest) for s in self.campaigns.values()
                 if s.url == adversary.url.render()), default=0)
        if isinstance(adversary, ChallengeFlood):
            victim = self.clients[adversary.params['victim']]
            outcome['victim_solve_attempts'] = \
                victim.coordinator.verifier.solve_attempts
        if isinstance(adversary, (MitmForwarder, SybilFlood)):
            outcome['verified_by_honest'] = sum(
                1 for client in self.clients for pk in keys
                if client.coordinator.trust_db.is_verified(pk))
            outcome['trust_held_by_honest'] = sum(
                client.coordinator.trust_db.accumulated_trust(keys)
                for client in self.clients)
            outcome['trust_at_launch_decisions'] = \
                self._decision_trust[adversary.name]
        return {
            'name': adversary.name,
            'strategy': type(adversary).__name__,
            'identities': len(keys),
            'stats': dict(sorted(adversary.stats.items())),
            'outcome': outcome,
        }

    def report(self):
        campaigns = [self.campaigns[key].to_dict()
                     for key in sorted(self.campaigns)]
        sites = []
        for host in sorted(self.sites):
            totals = self.ledgers[host].totals()
            sites.append(dict(
                self.site_totals[host],
                url=self.sites[host].url.render(),
                opt_out_requests=totals.opt_out_requests,
                probe_requests=totals.probe_requests,
                visitors_served=totals.visitors_served,
                visitors_lost=totals.visitors_lost))
        reporters = {url: len(clients)
                     for url, clients in sorted(self.reporters.items())}
        report = MetricsReport(
            seed=self.scenario.seed,
            duration=self.scenario.duration,
            campaigns=campaigns,
            sites=sites,
            clients=[self._client_report(c) for c in self.clients],
            adversaries=[self._adversary_report(a) for a in self.adversaries],
            reporters=reporters,
            totals={
                'campaigns_launched': sum(1 for c in campaigns
                                          if c['launched']),
                'traffic_cost': sum(s['traffic_cost'] for s in sites),
                'lost_revenue': sum(s['lost_revenue'] for s in sites),
                'hash_evaluations': sum(
                    c.coordinator.verifier.hash_evaluations
                    for c in self.clients),
                'dht_records_purged': self.purged,
            })
        report.totals['convergence'] = {
            url: convergence(report, url) for url in reporters}
        return report


def run(scenario, sink=None):
    """
    Run `scenario` and return its `MetricsReport`.
    """
    return Simulation(scenario, sink).run()
