"""
Turn spam mail text into the canonical URLs worth campaigning against.

The pipeline is extract -> unwrap redirectors -> canonicalize -> drop
whitelisted and footer hosts -> ask the user. Each URL that survives is
handed to the campaign coordinator on its own.
"""

import logging
import re
from dataclasses import dataclass, field
from urllib.parse import urlsplit


__all__ = (
    'CanonicalUrl',
    'EmailDocument',
    'InvalidUrl',
    'RedirectLoop',
    'RedirectMap',
    'TargetError',
    'accept_all',
    'canonicalize',
    'confirm_hosts',
    'evaluate',
    'extract_urls',
    'is_whitelisted',
    'load_whitelist',
    'parse_whitelist',
    'reject_all',
    'unwrap_redirects',
)

log = logging.getLogger(__name__)

_URL_RE = re.compile(r"""https?://[^\s<>"'`{}|\\^]+""", re.IGNORECASE)
_TRAILING = '.,!;'
_DEFAULT_PORTS = {'http': 80, 'https': 443}


class TargetError(Exception):
    """
    Base class for URL handling failures.
    """


class InvalidUrl(TargetError):
    """
    Not an absolute http(s) URL with a usable host.
    """


class RedirectLoop(TargetError):
    """
    A redirector chain that comes back on itself.
    """


@dataclass(frozen=True)
class EmailDocument:
    body: str
    footer_hint: str = None


@dataclass(frozen=True)
class CanonicalUrl:
    scheme: str
    host: str
    path: str = '/'
    port: int = None

    def render(self):
        host = '[%s]' % self.host if ':' in self.host else self.host
        netloc = host if self.port is None else '%s:%d' % (host, self.port)
        return '%s://%s%s' % (self.scheme, netloc, self.path)

    def __str__(self):
        return self.render()


@dataclass
class RedirectMap:
    """
    Short URL -> destination, standing in for live redirector lookups.
    """

    mapping: dict = field(default_factory=dict)

    def lookup(self, url):
        if url in self.mapping:
            return self.mapping[url]
        bare = url.split('#', 1)[0].split('?', 1)[0]
        return self.mapping.get(bare)


def extract_urls(mail):
    """
    All http(s) URLs in the body, in order of first appearance, with
    trailing sentence punctuation removed.
    """
    seen = {}
    for match in _URL_RE.finditer(mail.body):
        url = match.group(0).rstrip(_TRAILING)
        if url and url not in seen:
            seen[url] = None
    return list(seen)


def unwrap_redirects(url, redirects, max_depth=8):
    """
    Follow the redirect map from `url` until an unmapped URL is reached or
    `max_depth` hops have been taken.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    visited = [url]
    current = url
    for _ in range(max_depth):
        target = redirects.lookup(current)
        if target is None:
            break
        if target in visited:
            raise RedirectLoop(' -> '.join(visited + [target]))
        visited.append(target)
        current = target
    return current


def canonicalize(url):
    """
    Lowercase scheme and host; drop userinfo, default port, query and
    fragment; strip the trailing slash from non-root paths.
    """
    try:
        parts = urlsplit(url.strip())
        port = parts.port
    except ValueError as exc:
        raise InvalidUrl("%r: %s" % (url, exc)) from exc
    scheme = parts.scheme.lower()
    if scheme not in _DEFAULT_PORTS:
        raise InvalidUrl("%r: not an http(s) URL" % (url,))
    host = (parts.hostname or '').rstrip('.')
    if not host:
        raise InvalidUrl("%r: no host" % (url,))
    if not host.isascii():
        raise InvalidUrl("%r: host is not ASCII" % (url,))
    if port == _DEFAULT_PORTS[scheme]:
        port = None
    path = parts.path or '/'
    if len(path) > 1:
        path = path.rstrip('/') or '/'
    return CanonicalUrl(scheme, host.lower(), path, port)


def is_whitelisted(host, whitelist):
    """
    Whether `host` equals a whitelisted suffix or is a subdomain of one.
    """
    host = host.lower()
    for suffix in whitelist:
        if host == suffix or host.endswith('.' + suffix):
            return True
    return False


def parse_whitelist(lines):
    """
    One host suffix per line; blank lines and '#' comments are ignored.
    """
    hosts = []
    for line in lines:
        line = line.split('#', 1)[0].strip().lower().rstrip('.')
        if line and line not in hosts:
            hosts.append(line)
    return hosts


def load_whitelist(path):
    with open(path, 'r', encoding='utf-8') as fh:
        return parse_whitelist(fh)


def accept_all(url):
    return True


def reject_all(url):
    return False


def confirm_hosts(hosts):
    """
    A confirmation policy that accepts only the listed hosts.
    """
    hosts = frozenset(h.lower() for h in hosts)

    def confirm(url):
        return url.host in hosts
    return confirm


def _footer_hosts(mail):
    if not mail.footer_hint:
        return []
    hosts = []
    for raw in extract_urls(EmailDocument(mail.footer_hint)):
        try:
            hosts.append(canonicalize(raw).host)
        except InvalidUrl:
            pass
    return hosts


def evaluate(mail, redirects, whitelist, confirm=accept_all, max_depth=8):
    """
    Run the whole pipeline over one mail. Failures on individual URLs are
    logged and the URL dropped; the rest of the mail is still evaluated.
    """
    excluded = list(whitelist) + _footer_hosts(mail)
    targets = []
    for raw in extract_urls(mail):
        try:
            url = canonicalize(unwrap_redirects(raw, redirects, max_depth))
        except TargetError as exc:
            log.warning("dropping %s: %s", raw, exc)
            continue
        if is_whitelisted(url.host, excluded):
            log.debug("%s is whitelisted", url)
            continue
        if url in targets:
            continue
        if not confirm(url):
            log.info("user declined %s", url)
            continue
        targets.append(url)
    return targets
