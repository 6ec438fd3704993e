import random

from comrades.target import (
    CanonicalUrl,
    EmailDocument,
    InvalidUrl,
    RedirectLoop,
    RedirectMap,
    canonicalize,
    confirm_hosts,
    evaluate,
    extract_urls,
    is_whitelisted,
    load_whitelist,
    parse_whitelist,
    reject_all,
    unwrap_redirects,
)


def test_extract_urls():
    mail = EmailDocument(
        "Buy now at http://pills.example/buy. Or https://PILLS.example/buy!\n"
        "Again: http://pills.example/buy, and <http://other.example/x>")
    assert extract_urls(mail) == [
        'http://pills.example/buy',
        'https://PILLS.example/buy',
        'http://other.example/x',
    ]
    assert extract_urls(EmailDocument("no links here")) == []


def test_canonicalize():
    assert canonicalize('HTTP://Pills.Example:80/Buy/?ref=1#top') == \
        CanonicalUrl('http', 'pills.example', '/Buy')
    assert canonicalize('https://pills.example:443') == \
        CanonicalUrl('https', 'pills.example', '/')
    assert canonicalize('https://pills.example:8443/').port == 8443
    assert canonicalize('http://user:pw@pills.example./a').render() == \
        'http://pills.example/a'
    assert canonicalize('http://[2001:db8::1]:8080/').render() == \
        'http://[2001:db8::1]:8080/'


def test_canonicalize_rejects():
    for bad in ('ftp://pills.example/', 'http://', 'mailto:x@y.example',
                'http://p\u00e4llen.example/', 'http://pills.example:99999/'):
        try:
            canonicalize(bad)
            assert False, "%r should be rejected" % bad
        except InvalidUrl:
            pass


def test_canonicalize_is_idempotent():
    rng = random.Random(11)
    hosts = ['Pills.Example', 'a.b.EXAMPLE', '[2001:db8::2]', 'x.example.']
    paths = ['', '/', '/Buy', '/a/b/', '/a//', '/%7Euser']
    for _ in range(500):
        url = '%s://%s%s%s%s' % (
            rng.choice(['http', 'HTTPS']),
            rng.choice(hosts),
            rng.choice(['', ':80', ':443', ':8080']),
            rng.choice(paths),
            rng.choice(['', '?q=1', '#frag']))
        once = canonicalize(url)
        assert canonicalize(once.render()) == once


def test_unwrap_redirects():
    redirects = RedirectMap({
        'http://short.example/a': 'http://middle.example/b',
        'http://middle.example/b': 'http://pills.example/buy',
    })
    assert unwrap_redirects('http://short.example/a?utm=1', redirects) == \
        'http://pills.example/buy'
    assert unwrap_redirects('http://pills.example/', redirects) == \
        'http://pills.example/'
    assert unwrap_redirects('http://short.example/a', redirects,
                            max_depth=1) == 'http://middle.example/b'


def test_redirect_loop():
    redirects = RedirectMap({
        'http://a.example/': 'http://b.example/',
        'http://b.example/': 'http://a.example/',
    })
    try:
        unwrap_redirects('http://a.example/', redirects)
        assert False, "A loop should be detected"
    except RedirectLoop as exc:
        assert 'http://a.example/ -> http://b.example/' in str(exc)


def test_whitelist():
    hosts = parse_whitelist([
        '# providers\n', 'Mail.Example\n', '\n', 'news.example. # ok\n',
        'mail.example\n'])
    assert hosts == ['mail.example', 'news.example']
    assert is_whitelisted('mail.example', hosts)
    assert is_whitelisted('WWW.mail.example', hosts)
    assert not is_whitelisted('evilmail.example', hosts)


def test_load_whitelist(tmp_path):
    path = tmp_path / 'whitelist.txt'
    path.write_text('mail.example\n# comment\nlists.example\n')
    assert load_whitelist(str(path)) == ['mail.example', 'lists.example']


def test_evaluate():
    mail = EmailDocument(
        "Cheap at http://bit.example/x and http://pills.example/buy/.\n"
        "Broken: http://\n"
        "Loop: http://loop.example/\n"
        "--\nSent with http://mail.example/free",
        footer_hint="Sent with http://mail.example/free")
    redirects = RedirectMap({
        'http://bit.example/x': 'http://pills.example/buy',
        'http://loop.example/': 'http://loop.example/',
    })
    targets = evaluate(mail, redirects, ['news.example'])
    assert targets == [canonicalize('http://pills.example/buy')]


def test_evaluate_whitelist_and_confirmation():
    mail = EmailDocument(
        "http://pills.example/a http://news.example/b http://c.example/")
    assert evaluate(mail, RedirectMap(), ['news.example']) == [
        canonicalize('http://pills.example/a'),
        canonicalize('http://c.example/'),
    ]
    assert evaluate(mail, RedirectMap(), [], confirm=reject_all) == []
    assert evaluate(mail, RedirectMap(), [],
                    confirm=confirm_hosts(['C.example'])) == [
        canonicalize('http://c.example/')]


def test_evaluate_empty_mail():
    assert evaluate(EmailDocument(''), RedirectMap(), []) == []
