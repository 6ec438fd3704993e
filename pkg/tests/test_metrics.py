import io
import json

from comrades.metrics import (
    MetricsRecorder,
    MetricsReport,
    NoSuchCampaign,
    convergence,
    format_table,
    summary_row,
)

URL = 'http://pills.example/shop'


def _report():
    return MetricsReport(
        seed=4, duration=1440,
        campaigns=[
            {'url': URL, 'start': 100, 'honest_comrades': 3,
             'launched': False},
            {'url': URL, 'start': 200, 'honest_comrades': 6,
             'launched': True},
        ],
        reporters={URL: 8},
        totals={'traffic_cost': 0.25, 'lost_revenue': 12.5})


def test_convergence():
    report = _report()
    assert convergence(report, URL) == 0.75
    assert report.campaigns_launched == 1
    try:
        convergence(report, 'http://other.example/')
        assert False, "Nobody reported that URL"
    except NoSuchCampaign:
        pass


def test_recorder_stream():
    seen = []
    recorder = MetricsRecorder(seen.append)
    recorder.record(0, 'spam', 'spam', client='c0')
    recorder.record(0, 'settle', 'site_minute', site='pills.example')
    assert seen == recorder.records
    assert [r['phase'] for r in seen] == [1, 6]

    fh = io.StringIO()
    recorder.write(fh, _report())
    lines = fh.getvalue().splitlines()
    assert len(lines) == 3
    assert json.loads(lines[0]) == {'client': 'c0', 'minute': 0,
                                    'phase': 1, 'type': 'spam'}
    assert json.loads(lines[-1])['type'] == 'summary'


def test_summary_table():
    row = summary_row(_report())
    assert row['convergence'] == {URL: 0.75}
    assert row['campaigns_launched'] == 1
    lines = format_table([row]).splitlines()
    assert len(lines) == 2
    assert lines[1].split()[:3] == ['4', '1', URL + '=0.75']
    assert lines[1].split()[-1] == '-'
