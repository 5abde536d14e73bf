"""Report templates for the validation suite"""

from datetime import datetime
from typing import List, Optional

from jinja2 import Template

from ..core.models import OracleResult

JUNIT_REPORT = """<?xml version="1.0" encoding="UTF-8"?>
<testsuite name="{{ suite }}" tests="{{ results|length }}" failures="{{ failures }}" errors="0" time="{{ '%.3f'|format(total_seconds) }}" timestamp="{{ timestamp }}">
{% for r in results %}  <testcase classname="{{ suite }}" name="{{ r.name }}" time="{{ '%.3f'|format(r.seconds) }}">
{% if not r.passed %}    <failure message="residual {{ '%.6g'|format(r.residual) }} exceeds threshold {{ '%.6g'|format(r.threshold) }}">{{ r.details }}</failure>
{% endif %}  </testcase>
{% endfor %}</testsuite>
"""

SUMMARY_TEXT = """{{ suite }}: {{ passed }}/{{ results|length }} oracles passed
{% for r in results %}  [{{ 'PASS' if r.passed else 'FAIL' }}] {{ '%-28s'|format(r.name) }} residual={{ '%.4g'|format(r.residual) }} threshold={{ '%.4g'|format(r.threshold) }}
{% endfor %}"""


def render_junit(suite: str, results: List[OracleResult], timestamp: Optional[str] = None) -> str:
    """JUnit XML for CI dashboards"""
    template = Template(JUNIT_REPORT, autoescape=True)
    return template.render(
        suite=suite,
        results=results,
        failures=sum(1 for r in results if not r.passed),
        total_seconds=sum(r.seconds for r in results),
        timestamp=timestamp or datetime.now().strftime("%Y-%m-%dT%H:%M:%S"),
    )


def render_summary(suite: str, results: List[OracleResult]) -> str:
    template = Template(SUMMARY_TEXT)
    return template.render(suite=suite, results=results, passed=sum(1 for r in results if r.passed))
