from pathlib import Path

from opentelemetry.exporter.prometheus import PrometheusMetricReader
from prometheus_client import REGISTRY, write_to_textfile


def reader() -> PrometheusMetricReader:
    return PrometheusMetricReader()


def write(path: Path) -> None:
    """Dump the current counters in the text exposition format."""
    path.parent.mkdir(parents=True, exist_ok=True)
    write_to_textfile(str(path), REGISTRY)
